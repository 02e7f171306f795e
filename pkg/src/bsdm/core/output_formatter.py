"""
Módulo de formatação de saída.

Converte resultados de treinamento e avaliação nas linhas dos CSVs exportados
pela CLI e em tabelas Rich para o console.
"""
# Biblioteca padrão
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

# Bibliotecas de terceiros
from rich.table import Table

# Módulos locais
from bsdm.core.filelocal import FileLocal
from bsdm.core.metrics import RocSummary, SeparabilityStats
from bsdm.core.training import cosine_lr

PathLike = Union[str, Path]

ROC_HEADER = ("tau", "pd", "pf")
SEPARABILITY_HEADER = ("class", "min", "q1", "median", "q3", "max", "mean")
METRIC_HEADER = ("metric", "value")
REPORT_HEADER = ("arm", "method", "auc_pd_pf", "auc_pf_tau", "gap", "background_iqr")
LOSS_HEADER = ("epoch", "loss", "lr")


def _number(value: float) -> str:
    return repr(float(value))


class OutputFormatter:
    """
    Formatadores estáticos dos arquivos de resultado.
    """

    @staticmethod
    def roc_rows(curve: RocSummary) -> Tuple[List[Tuple[str, ...]], str]:
        """
        Linhas (tau, pd, pf) e a linha de resumo comentada com as duas AUCs.
        """
        rows = [
            (_number(tau), _number(pd), _number(pf))
            for tau, pd, pf in zip(curve.thresholds, curve.pd, curve.pf)
        ]
        footer = f"# auc_pd_pf={_number(curve.auc_pd_pf)},auc_pf_tau={_number(curve.auc_pf_tau)}"
        return rows, footer

    @staticmethod
    def separability_rows(stats: SeparabilityStats) -> List[Tuple[str, ...]]:
        return [
            ("anomaly", *(_number(v) for v in stats.anomaly.as_row())),
            ("background", *(_number(v) for v in stats.background.as_row())),
        ]

    @staticmethod
    def metric_rows(metrics: Dict[str, float]) -> List[Tuple[str, str]]:
        return [(name, _number(value)) for name, value in metrics.items()]

    @staticmethod
    def report_rows(arms: Iterable[Tuple[str, str, Dict[str, float]]]) -> List[Tuple[str, ...]]:
        """
        Uma linha por braço do experimento (baseline, suppressed).

        Args:
            arms: Tuplas (braço, método, métricas de summary_metrics)
        """
        return [
            (arm, method, *(_number(metrics[key]) for key in REPORT_HEADER[2:]))
            for arm, method, metrics in arms
        ]

    @staticmethod
    def loss_rows(loss_history: Sequence[float], config: Any) -> List[Tuple[str, ...]]:
        return [
            (str(epoch + 1), _number(loss), _number(cosine_lr(epoch, config)))
            for epoch, loss in enumerate(loss_history)
        ]

    @staticmethod
    def metrics_table(title: str, rows: Sequence[Sequence[str]], header: Sequence[str]) -> Table:
        """Tabela Rich com o mesmo conteúdo de um CSV."""
        table = Table(title=title, show_lines=False)
        for column in header:
            table.add_column(column, justify="left" if column in ("arm", "method", "metric", "class") else "right")
        for row in rows:
            table.add_row(*row)
        return table


def write_evaluation(
    out: PathLike, curve: RocSummary, stats: SeparabilityStats, metrics: Dict[str, float]
) -> List[Path]:
    """
    Grava ``<out>`` (metric,value), ``<out>.roc.csv`` e ``<out>.separability.csv``.

    Returns:
        Caminhos gravados
    """
    files = FileLocal()
    out = Path(out)
    roc_path = Path(f"{out}.roc.csv")
    separability_path = Path(f"{out}.separability.csv")
    files.save_csv(out, METRIC_HEADER, OutputFormatter.metric_rows(metrics))
    rows, footer = OutputFormatter.roc_rows(curve)
    files.save_csv(roc_path, ROC_HEADER, rows, footer=footer)
    files.save_csv(separability_path, SEPARABILITY_HEADER, OutputFormatter.separability_rows(stats))
    return [out, roc_path, separability_path]
