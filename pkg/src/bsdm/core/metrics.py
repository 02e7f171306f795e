"""
Métricas de avaliação de mapas de detecção.

Curva ROC com limiar inclusivo (score >= tau), as duas áreas usadas na
comparação entre detectores e as estatísticas de caixa (box-whisker) que
medem a separação entre anomalia e fundo.
"""
# Biblioteca padrão
from dataclasses import dataclass
from typing import Dict, Tuple

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import NDArray

# Módulos locais
from bsdm.config import setting
from bsdm.core.detection import DetectionMap, normalize_map
from bsdm.core.exceptions import ConfigError, MaskFormatError
from bsdm.core.hsi_data import AnomalyMask


@dataclass(frozen=True, eq=False)
class RocSummary:
    """
    Curva ROC varrida do maior limiar para o menor.

    O primeiro limiar é +inf (ancora a curva em pf = pd = 0) e o último é 0
    (pf = pd = 1).
    """
    thresholds: NDArray
    pd: NDArray
    pf: NDArray
    auc_pd_pf: float
    auc_pf_tau: float


@dataclass(frozen=True)
class ClassStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def as_row(self) -> Tuple[float, ...]:
        return self.min, self.q1, self.median, self.q3, self.max, self.mean


@dataclass(frozen=True)
class SeparabilityStats:
    """Estatísticas por classe e gap = q1 da anomalia - q3 do fundo."""
    anomaly: ClassStats
    background: ClassStats
    gap: float


def _split_scores(detection: DetectionMap, mask: AnomalyMask) -> Tuple[NDArray, NDArray]:
    if (detection.height, detection.width) != (mask.height, mask.width):
        raise MaskFormatError(
            f"mask {mask.height}x{mask.width} does not match map {detection.height}x{detection.width}"
        )
    if not detection.normalized:
        detection = normalize_map(detection)
    anomaly = detection.scores[mask.labels]
    background = detection.scores[~mask.labels]
    if anomaly.size == 0 or background.size == 0:
        raise ConfigError(
            f"mask needs both classes: {anomaly.size} anomaly, {background.size} background pixels"
        )
    return anomaly.astype(np.float64), background.astype(np.float64)


def _fraction_at_least(sorted_scores: NDArray, thresholds: NDArray) -> NDArray:
    return (sorted_scores.size - np.searchsorted(sorted_scores, thresholds, side="left")) / sorted_scores.size


def roc(detection: DetectionMap, mask: AnomalyMask) -> RocSummary:
    """
    Curva ROC, AUC(Pd, Pf) e AUC(Pf, tau).

    Mapas não normalizados são normalizados antes da varredura. AUC(Pf, tau)
    usa a grade uniforme de BSDM_ROC_TAU_POINTS pontos em [0, 1] refinada com
    cada score distinto e seu sucessor em ponto flutuante, o que torna a
    integral da função degrau exata.

    Raises:
        ConfigError: Máscara sem anomalias ou sem fundo
        MaskFormatError: Dimensões diferentes do mapa
    """
    anomaly, background = _split_scores(detection, mask)
    anomaly.sort()
    background.sort()

    distinct = np.unique(np.concatenate([anomaly, background, [0.0, 1.0]]))[::-1]
    # Primeiro limiar logo acima de 1 ancora a curva em (0, 0).
    thresholds = np.concatenate([[np.nextafter(1.0, np.inf)], distinct])
    pd = _fraction_at_least(anomaly, thresholds)
    pf = _fraction_at_least(background, thresholds)
    auc_pd_pf = float(np.trapezoid(pd, pf))

    scores = np.unique(background)
    grid = np.unique(np.concatenate([
        np.linspace(0.0, 1.0, setting.BSDM_ROC_TAU_POINTS),
        scores,
        np.clip(np.nextafter(scores, np.inf), 0.0, 1.0),
    ]))
    auc_pf_tau = float(np.trapezoid(_fraction_at_least(background, grid), grid))
    return RocSummary(thresholds, pd, pf, auc_pd_pf, auc_pf_tau)


def _class_stats(values: NDArray) -> ClassStats:
    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return ClassStats(
        min=float(values.min()),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        max=float(values.max()),
        mean=float(values.mean()),
    )


def separability(detection: DetectionMap, mask: AnomalyMask) -> SeparabilityStats:
    """
    Estatísticas de caixa por classe (quartis por interpolação linear).

    Raises:
        ConfigError: Máscara sem anomalias ou sem fundo
    """
    anomaly, background = _split_scores(detection, mask)
    anomaly_stats = _class_stats(anomaly)
    background_stats = _class_stats(background)
    return SeparabilityStats(
        anomaly=anomaly_stats,
        background=background_stats,
        gap=anomaly_stats.q1 - background_stats.q3,
    )


def summary_metrics(curve: RocSummary, stats: SeparabilityStats) -> Dict[str, float]:
    """Métricas escalares exportadas no CSV de avaliação e no relatório."""
    return {
        "auc_pd_pf": curve.auc_pd_pf,
        "auc_pf_tau": curve.auc_pf_tau,
        "gap": stats.gap,
        "background_iqr": stats.background.iqr,
        "anomaly_median": stats.anomaly.median,
        "background_median": stats.background.median,
    }
