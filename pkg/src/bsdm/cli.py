#!/usr/bin/python
"""
BSDM - Main CLI Entry Point

Orquestra o pipeline de supressão de fundo: geração de cenas sintéticas,
treinamento, supressão, detecção, avaliação e os experimentos completos
(pipeline e generalize). Cada execução grava ``<saída>.config.json`` com a
configuração resolvida.

Códigos de saída: 0 sucesso, 1 erro de uso/configuração/formato, 2 falha numérica.
"""

# Biblioteca padrão
import os
import signal
import sys
from argparse import BooleanOptionalAction, Namespace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

# Módulos locais
from bsdm.config import setting
from bsdm.core.auto_module import AutoModulo
from bsdm.core.detection import DetectionMap, load_map, normalize_map, save_map
from bsdm.core.exceptions import BsdmError, ConfigError
from bsdm.core.filelocal import FileLocal, build_model
from bsdm.core.help_modules import discover_modules, show_detectors
from bsdm.core.hsi_data import (
    HsiCube, SceneConfig, load_cube, load_mask, normalize_cube, save_cube, save_mask, synth_scene,
)
from bsdm.core.logger import logger
from bsdm.core.metrics import roc, separability, summary_metrics
from bsdm.core.output_formatter import (
    LOSS_HEADER, METRIC_HEADER, REPORT_HEADER, OutputFormatter, write_evaluation,
)
from bsdm.core.style_cli import RawDescriptionHelpFormatter, RichArgumentParser, StyleCli
from bsdm.core.suppression import suppress_trace
from bsdm.core.thread_process import ThreadProcess
from bsdm.core.training import Checkpoint, TrainConfig, load_checkpoint, save_checkpoint, train

CLI = StyleCli()
FILE = FileLocal()


def quit_process(signal, frame) -> None:
    """
    Manipula a interrupção do processo por SIGINT (Ctrl+C).
    """
    try:
        CLI.console.log(" [!] Interrompido pelo usuário (Ctrl+C)")
    except Exception:
        print(" [!] Processo interrompido pelo usuário")
    os._exit(130)


def mask_path(out: str) -> Path:
    return Path(f"{out}.mask.pgm")


def _echo(out: Any, command: str, args: Namespace, **resolved: Any) -> None:
    arguments = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in vars(args).items()
        if key != "handler"
    }
    FILE.echo_config(out, {
        "command": command,
        "version": setting.__version__,
        "arguments": arguments,
        "threads": args.threads,
        "deterministic": args.deterministic,
        **resolved,
    })


def _train_config(args: Namespace, base: Optional[Dict[str, Any]] = None) -> TrainConfig:
    """TrainConfig a partir do arquivo (--config) e das flags informadas."""
    data = dict(base or {})
    if getattr(args, "config", None):
        data.update(FILE.open_config(args.config))
    overrides = {
        "epochs": getattr(args, "epochs", None),
        "t_train": getattr(args, "t", None) if getattr(args, "command", "") == "train" else None,
        "T": getattr(args, "T", None),
        "lambda": getattr(args, "lam", None),
        "lr_init": getattr(args, "lr_init", None),
        "lr_final": getattr(args, "lr_final", None),
        "stat_layers": getattr(args, "stat_layers", None),
        "seed": getattr(args, "seed", None),
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    if getattr(args, "no_stat_offset", False):
        data["stat_offset"] = False
    return build_model(TrainConfig, data)


def default_K(method: str) -> int:
    """K padrão: detectores baseados em modelo usam mais iterações que os guiados por dados."""
    return setting.BSDM_INFER_COUNT_DATA if method == "ae" else setting.BSDM_INFER_COUNT_MODEL


def run_detector(method: str, cube: HsiCube, pool: ThreadProcess, seed: int = 0) -> DetectionMap:
    """Carrega ``det:<method>`` via AutoModulo e executa no cubo."""
    module = AutoModulo(f"det:{method}").load_module()
    module.options.update({"data": cube, "pool": pool, "seed": seed})
    return module.run()


def evaluate(detection: DetectionMap, mask, out: Optional[Path] = None) -> Dict[str, float]:
    """Métricas do mapa; com out, grava os três CSVs de avaliação."""
    normalized = normalize_map(detection)
    curve = roc(normalized, mask)
    stats = separability(normalized, mask)
    metrics = summary_metrics(curve, stats)
    if out is not None:
        for path in write_evaluation(out, curve, stats, metrics):
            logger.info(f"REPORT: {path} written")
    return metrics


def cmd_synth(args: Namespace, pool: ThreadProcess) -> int:
    data = FILE.open_config(args.config) if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    scene = build_model(SceneConfig, data)
    cube, mask = synth_scene(scene)
    save_cube(cube, args.out)
    save_mask(mask, mask_path(args.out))
    _echo(args.out, "synth", args, scene=scene.model_dump())
    logger.result(f"CUBE: {cube.shape_label} saved to {args.out}")
    logger.result(f"MASK: {mask.anomaly_count} anomaly pixels saved to {mask_path(args.out)}")
    return 0


def cmd_train(args: Namespace, pool: ThreadProcess) -> int:
    config = _train_config(args)
    cube = normalize_cube(load_cube(args.cube))
    ckpt = train(cube, config, pool=pool)
    save_checkpoint(ckpt, args.out)
    loss_path = Path(f"{args.out}.loss.csv")
    FILE.save_csv(loss_path, LOSS_HEADER, OutputFormatter.loss_rows(ckpt.loss_history, config))
    _echo(args.out, "train", args, train=config.echo())
    logger.result(
        f"CKPT: saved to {args.out}; loss {ckpt.loss_history[0]:.6e} -> {ckpt.loss_history[-1]:.6e}"
    )
    return 0


def _suppress(cube: HsiCube, ckpt: Checkpoint, K: int, t: Optional[int], seed: int,
              pool: ThreadProcess) -> Tuple[List[HsiCube], int]:
    step = t if t is not None else ckpt.config.t_train
    return suppress_trace(cube, ckpt, K, step, seed=seed, pool=pool), step


def cmd_suppress(args: Namespace, pool: ThreadProcess) -> int:
    cube = normalize_cube(load_cube(args.cube))
    ckpt = load_checkpoint(args.ckpt)
    K = args.K if args.K is not None else setting.BSDM_INFER_COUNT_MODEL
    trace, step = _suppress(cube, ckpt, K, args.t, args.seed, pool)
    save_cube(trace[-1], args.out)
    if args.trace:
        for k, intermediate in enumerate(trace, start=1):
            save_cube(intermediate, f"{args.out}.k{k}")
    _echo(args.out, "suppress", args, K=K, t=step)
    logger.result(f"CUBE: suppressed {cube.shape_label} (K={K}, t={step}) saved to {args.out}")
    return 0


def cmd_detect(args: Namespace, pool: ThreadProcess) -> int:
    cube = load_cube(args.cube)
    detection = run_detector(args.method, cube, pool, seed=args.seed)
    save_map(detection, args.out, preview=args.preview)
    _echo(args.out, "detect", args)
    logger.result(f"MAP: {args.method} scores for {cube.shape_label} saved to {args.out}")
    return 0


def cmd_eval(args: Namespace, pool: ThreadProcess) -> int:
    detection = load_map(args.map)
    mask = load_mask(args.mask)
    metrics = evaluate(detection, mask, Path(args.out))
    _echo(args.out, "eval", args)
    CLI.console.print(OutputFormatter.metrics_table(
        "metrics", OutputFormatter.metric_rows(metrics), METRIC_HEADER
    ))
    return 0


def _compare_arms(
    method: str,
    test_cube: HsiCube,
    test_mask,
    ckpt: Checkpoint,
    K: int,
    t: Optional[int],
    seed: int,
    out_dir: Path,
    pool: ThreadProcess,
) -> Tuple[List[Tuple[str, str, Dict[str, float]]], int]:
    """Detecta e avalia os braços baseline e suppressed no cubo de teste."""
    baseline = run_detector(method, test_cube, pool, seed=seed)
    save_map(baseline, out_dir / f"baseline_{method}")
    trace, step = _suppress(test_cube, ckpt, K, t, seed, pool)
    save_cube(trace[-1], out_dir / "suppressed")
    suppressed = run_detector(method, trace[-1], pool, seed=seed)
    save_map(suppressed, out_dir / f"suppressed_{method}")
    arms = [
        ("baseline", method, evaluate(baseline, test_mask, out_dir / f"baseline_{method}.csv")),
        ("suppressed", method, evaluate(suppressed, test_mask, out_dir / f"suppressed_{method}.csv")),
    ]
    return arms, step


def _write_report(report: Path, arms) -> None:
    rows = OutputFormatter.report_rows(arms)
    FILE.save_csv(report, REPORT_HEADER, rows)
    CLI.console.print(OutputFormatter.metrics_table("report", rows, REPORT_HEADER))
    logger.info(f"REPORT: {report} written")


def cmd_pipeline(args: Namespace, pool: ThreadProcess) -> int:
    report = Path(args.report)
    out_dir = Path(args.out_dir) if args.out_dir else report.parent
    data = FILE.open_config(args.scene_config) if args.scene_config else {}
    data["seed"] = args.seed
    scene = build_model(SceneConfig, data)
    cube, mask = synth_scene(scene)
    save_cube(cube, out_dir / "scene")
    save_mask(mask, mask_path(out_dir / "scene"))

    config = _train_config(args, base={"seed": args.seed, **({"t_train": args.t} if args.t else {})})
    ckpt = train(cube, config, pool=pool)
    save_checkpoint(ckpt, out_dir / "bsdm")
    K = args.K if args.K is not None else default_K(args.method)
    arms, step = _compare_arms(args.method, cube, mask, ckpt, K, args.t, args.seed, out_dir, pool)
    _write_report(report, arms)
    _echo(report, "pipeline", args, scene=scene.model_dump(), train=config.echo(), K=K, t=step)
    return 0


def cmd_generalize(args: Namespace, pool: ThreadProcess) -> int:
    out_dir = Path(args.out_dir)
    train_cube = normalize_cube(load_cube(args.train_cube))
    test_cube = normalize_cube(load_cube(args.test_cube))
    test_mask = load_mask(args.test_mask)
    if not test_mask.matches(test_cube):
        raise ConfigError("test mask does not match the test cube dimensions")

    config = _train_config(args, base={"seed": args.seed, **({"t_train": args.t} if args.t else {})})
    ckpt = train(train_cube, config, pool=pool)
    save_checkpoint(ckpt, out_dir / "bsdm")
    K = args.K if args.K is not None else default_K(args.method)
    arms, step = _compare_arms(args.method, test_cube, test_mask, ckpt, K, args.t, args.seed, out_dir, pool)
    report = out_dir / "report.csv"
    _write_report(report, arms)
    _echo(report, "generalize", args, train=config.echo(), K=K, t=step,
          train_bands=train_cube.bands, test_bands=test_cube.bands)
    return 0


def cmd_detectors(args: Namespace, pool: ThreadProcess) -> int:
    show_detectors(CLI)
    return 0


def _add_training_flags(parser, with_t: bool = True) -> None:
    parser.add_argument("--epochs", type=int, default=None, metavar=f"<{setting.BSDM_TRAIN_EPOCHS}>", help="Épocas de treinamento")
    if with_t:
        parser.add_argument("--t", type=int, default=None, metavar=f"<{setting.BSDM_TRAIN_STEP}>", help="Passo de difusão t")
    parser.add_argument("--T", type=int, default=None, metavar=f"<{setting.BSDM_DIFFUSION_STEPS}>", help="Total de passos T")
    parser.add_argument("--lambda", dest="lam", type=float, default=None, metavar=f"<{setting.BSDM_DIFFUSION_LAMBDA}>", help="Hiperparâmetro lambda em (0, 1)")
    parser.add_argument("--lr-init", type=float, default=None, help="Taxa de aprendizado inicial")
    parser.add_argument("--lr-final", type=float, default=None, help="Taxa de aprendizado final")
    parser.add_argument("--stat-layers", type=int, default=None, help="Camadas do embedding estatístico")
    parser.add_argument("--no-stat-offset", action="store_true", default=False, help="Desativa o módulo de offset estatístico")


def build_parser() -> RichArgumentParser:
    """Parser com as flags globais e um subcomando por etapa."""
    formatter = lambda prog: RawDescriptionHelpFormatter(prog, max_help_position=60)  # noqa: E731
    parser = RichArgumentParser(prog="bsdm", formatter_class=formatter, description=setting.BANNER_HELP)
    parser.add_argument("-v", "--verbose", metavar="<levels>", default=None,
                        help="Níveis de verbosidade: 1=info, 2=warning, 3=debug, 4=error, 5=exception, all=todos. Ex: -v 1,2")
    parser.add_argument("--threads", "-t", type=int, default=setting.BSDM_THREAD_MAX,
                        metavar=f"<{setting.BSDM_THREAD_MAX}>", help="Threads para blocos de pixels")
    parser.add_argument("--deterministic", action=BooleanOptionalAction, default=setting.BSDM_DETERMINISTIC,
                        help="Ordem fixa de redução (resultado bit a bit reprodutível)")
    parser.add_argument("--log-dir", default=None, help="Grava logs em arquivo neste diretório")
    parser.add_argument("--version", action="version", version=f"%(prog)s {setting.__version__}")
    commands = parser.add_subparsers(dest="command", metavar="<command>", parser_class=RichArgumentParser)
    methods = discover_modules("det")

    synth = commands.add_parser("synth", help="Gera cena sintética (cubo + máscara)")
    synth.add_argument("--config", default=None, help="Arquivo SceneConfig (YAML/JSON)")
    synth.add_argument("--out", required=True, help="Prefixo do cubo de saída")
    synth.add_argument("--seed", type=int, default=None, help="Sobrescreve a semente da cena")
    synth.set_defaults(handler=cmd_synth)

    train_cmd = commands.add_parser("train", help="Treina a rede no cubo")
    train_cmd.add_argument("--cube", required=True, help="Cubo de treino")
    train_cmd.add_argument("--out", required=True, help="Prefixo do checkpoint")
    train_cmd.add_argument("--config", default=None, help="Arquivo TrainConfig (YAML/JSON)")
    train_cmd.add_argument("--seed", type=int, default=None, help="Semente")
    _add_training_flags(train_cmd)
    train_cmd.set_defaults(handler=cmd_train)

    sup = commands.add_parser("suppress", help="Suprime o fundo de um cubo")
    sup.add_argument("--cube", required=True, help="Cubo de entrada")
    sup.add_argument("--ckpt", required=True, help="Checkpoint treinado")
    sup.add_argument("--K", type=int, default=None, metavar=f"<{setting.BSDM_INFER_COUNT_MODEL}>", help="Iterações de inferência")
    sup.add_argument("--t", type=int, default=None, help="Passo t (padrão: t de treino)")
    sup.add_argument("--out", required=True, help="Prefixo do cubo suprimido")
    sup.add_argument("--trace", action="store_true", default=False, help="Grava os K cubos intermediários")
    sup.add_argument("--seed", type=int, default=0, help="Semente da remoção de bandas")
    sup.set_defaults(handler=cmd_suppress)

    det = commands.add_parser("detect", help="Calcula o mapa de detecção")
    det.add_argument("--cube", required=True, help="Cubo de entrada")
    det.add_argument("--method", choices=methods, default="rx", help="Detector")
    det.add_argument("--out", required=True, help="Prefixo do mapa")
    det.add_argument("--preview", action="store_true", default=False, help="Grava prévia P5 de 8 bits")
    det.add_argument("--seed", type=int, default=0, help="Semente (ae)")
    det.set_defaults(handler=cmd_detect)

    ev = commands.add_parser("eval", help="Avalia um mapa contra a máscara")
    ev.add_argument("--map", required=True, help="Mapa de detecção")
    ev.add_argument("--mask", required=True, help="Máscara P5")
    ev.add_argument("--out", required=True, help="CSV de métricas")
    ev.set_defaults(handler=cmd_eval)

    pipe = commands.add_parser("pipeline", help="synth -> train -> baseline vs suppressed")
    pipe.add_argument("--scene-config", default=None, help="Arquivo SceneConfig (YAML/JSON)")
    pipe.add_argument("--seed", type=int, default=0, help="Semente da cena e do treino")
    pipe.add_argument("--report", required=True, help="CSV do relatório")
    pipe.add_argument("--out-dir", default=None, help="Diretório dos artefatos (padrão: do relatório)")
    pipe.add_argument("--method", choices=methods, default="rx", help="Detector")
    pipe.add_argument("--K", type=int, default=None, help="Iterações de inferência")
    _add_training_flags(pipe)
    pipe.set_defaults(handler=cmd_pipeline)

    gen = commands.add_parser("generalize", help="Treina em um cubo e suprime outro")
    gen.add_argument("--train-cube", required=True, help="Cubo de treino")
    gen.add_argument("--test-cube", required=True, help="Cubo de teste")
    gen.add_argument("--test-mask", required=True, help="Máscara do cubo de teste")
    gen.add_argument("--out-dir", required=True, help="Diretório dos artefatos")
    gen.add_argument("--method", choices=methods, default="rx", help="Detector")
    gen.add_argument("--K", type=int, default=None, help="Iterações de inferência")
    gen.add_argument("--seed", type=int, default=0, help="Semente")
    _add_training_flags(gen)
    gen.set_defaults(handler=cmd_generalize)

    dets = commands.add_parser("detectors", help="Lista os detectores disponíveis")
    dets.set_defaults(handler=cmd_detectors)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Executa a CLI e devolve o código de saída.

    Erros de uso do argparse encerram via SystemExit(1).
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.error("a command is required")

    logger.set_styled_console(CLI.console)
    logger.set_verbose_levels(args.verbose)
    if args.log_dir:
        logger.enable_file_logging(Path(args.log_dir))

    try:
        pool = ThreadProcess(max_threads=args.threads, deterministic=args.deterministic)
    except ValueError as e:
        parser.error(str(e))

    try:
        return args.handler(args, pool)
    except BsdmError as e:
        logger.error(f"{type(e).__name__}: {e}")
        CLI.console.print(f"[!] {type(e).__name__}: {e}", markup=False)
        return e.exit_code


def main_cli():
    """
    Main CLI entry point function for setuptools console_scripts.
    """
    signal.signal(signal.SIGINT, quit_process)
    sys.exit(run())


if __name__ == "__main__":
    main_cli()
