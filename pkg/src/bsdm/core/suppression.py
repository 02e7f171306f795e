"""
Supressão de fundo por inferência múltipla.

A saída da rede para o cubo bruto é tratada como ruído de fundo e removida
por remove_background; o processo se repete K vezes com o mesmo t. Cubos de
outro sensor passam por align_bands e reassemble_bands em cada iteração,
então bandas espelhadas sempre copiam o cubo corrente.
"""
# Biblioteca padrão
from typing import List, Optional

# Bibliotecas de terceiros
import numpy as np

# Módulos locais
from bsdm.core.denoiser import DenoiserParams, forward
from bsdm.core.diffusion import DiffusionSchedule, cube_stats, make_schedule, remove_background
from bsdm.core.exceptions import ConfigError, CubeFormatError, NumericError
from bsdm.core.hsi_data import HsiCube, align_bands, reassemble_bands
from bsdm.core.logger import logger
from bsdm.core.thread_process import ThreadProcess
from bsdm.core.training import Checkpoint


def _log_domain_shift(cube: HsiCube, ckpt: Checkpoint) -> None:
    stats = cube_stats(cube)
    logger.info(
        f"domain shift: mu {ckpt.stats.mu:.4f} -> {stats.mu:.4f}, "
        f"sigma {ckpt.stats.sigma:.4f} -> {stats.sigma:.4f}"
    )


def suppress_trace(
    cube: HsiCube,
    ckpt: Checkpoint,
    K: int,
    t: int,
    seed: int = 0,
    pool: Optional[ThreadProcess] = None,
) -> List[HsiCube]:
    """
    Executa K iterações de supressão e devolve todos os cubos intermediários.

    Args:
        cube: Cubo normalizado
        ckpt: Checkpoint treinado
        K: Quantidade de iterações (>= 1)
        t: Passo de difusão usado no embedding e na remoção
        seed: Semente da remoção aleatória de bandas
        pool: Executor por blocos

    Returns:
        Lista com K cubos, cada um com a quantidade de bandas da entrada

    Raises:
        ConfigError: K < 1
        ScheduleError: t fora de [1, T]
        BandAlignmentError: Bandas impossíveis de alinhar
        NumericError: Saída não finita
    """
    if K < 1:
        raise ConfigError(f"K must be >= 1, got {K}")
    schedule = make_schedule(ckpt.config.T, ckpt.config.lam)
    schedule.check_step(t)
    params = ckpt.params
    _log_domain_shift(cube, ckpt)

    trace: List[HsiCube] = []
    current = cube
    for iteration in range(K):
        # Realinha a cada iteração: bandas espelhadas seguem o cubo atual.
        batches, plan = align_bands(current, params.input_bands, seed=seed)
        outputs = [_suppress_once(params, batch, schedule, t, iteration, pool) for batch in batches]
        current = reassemble_bands(outputs, plan)
        trace.append(current)
        logger.debug(
            f"iteration {iteration + 1}/{K} ({len(batches)} batch(es)): "
            f"mean={float(current.values.mean()):.4f} std={float(current.values.std()):.4f}"
        )
    return trace


def _suppress_once(
    params: DenoiserParams,
    batch: HsiCube,
    schedule: DiffusionSchedule,
    t: int,
    iteration: int,
    pool: Optional[ThreadProcess],
) -> HsiCube:
    estimate = forward(params, batch.values, t, pool=pool)
    if not np.all(np.isfinite(estimate)):
        raise NumericError(f"non-finite noise estimate at iteration {iteration + 1}")
    try:
        return remove_background(batch, estimate, schedule, t)
    except CubeFormatError as e:
        raise NumericError(f"non-finite suppressed cube at iteration {iteration + 1}") from e


def suppress(
    cube: HsiCube,
    ckpt: Checkpoint,
    K: int,
    t: int,
    seed: int = 0,
    pool: Optional[ThreadProcess] = None,
) -> HsiCube:
    """Cubo após K iterações de supressão (último elemento de suppress_trace)."""
    return suppress_trace(cube, ckpt, K, t, seed=seed, pool=pool)[-1]
