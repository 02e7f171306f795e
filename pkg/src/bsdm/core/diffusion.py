"""
Módulo de difusão direta com ruído pseudo-fundo.

Em vez do ruído gaussiano padrão, a difusão usa um único campo de ruído
N ~ N(mu, sigma^2), com mu e sigma globais do próprio cubo, compartilhado por
todos os passos. Com isso a cadeia x_t = sqrt(alpha_t) x_{t-1} + sqrt(beta_t) N
tem forma fechada:

    H^t = sqrt(alpha_bar_t) H + gamma_t N
    gamma_t = sqrt(alpha_bar_t) * sum_{j<=t} sqrt(beta_j / alpha_bar_j)

e a remoção de fundo é a inversa dessa expressão.

Nota: a variância da distribuição de H^t aparece na literatura ora como
(1 - alpha_bar_t) sigma^2, ora como (1 - sqrt(alpha_bar_t)) sigma^2. Nada aqui
depende dela: só a forma da média acima é usada.

gamma_t não é monotônico em toda a agenda: a recursão
gamma_t = sqrt(alpha_t) gamma_{t-1} + sqrt(beta_t) se aproxima do ponto fixo
sqrt(beta_t) / (1 - sqrt(alpha_t)), que diminui com beta. Com T=1000 e
lambda=0.02 gamma atinge o máximo antes de t=T e cai depois; já alpha_bar
decresce em toda a agenda.
"""
# Biblioteca padrão
from dataclasses import dataclass
from typing import Optional, Tuple, Union

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import DTypeLike, NDArray

# Módulos locais
from bsdm.config import setting
from bsdm.core.exceptions import ScheduleError
from bsdm.core.hsi_data import HsiCube


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    """
    Tabelas da agenda linear beta_t = lambda * t / T.

    Os arrays são indexados por t - 1 (t em 1..T); use os métodos de acesso
    para trabalhar com t diretamente.
    """
    T: int
    lam: float
    beta: NDArray
    alpha: NDArray
    alpha_bar: NDArray
    gamma: NDArray

    def check_step(self, t: int) -> int:
        if not 1 <= int(t) <= self.T:
            raise ScheduleError(f"diffusion step t={t} outside [1, {self.T}]")
        return int(t)

    def signal_scale(self, t: int) -> float:
        """sqrt(alpha_bar_t) como float Python."""
        return float(np.sqrt(self.alpha_bar[self.check_step(t) - 1]))

    def noise_scale(self, t: int) -> float:
        """gamma_t como float Python."""
        return float(self.gamma[self.check_step(t) - 1])


@dataclass(frozen=True)
class CubeStats:
    """Média e desvio padrão globais do cubo (sigma >= piso)."""
    mu: float
    sigma: float


@dataclass(frozen=True, eq=False)
class NoiseField:
    """Campo de ruído pseudo-fundo com a mesma forma do cubo alvo."""
    values: NDArray
    stats: CubeStats
    seed: Optional[int]


NoiseLike = Union[NoiseField, NDArray]


def make_schedule(T: int, lam: float) -> DiffusionSchedule:
    """
    Constrói a agenda de difusão.

    Args:
        T: Quantidade total de passos (>= 1)
        lam: lambda em (0, 1)

    Returns:
        DiffusionSchedule com beta, alpha, alpha_bar e gamma

    Raises:
        ScheduleError: T < 1 ou lambda fora de (0, 1)
    """
    if int(T) < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not 0.0 < lam < 1.0:
        raise ScheduleError(f"lambda must be in (0, 1), got {lam}")
    steps = np.arange(1, int(T) + 1, dtype=np.float64)
    beta = lam * steps / int(T)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    gamma = np.empty_like(beta)
    # gamma_t = sqrt(alpha_t) gamma_{t-1} + sqrt(beta_t); sem divisão por alpha_bar.
    previous = 0.0
    for index in range(int(T)):
        previous = np.sqrt(alpha[index]) * previous + np.sqrt(beta[index])
        gamma[index] = previous
    return DiffusionSchedule(int(T), float(lam), beta, alpha, alpha_bar, gamma)


def cube_stats(cube: HsiCube) -> CubeStats:
    """Estatísticas globais (variância populacional) de todas as L*B entradas."""
    values = cube.values.astype(np.float64)
    mu = float(values.mean())
    sigma = float(values.std())
    return CubeStats(mu=mu, sigma=max(sigma, setting.BSDM_SIGMA_FLOOR))


def sample_pseudo_noise(
    stats: CubeStats,
    shape: Tuple[int, int],
    seed: Optional[int],
    dtype: DTypeLike = np.float32,
) -> NoiseField:
    """
    Sorteia N ~ N(mu, sigma^2) i.i.d. com a forma dada.

    A mesma semente produz o mesmo campo bit a bit.
    """
    rng = np.random.default_rng(seed)
    values = rng.normal(stats.mu, stats.sigma, size=shape).astype(dtype)
    return NoiseField(values=values, stats=stats, seed=seed)


def _noise_values(noise: NoiseLike, cube: HsiCube) -> NDArray:
    values = noise.values if isinstance(noise, NoiseField) else np.asarray(noise)
    if values.shape != cube.values.shape:
        raise ValueError(f"noise shape {values.shape} != cube shape {cube.values.shape}")
    return values


def diffuse(cube: HsiCube, noise: NoiseLike, sched: DiffusionSchedule, t: int) -> HsiCube:
    """
    Forma fechada: sqrt(alpha_bar_t) H + gamma_t N.

    Raises:
        ScheduleError: t fora de [1, T]
    """
    noise_values = _noise_values(noise, cube)
    values = sched.signal_scale(t) * cube.values + sched.noise_scale(t) * noise_values
    return cube.with_values(values)


def diffuse_stepwise(cube: HsiCube, noise: NoiseLike, sched: DiffusionSchedule, t: int) -> HsiCube:
    """
    Aplica t vezes x_k = sqrt(alpha_k) x_{k-1} + sqrt(beta_k) N com o mesmo N.

    Referência para validar diffuse.
    """
    t = sched.check_step(t)
    noise_values = _noise_values(noise, cube)
    values = cube.values
    for k in range(t):
        values = float(np.sqrt(sched.alpha[k])) * values + float(np.sqrt(sched.beta[k])) * noise_values
    return cube.with_values(values)


def remove_background(
    cube: HsiCube, noise_estimate: NoiseLike, sched: DiffusionSchedule, t: int
) -> HsiCube:
    """
    Inversa da difusão: (H - gamma_t N_hat) / sqrt(alpha_bar_t), sem recorte.

    Raises:
        ScheduleError: t fora de [1, T] ou alpha_bar_t nulo
    """
    noise_values = _noise_values(noise_estimate, cube)
    scale = sched.signal_scale(t)
    if scale == 0.0:
        raise ScheduleError(f"alpha_bar underflows to 0 at t={t}; background removal is undefined")
    values = (cube.values - sched.noise_scale(t) * noise_values) / scale
    return cube.with_values(values)
