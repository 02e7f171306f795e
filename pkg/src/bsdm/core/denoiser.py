"""
Rede de remoção de ruído f(h; theta).

Camadas residuais totalmente conectadas aplicadas a cada pixel de forma
independente, condicionadas por dois embeddings compartilhados:

- tempo: codificação senoidal de t (128) -> afim -> tanh (512)
- offset estatístico: [média, desvio] do pixel -> camadas afins com tanh (512)

Cada camada residual calcula

    out = W2 tanh(W1 x + b1 + P_t e_t + P_s e_s) + b2 + skip(x)

com skip identidade quando as larguras coincidem, ou projeção afim quando não.
A camada final é linear. Os pesos são guardados na forma (entrada, saída) e
as linhas de pixels são processadas em blocos fixos via ThreadProcess, com
gradientes analíticos exatos (modo reverso) para todos os tensores.
"""
# Biblioteca padrão
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import NDArray

# Módulos locais
from bsdm.config import setting
from bsdm.core.exceptions import BandAlignmentError, ScheduleError
from bsdm.core.thread_process import ThreadProcess, default_pool

GradientSet = Dict[str, NDArray]


@dataclass(eq=False)
class DenoiserParams:
    """
    Parâmetros e arquitetura da rede.

    Attributes:
        input_bands (int): B_train
        hidden (tuple): Larguras de saída das camadas residuais
        inner (int): Largura interna de cada camada residual
        embed (int): Largura dos embeddings de tempo e estatística
        time_features (int): Dimensão da codificação senoidal
        steps (int): T da agenda (t válido em 1..T)
        stat_offset (bool): Se o embedding estatístico participa da rede
        stat_layers (int): Camadas afins do embedding estatístico
        tensors (dict): Tensores nomeados, na ordem de serialização
    """
    input_bands: int
    hidden: Tuple[int, ...] = tuple(setting.BSDM_HIDDEN_WIDTHS)
    inner: int = setting.BSDM_RESIDUAL_WIDTH
    embed: int = setting.BSDM_EMBED_WIDTH
    time_features: int = setting.BSDM_TIME_FEATURES
    steps: int = setting.BSDM_DIFFUSION_STEPS
    stat_offset: bool = True
    stat_layers: int = setting.BSDM_STAT_LAYERS
    tensors: Dict[str, NDArray] = field(default_factory=dict)

    @property
    def layer_dims(self) -> List[Tuple[int, int]]:
        widths = [self.input_bands, *self.hidden]
        return list(zip(widths[:-1], widths[1:]))

    @property
    def dtype(self) -> np.dtype:
        return self.tensors["out.b"].dtype

    def architecture(self) -> Dict[str, Any]:
        return {
            "input_bands": self.input_bands,
            "hidden": list(self.hidden),
            "inner": self.inner,
            "embed": self.embed,
            "time_features": self.time_features,
            "steps": self.steps,
            "stat_offset": self.stat_offset,
            "stat_layers": self.stat_layers,
        }

    def with_tensors(self, tensors: Dict[str, NDArray]) -> "DenoiserParams":
        arch = self.architecture()
        arch["hidden"] = tuple(arch["hidden"])
        return DenoiserParams(**arch, tensors=tensors)


def tensor_shapes(params: DenoiserParams) -> Dict[str, Tuple[int, ...]]:
    """
    Formas esperadas de todos os tensores, na ordem de serialização.
    """
    shapes: Dict[str, Tuple[int, ...]] = {
        "te.w": (params.time_features, params.embed),
        "te.b": (params.embed,),
    }
    if params.stat_offset:
        for k in range(1, params.stat_layers + 1):
            fan_in = 2 if k == 1 else params.embed
            shapes[f"se.w{k}"] = (fan_in, params.embed)
            shapes[f"se.b{k}"] = (params.embed,)
    for i, (din, dout) in enumerate(params.layer_dims):
        shapes[f"res{i}.w1"] = (din, params.inner)
        shapes[f"res{i}.b1"] = (params.inner,)
        shapes[f"res{i}.pt"] = (params.embed, params.inner)
        if params.stat_offset:
            shapes[f"res{i}.ps"] = (params.embed, params.inner)
        shapes[f"res{i}.w2"] = (params.inner, dout)
        shapes[f"res{i}.b2"] = (dout,)
        if din != dout:
            shapes[f"res{i}.ws"] = (din, dout)
            shapes[f"res{i}.bs"] = (dout,)
    shapes["out.w"] = (params.hidden[-1], params.input_bands)
    shapes["out.b"] = (params.input_bands,)
    return shapes


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, int]) -> NDArray:
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def init_params(
    input_bands: int,
    seed: int,
    stat_offset: bool = True,
    stat_layers: Optional[int] = None,
    steps: Optional[int] = None,
    hidden: Optional[Sequence[int]] = None,
    inner: Optional[int] = None,
    embed: Optional[int] = None,
    time_features: Optional[int] = None,
) -> DenoiserParams:
    """
    Inicializa a rede: pesos uniformes em +-sqrt(6/(fan_in+fan_out)), vieses zero.

    Args:
        input_bands: B_train (>= 1)
        seed: Semente; a mesma semente gera os mesmos parâmetros bit a bit
        stat_offset: Inclui o embedding estatístico
        stat_layers: Camadas do embedding estatístico (padrão BSDM_STAT_LAYERS)
        steps: T da agenda
        hidden, inner, embed, time_features: Sobrescrevem a arquitetura padrão

    Returns:
        DenoiserParams em float64
    """
    if input_bands < 1:
        raise BandAlignmentError(f"input band count must be >= 1, got {input_bands}")
    params = DenoiserParams(
        input_bands=input_bands,
        hidden=tuple(hidden or setting.BSDM_HIDDEN_WIDTHS),
        inner=inner or setting.BSDM_RESIDUAL_WIDTH,
        embed=embed or setting.BSDM_EMBED_WIDTH,
        time_features=time_features or setting.BSDM_TIME_FEATURES,
        steps=steps or setting.BSDM_DIFFUSION_STEPS,
        stat_offset=stat_offset,
        stat_layers=stat_layers or setting.BSDM_STAT_LAYERS,
    )
    rng = np.random.default_rng(seed)
    for name, shape in tensor_shapes(params).items():
        if len(shape) == 2:
            params.tensors[name] = glorot_uniform(rng, shape)
        else:
            params.tensors[name] = np.zeros(shape)
    return params


def sinusoidal_features(t: float, count: int = setting.BSDM_TIME_FEATURES) -> NDArray:
    """
    Codificação posicional de t: pares intercalados (sin(t f_k), cos(t f_k)),
    f_k = 10000^(-2k/count).
    """
    k = np.arange(count // 2, dtype=np.float64)
    frequencies = 10000.0 ** (-2.0 * k / count)
    features = np.empty(count, dtype=np.float64)
    features[0::2] = np.sin(t * frequencies)
    features[1::2] = np.cos(t * frequencies)
    return features


def time_embedding(t: int, params: DenoiserParams) -> NDArray:
    """
    Embedding de tempo (vetor de largura embed, entradas em (-1, 1)).

    Raises:
        ScheduleError: t fora de [1, T]
    """
    if not 1 <= int(t) <= params.steps:
        raise ScheduleError(f"time step t={t} outside [1, {params.steps}]")
    features = sinusoidal_features(float(t), params.time_features).astype(params.dtype)
    return np.tanh(features @ params.tensors["te.w"] + params.tensors["te.b"])


def stat_offset_features(pixels: NDArray) -> NDArray:
    """
    [média, desvio populacional] ao longo das bandas.

    Aceita um pixel (B,) ou uma matriz (L, B); retorna (2,) ou (L, 2).
    """
    values = np.asarray(pixels)
    return np.stack([values.mean(axis=-1), values.std(axis=-1)], axis=-1)


def dense_forward(
    tensors: Dict[str, NDArray], prefix: str, count: int, x: NDArray, linear_last: bool = False
) -> List[NDArray]:
    """
    Pilha de camadas afins ``{prefix}.w{k}``/``{prefix}.b{k}`` com tanh.

    Returns:
        Ativações [x, a_1, ..., a_count]
    """
    activations = [x]
    for k in range(1, count + 1):
        pre = activations[-1] @ tensors[f"{prefix}.w{k}"] + tensors[f"{prefix}.b{k}"]
        activations.append(pre if linear_last and k == count else np.tanh(pre))
    return activations


def dense_backward(
    tensors: Dict[str, NDArray],
    prefix: str,
    count: int,
    activations: List[NDArray],
    d_out: NDArray,
    grads: GradientSet,
    linear_last: bool = False,
) -> None:
    """Gradientes de dense_forward acumulados em grads."""
    d = d_out
    for k in range(count, 0, -1):
        if linear_last and k == count:
            d_pre = d
        else:
            d_pre = d * (1.0 - activations[k] ** 2)
        grads[f"{prefix}.w{k}"] = activations[k - 1].T @ d_pre
        grads[f"{prefix}.b{k}"] = d_pre.sum(axis=0)
        if k > 1:
            d = d_pre @ tensors[f"{prefix}.w{k}"].T


def stat_offset_embedding(s: NDArray, params: DenoiserParams) -> NDArray:
    """Embedding estatístico de s (2,) ou (L, 2); entradas em (-1, 1)."""
    return dense_forward(params.tensors, "se", params.stat_layers, np.asarray(s, dtype=params.dtype))[-1]


def _check_width(params: DenoiserParams, pixels: NDArray) -> NDArray:
    if pixels.ndim != 2 or pixels.shape[1] != params.input_bands:
        raise BandAlignmentError(
            f"pixel matrix shape {pixels.shape} does not match input width {params.input_bands}"
        )
    return pixels.astype(params.dtype, copy=False)


def _forward_block(params: DenoiserParams, x: NDArray, e_t: NDArray) -> Tuple[NDArray, Dict[str, Any]]:
    tensors = params.tensors
    cache: Dict[str, Any] = {"inputs": [], "hidden": []}
    if params.stat_offset:
        stat_acts = dense_forward(tensors, "se", params.stat_layers, stat_offset_features(x))
        e_s = stat_acts[-1]
        cache["stat"] = stat_acts
    a = x
    for i, (din, dout) in enumerate(params.layer_dims):
        pre = a @ tensors[f"res{i}.w1"] + tensors[f"res{i}.b1"] + e_t @ tensors[f"res{i}.pt"]
        if params.stat_offset:
            pre = pre + e_s @ tensors[f"res{i}.ps"]
        h = np.tanh(pre)
        skip = a if din == dout else a @ tensors[f"res{i}.ws"] + tensors[f"res{i}.bs"]
        cache["inputs"].append(a)
        cache["hidden"].append(h)
        a = h @ tensors[f"res{i}.w2"] + tensors[f"res{i}.b2"] + skip
    cache["last"] = a
    return a @ tensors["out.w"] + tensors["out.b"], cache


def forward(
    params: DenoiserParams, pixels: NDArray, t: int, pool: Optional[ThreadProcess] = None
) -> NDArray:
    """
    Estimativa de ruído L x B_train para cada pixel.

    Args:
        params: Parâmetros da rede
        pixels: Matriz L x B_train
        t: Passo de difusão em 1..T
        pool: Executor por blocos (padrão sequencial)

    Raises:
        BandAlignmentError: Largura dos pixels diferente de B_train
    """
    pool = pool or default_pool
    x = _check_width(params, pixels)
    e_t = time_embedding(t, params)
    blocks = pool.map_blocks(lambda rows: _forward_block(params, x[rows], e_t)[0], x.shape[0])
    return np.concatenate(blocks, axis=0)


def _backward_block(
    params: DenoiserParams, x: NDArray, target: NDArray, e_t: NDArray, total_rows: int
) -> Tuple[float, GradientSet, NDArray]:
    tensors = params.tensors
    y, cache = _forward_block(params, x, e_t)
    residual = y - target
    squared = float(np.sum(residual * residual))
    grads: GradientSet = {}

    dy = (2.0 / total_rows) * residual
    grads["out.w"] = cache["last"].T @ dy
    grads["out.b"] = dy.sum(axis=0)
    d = dy @ tensors["out.w"].T

    d_et = np.zeros_like(e_t)
    d_es = np.zeros((x.shape[0], params.embed), dtype=x.dtype) if params.stat_offset else None
    e_s = cache["stat"][-1] if params.stat_offset else None
    for i in range(len(params.layer_dims) - 1, -1, -1):
        din, dout = params.layer_dims[i]
        a, h = cache["inputs"][i], cache["hidden"][i]
        grads[f"res{i}.w2"] = h.T @ d
        grads[f"res{i}.b2"] = d.sum(axis=0)
        dz = (d @ tensors[f"res{i}.w2"].T) * (1.0 - h * h)
        dz_sum = dz.sum(axis=0)
        grads[f"res{i}.w1"] = a.T @ dz
        grads[f"res{i}.b1"] = dz_sum
        grads[f"res{i}.pt"] = np.outer(e_t, dz_sum)
        d_et += tensors[f"res{i}.pt"] @ dz_sum
        if params.stat_offset:
            grads[f"res{i}.ps"] = e_s.T @ dz
            d_es += dz @ tensors[f"res{i}.ps"].T
        if din == dout:
            d_skip = d
        else:
            grads[f"res{i}.ws"] = a.T @ d
            grads[f"res{i}.bs"] = d.sum(axis=0)
            d_skip = d @ tensors[f"res{i}.ws"].T
        if i > 0:
            d = dz @ tensors[f"res{i}.w1"].T + d_skip

    if params.stat_offset:
        dense_backward(tensors, "se", params.stat_layers, cache["stat"], d_es, grads)
    return squared, grads, d_et


def _combine(left: Tuple[float, GradientSet, NDArray], right: Tuple[float, GradientSet, NDArray]):
    return (
        left[0] + right[0],
        {name: left[1][name] + right[1][name] for name in left[1]},
        left[2] + right[2],
    )


def backward(
    params: DenoiserParams,
    pixels: NDArray,
    target_noise: NDArray,
    t: int,
    pool: Optional[ThreadProcess] = None,
) -> Tuple[float, GradientSet]:
    """
    Perda média por pixel de ||y - alvo||^2 e gradientes exatos.

    As somas parciais por bloco são combinadas na ordem dos blocos quando o
    pool é determinístico.

    Args:
        params: Parâmetros da rede
        pixels: Entrada L x B_train
        target_noise: Ruído alvo L x B_train
        t: Passo de difusão
        pool: Executor por blocos (padrão sequencial)

    Returns:
        Tupla (perda, gradientes com as mesmas chaves e formas de params.tensors)

    Raises:
        BandAlignmentError: Formas incompatíveis
    """
    pool = pool or default_pool
    x = _check_width(params, pixels)
    target = np.asarray(target_noise)
    if target.shape != x.shape:
        raise BandAlignmentError(f"target shape {target.shape} != input shape {x.shape}")
    target = target.astype(params.dtype, copy=False)

    features = sinusoidal_features(float(t), params.time_features).astype(params.dtype)
    e_t = time_embedding(t, params)
    rows = x.shape[0]
    squared, grads, d_et = pool.reduce_blocks(
        lambda block: _backward_block(params, x[block], target[block], e_t, rows),
        rows,
        _combine,
    )
    d_pre = d_et * (1.0 - e_t * e_t)
    grads["te.w"] = np.outer(features, d_pre)
    grads["te.b"] = d_pre
    ordered = {name: grads[name] for name in params.tensors}
    return squared / rows, ordered
