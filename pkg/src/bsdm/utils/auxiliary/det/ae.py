"""
Módulo DET do detector por erro de reconstrução de autoencoder.

Autoencoder totalmente conectado B -> 100 -> 70 -> 50 -> 70 -> 100 -> B com tanh
nas camadas ocultas e saída linear, treinado full-batch com Adam e taxa cosseno
sobre o erro quadrático médio. O score de cada pixel é o seu MSE de reconstrução.
"""
# Biblioteca padrão
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Módulos locais
from bsdm.config import setting
from bsdm.core.basemodule import BaseModule
from bsdm.core.denoiser import GradientSet, dense_backward, dense_forward, glorot_uniform
from bsdm.core.detection import DetectionMap
from bsdm.core.exceptions import BandAlignmentError, BsdmError, NumericError
from bsdm.core.filelocal import build_model
from bsdm.core.hsi_data import HsiCube, normalize_cube
from bsdm.core.logger import logger
from bsdm.core.thread_process import ThreadProcess, default_pool
from bsdm.core.training import AdamState, adam_step, cosine_lr

PREFIX = "ae"


class AeConfig(BaseModel):
    """Configuração do autoencoder de referência."""
    model_config = ConfigDict(extra="forbid")

    hidden_widths: List[int] = Field(default_factory=lambda: list(setting.BSDM_AE_HIDDEN_WIDTHS), min_length=1)
    epochs: int = Field(setting.BSDM_AE_EPOCHS, ge=1)
    lr_init: float = Field(setting.BSDM_AE_LR_INIT, gt=0)
    lr_final: float = Field(setting.BSDM_AE_LR_FINAL, gt=0)
    beta1: float = Field(setting.BSDM_ADAM_BETA1, ge=0, lt=1)
    beta2: float = Field(setting.BSDM_ADAM_BETA2, ge=0, lt=1)
    eps: float = Field(setting.BSDM_ADAM_EPS, gt=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _consistent(self) -> "AeConfig":
        if self.lr_final > self.lr_init:
            raise ValueError(f"lr_final {self.lr_final} exceeds lr_init {self.lr_init}")
        if any(width < 1 for width in self.hidden_widths):
            raise ValueError("hidden widths must be >= 1")
        return self


@dataclass(eq=False)
class AeParams:
    input_bands: int
    hidden: Tuple[int, ...]
    tensors: Dict[str, NDArray]
    loss_history: List[float] = field(default_factory=list)

    @property
    def layers(self) -> int:
        return len(self.hidden) + 1


def ae_init(input_bands: int, config: AeConfig) -> AeParams:
    widths = [input_bands, *config.hidden_widths, input_bands]
    rng = np.random.default_rng(config.seed)
    tensors: Dict[str, NDArray] = {}
    for k, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:]), start=1):
        tensors[f"{PREFIX}.w{k}"] = glorot_uniform(rng, (fan_in, fan_out))
        tensors[f"{PREFIX}.b{k}"] = np.zeros(fan_out)
    return AeParams(input_bands, tuple(config.hidden_widths), tensors)


def _check_width(params: AeParams, pixels: NDArray) -> NDArray:
    if pixels.ndim != 2 or pixels.shape[1] != params.input_bands:
        raise BandAlignmentError(
            f"pixel matrix shape {pixels.shape} does not match autoencoder width {params.input_bands}"
        )
    return pixels.astype(np.float64, copy=False)


def ae_reconstruct(params: AeParams, pixels: NDArray, pool: Optional[ThreadProcess] = None) -> NDArray:
    """Reconstrução L x B dos pixels."""
    pool = pool or default_pool
    x = _check_width(params, pixels)
    blocks = pool.map_blocks(
        lambda rows: dense_forward(params.tensors, PREFIX, params.layers, x[rows], linear_last=True)[-1],
        x.shape[0],
    )
    return np.concatenate(blocks, axis=0)


def ae_backward(
    params: AeParams, pixels: NDArray, pool: Optional[ThreadProcess] = None
) -> Tuple[float, GradientSet]:
    """
    Erro quadrático médio (média sobre todas as entradas L x B) e seus gradientes.
    """
    pool = pool or default_pool
    x = _check_width(params, pixels)
    total = x.size

    def block_grads(rows: slice):
        activations = dense_forward(params.tensors, PREFIX, params.layers, x[rows], linear_last=True)
        residual = activations[-1] - x[rows]
        grads: GradientSet = {}
        dense_backward(
            params.tensors, PREFIX, params.layers, activations,
            (2.0 / total) * residual, grads, linear_last=True,
        )
        return float(np.sum(residual * residual)), grads

    def combine(left, right):
        return left[0] + right[0], {name: left[1][name] + right[1][name] for name in left[1]}

    squared, grads = pool.reduce_blocks(block_grads, x.shape[0], combine)
    return squared / total, {name: grads[name] for name in params.tensors}


def ae_train(cube: HsiCube, config: Optional[AeConfig] = None, pool: Optional[ThreadProcess] = None) -> AeParams:
    """
    Treina o autoencoder full-batch no cubo.

    Raises:
        NumericError: Perda não finita
    """
    config = config or AeConfig()
    params = ae_init(cube.bands, config)
    state = AdamState.zeros(params.tensors)
    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config)
        loss, grads = ae_backward(params, cube.values, pool=pool)
        if not np.isfinite(loss):
            raise NumericError(f"autoencoder loss became non-finite at epoch {epoch + 1}")
        params.tensors, state = adam_step(params.tensors, grads, state, lr, config)
        params.loss_history.append(float(loss))
        if epoch % setting.BSDM_LOG_EVERY == 0 or epoch == config.epochs - 1:
            logger.debug(f"epoch {epoch + 1}/{config.epochs} loss={loss:.6e}", module_name="ae")
    return params


def ae_scores(params: AeParams, pixels: NDArray, pool: Optional[ThreadProcess] = None) -> NDArray:
    """MSE de reconstrução por pixel."""
    x = _check_width(params, pixels)
    residual = ae_reconstruct(params, x, pool=pool) - x
    return np.mean(residual * residual, axis=1)


def ae_detect(cube: HsiCube, params: AeParams, pool: Optional[ThreadProcess] = None) -> DetectionMap:
    """Mapa de scores (MSE de reconstrução), não normalizado."""
    return DetectionMap(cube.height, cube.width, ae_scores(params, cube.values, pool=pool))


class ae(BaseModule):
    """
    Detector por erro de reconstrução de autoencoder.
    """

    def __init__(self):
        super().__init__()
        self.meta = {
            "name": "Autoencoder reconstruction detector",
            "author": "BSDM",
            "version": "1.0",
            "description": "MSE de reconstrução de um autoencoder [100,70,50,70,100] treinado no próprio cubo",
            "type": "detector",
            "example": "bsdm detect --cube scene --method ae --out maps/scene_ae",
        }
        self.options = {
            "data": None,      # HsiCube
            "config": None,    # AeConfig ou dict
            "params": None,    # AeParams já treinado (opcional)
            "pool": None,
            "seed": 0,
        }

    def run(self):
        """
        Normaliza options["data"] em [0, 1], treina (se preciso) e aplica o autoencoder.

        Returns:
            DetectionMap não normalizado
        """
        cube = self.options.get("data")
        if cube is None:
            self.log_debug("[X] Nenhum cubo fornecido")
            return None
        # ae_train e ae_detect esperam o cubo normalizado.
        cube = normalize_cube(cube)
        config = self.options.get("config")
        if not isinstance(config, AeConfig):
            config = build_model(AeConfig, {"seed": self.options.get("seed", 0), **(config or {})})
        try:
            params = self.options.get("params") or ae_train(cube, config, pool=self.options.get("pool"))
            detection = ae_detect(cube, params, pool=self.options.get("pool"))
        except BsdmError as e:
            self.handle_error(e, "autoencoder detection failed", raise_error=True)
        self.log_debug(
            f"final loss={params.loss_history[-1] if params.loss_history else float('nan'):.6e}"
        )
        self.set_result(detection)
        return detection
