"""
Treinamento da rede de remoção de ruído.

O regime é de ruído fixo: um único campo de ruído pseudo-fundo e um único cubo
difundido H^t são construídos antes do laço e reutilizados em todas as épocas.
Cada época é full-batch (todos os pixels) com Adam e taxa de aprendizado
cosseno. O checkpoint é gravado como manifest JSON + blob de floats de 32 bits.
"""
# Biblioteca padrão
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Módulos locais
from bsdm.config import setting
from bsdm.core.denoiser import DenoiserParams, GradientSet, backward, init_params, tensor_shapes
from bsdm.core.diffusion import CubeStats, cube_stats, diffuse, make_schedule, sample_pseudo_noise
from bsdm.core.exceptions import CheckpointError, NumericError
from bsdm.core.hsi_data import HsiCube
from bsdm.core.logger import logger
from bsdm.core.thread_process import ThreadProcess

CHECKPOINT_FORMAT = "bsdm-checkpoint/1"
MANIFEST_SUFFIX = ".manifest.json"
PARAMS_SUFFIX = ".params.bin"
BLOB_DTYPE = np.dtype("<f4")


class TrainConfig(BaseModel):
    """
    Configuração de treinamento. ``lam`` é lido e gravado sob a chave ``lambda``.
    """
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    epochs: int = Field(setting.BSDM_TRAIN_EPOCHS, ge=1)
    lr_init: float = Field(setting.BSDM_TRAIN_LR_INIT, gt=0)
    lr_final: float = Field(setting.BSDM_TRAIN_LR_FINAL, gt=0)
    beta1: float = Field(setting.BSDM_ADAM_BETA1, ge=0, lt=1)
    beta2: float = Field(setting.BSDM_ADAM_BETA2, ge=0, lt=1)
    eps: float = Field(setting.BSDM_ADAM_EPS, gt=0)
    T: int = Field(setting.BSDM_DIFFUSION_STEPS, ge=1)
    lam: float = Field(setting.BSDM_DIFFUSION_LAMBDA, alias="lambda", gt=0, lt=1)
    t_train: int = Field(setting.BSDM_TRAIN_STEP, ge=1)
    seed: int = Field(0, ge=0)
    stat_offset: bool = True
    stat_layers: int = Field(setting.BSDM_STAT_LAYERS, ge=1)

    @model_validator(mode="after")
    def _consistent(self) -> "TrainConfig":
        if self.t_train > self.T:
            raise ValueError(f"t_train {self.t_train} exceeds T {self.T}")
        if self.lr_final > self.lr_init:
            raise ValueError(f"lr_final {self.lr_final} exceeds lr_init {self.lr_init}")
        return self

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


@dataclass(eq=False)
class Checkpoint:
    """Parâmetros treinados e a proveniência necessária para a inferência."""
    params: DenoiserParams
    config: TrainConfig
    stats: CubeStats
    loss_history: List[float] = field(default_factory=list)


@dataclass(eq=False)
class AdamState:
    step: int
    m: Dict[str, NDArray]
    v: Dict[str, NDArray]

    @classmethod
    def zeros(cls, tensors: Dict[str, NDArray]) -> "AdamState":
        return cls(
            step=0,
            m={name: np.zeros_like(value) for name, value in tensors.items()},
            v={name: np.zeros_like(value) for name, value in tensors.items()},
        )


def cosine_lr(epoch: int, config: Any) -> float:
    """
    Taxa cosseno de lr_init (época 0) até lr_final (última época).

    Aceita qualquer configuração com epochs, lr_init e lr_final.
    """
    if config.epochs == 1:
        return float(config.lr_init)
    if epoch == config.epochs - 1:
        return float(config.lr_final)
    progress = math.pi * epoch / (config.epochs - 1)
    return config.lr_final + 0.5 * (config.lr_init - config.lr_final) * (1.0 + math.cos(progress))


def adam_step(
    tensors: Dict[str, NDArray],
    grads: GradientSet,
    state: AdamState,
    lr: float,
    config: Optional[Any] = None,
) -> Tuple[Dict[str, NDArray], AdamState]:
    """
    Um passo de Adam com correção de viés.

    Args:
        tensors: Parâmetros nomeados
        grads: Gradientes com as mesmas chaves
        state: Momentos acumulados
        lr: Taxa de aprendizado do passo
        config: Objeto com beta1, beta2 e eps (padrões de setting)

    Returns:
        Tupla (novos parâmetros, novo estado); as entradas não são alteradas
    """
    beta1 = config.beta1 if config is not None else setting.BSDM_ADAM_BETA1
    beta2 = config.beta2 if config is not None else setting.BSDM_ADAM_BETA2
    eps = config.eps if config is not None else setting.BSDM_ADAM_EPS

    step = state.step + 1
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step
    updated, m, v = {}, {}, {}
    for name, value in tensors.items():
        grad = grads[name]
        m[name] = beta1 * state.m[name] + (1.0 - beta1) * grad
        v[name] = beta2 * state.v[name] + (1.0 - beta2) * grad * grad
        m_hat = m[name] / correction1
        v_hat = v[name] / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
    return updated, AdamState(step=step, m=m, v=v)


def round_to_blob_precision(params: DenoiserParams) -> DenoiserParams:
    """Arredonda os tensores para 32 bits mantendo o dtype de trabalho."""
    return params.with_tensors(
        {name: value.astype(BLOB_DTYPE).astype(value.dtype) for name, value in params.tensors.items()}
    )


class BsdmTrainer:
    """
    Laço de treinamento com ruído e cubo difundido fixos.

    Attributes:
        config (TrainConfig): Configuração validada
        schedule: Agenda de difusão (T, lambda)
        stats (CubeStats): Estatísticas globais do cubo de treino
        noise (NoiseField): Campo de ruído usado como alvo em todas as épocas
        diffused (HsiCube): H^t construído uma única vez
        params (DenoiserParams): Parâmetros correntes
    """

    def __init__(self, cube: HsiCube, config: TrainConfig, pool: Optional[ThreadProcess] = None):
        self.config = config
        self.pool = pool
        self.schedule = make_schedule(config.T, config.lam)
        self.stats = cube_stats(cube)
        working = cube.with_values(cube.values.astype(np.float64))
        self.noise = sample_pseudo_noise(
            self.stats, working.values.shape, seed=config.seed, dtype=np.float64
        )
        self.diffused = diffuse(working, self.noise, self.schedule, config.t_train)
        self.params = init_params(
            cube.bands,
            seed=config.seed + 1,
            stat_offset=config.stat_offset,
            stat_layers=config.stat_layers,
            steps=config.T,
        )
        self.loss_history: List[float] = []

    def run(self) -> Checkpoint:
        """
        Executa todas as épocas e devolve o checkpoint.

        Raises:
            NumericError: Perda não finita
        """
        config = self.config
        state = AdamState.zeros(self.params.tensors)
        logger.info(
            f"training {self.diffused.shape_label} for {config.epochs} epochs "
            f"(t={config.t_train}, T={config.T}, lambda={config.lam}, "
            f"stat_offset={config.stat_offset})"
        )
        for epoch in range(config.epochs):
            lr = cosine_lr(epoch, config)
            loss, grads = backward(
                self.params, self.diffused.values, self.noise.values, config.t_train, pool=self.pool
            )
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss {loss} at epoch {epoch + 1} (lr={lr:.3e})")
            tensors, state = adam_step(self.params.tensors, grads, state, lr, config)
            self.params = self.params.with_tensors(tensors)
            self.loss_history.append(float(loss))
            if epoch % setting.BSDM_LOG_EVERY == 0 or epoch == config.epochs - 1:
                logger.info(f"epoch {epoch + 1}/{config.epochs} loss={loss:.6e} lr={lr:.3e}")

        self.params = round_to_blob_precision(self.params)
        return Checkpoint(
            params=self.params,
            config=config,
            stats=self.stats,
            loss_history=list(self.loss_history),
        )


def train(cube: HsiCube, config: TrainConfig, pool: Optional[ThreadProcess] = None) -> Checkpoint:
    """Treina a rede no cubo (já normalizado) e devolve o checkpoint."""
    return BsdmTrainer(cube, config, pool=pool).run()


def checkpoint_paths(path: Union[str, Path]) -> Tuple[Path, Path]:
    text = str(path)
    for suffix in (MANIFEST_SUFFIX, PARAMS_SUFFIX):
        if text.endswith(suffix):
            text = text[: -len(suffix)]
            break
    return Path(text + MANIFEST_SUFFIX), Path(text + PARAMS_SUFFIX)


def save_checkpoint(ckpt: Checkpoint, path: Union[str, Path]) -> None:
    """
    Grava ``<nome>.manifest.json`` e ``<nome>.params.bin``.
    """
    manifest_path, params_path = checkpoint_paths(path)
    entries, offset = [], 0
    for name, value in ckpt.params.tensors.items():
        entries.append({"name": name, "shape": list(value.shape), "offset": offset, "count": int(value.size)})
        offset += int(value.size)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "dtype": setting.BSDM_FILE_DTYPE,
        "architecture": ckpt.params.architecture(),
        "tensors": entries,
        "config": ckpt.config.echo(),
        "stats": {"mu": ckpt.stats.mu, "sigma": ckpt.stats.sigma},
        "schedule": {"T": ckpt.config.T, "lambda": ckpt.config.lam},
        "loss_history": ckpt.loss_history,
    }
    blob = np.concatenate([value.reshape(-1) for value in ckpt.params.tensors.values()])
    try:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        blob.astype(BLOB_DTYPE).tofile(params_path)
    except OSError as e:
        raise CheckpointError(f"could not write checkpoint {manifest_path}: {e}") from e
    logger.info(f"CKPT: saved {len(entries)} tensors ({offset} floats) to {params_path}")


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Lê um checkpoint e confere manifest, formas e tamanho do blob.

    Raises:
        CheckpointError: Arquivo ausente, blob truncado ou tensores inconsistentes
    """
    manifest_path, params_path = checkpoint_paths(path)
    for required in (manifest_path, params_path):
        if not required.is_file():
            raise CheckpointError(f"missing checkpoint file: {required}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"invalid manifest {manifest_path}: {e}") from e
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format {manifest.get('format')!r}")

    arch = dict(manifest["architecture"])
    arch["hidden"] = tuple(arch["hidden"])
    skeleton = DenoiserParams(**arch)
    expected = tensor_shapes(skeleton)

    blob = np.fromfile(params_path, dtype=BLOB_DTYPE)
    declared = sum(entry["count"] for entry in manifest["tensors"])
    if blob.size != declared:
        raise CheckpointError(f"blob {params_path} holds {blob.size} floats, manifest declares {declared}")

    tensors: Dict[str, NDArray] = {}
    for entry in manifest["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if expected.get(name) != shape:
            raise CheckpointError(f"tensor {name} has shape {shape}, architecture expects {expected.get(name)}")
        start, count = entry["offset"], entry["count"]
        if count != int(np.prod(shape)) or start + count > blob.size:
            raise CheckpointError(f"tensor {name} does not fit the blob")
        tensors[name] = blob[start: start + count].astype(np.float64).reshape(shape)
    missing = set(expected) - set(tensors)
    if missing:
        raise CheckpointError(f"checkpoint lacks tensors: {sorted(missing)}")

    config = TrainConfig.model_validate(manifest["config"])
    stats = CubeStats(**manifest["stats"])
    logger.debug(f"CKPT: loaded {len(tensors)} tensors from {params_path}")
    return Checkpoint(
        params=skeleton.with_tensors({name: tensors[name] for name in expected}),
        config=config,
        stats=stats,
        loss_history=[float(value) for value in manifest.get("loss_history", [])],
    )
