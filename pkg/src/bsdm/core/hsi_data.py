"""
Módulo de dados hiperespectrais.

Persistência de cubos e máscaras, normalização, alinhamento de bandas entre
cubos de sensores diferentes e um gerador de cenas sintéticas que substitui
os conjuntos de dados reais em escala de bancada.

Formatos:
    Cubo: ``<nome>.hdr.json`` (height, width, bands, dtype, layout) e
    ``<nome>.bin`` com floats IEEE-754 de 32 bits little-endian, pixel a pixel.
    Máscara: graymap binário P5 com valores {0, 255}.
"""
# Biblioteca padrão
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import NDArray
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Módulos locais
from bsdm.config import setting
from bsdm.core.exceptions import BandAlignmentError, CubeFormatError, MaskFormatError, SceneError
from bsdm.core.logger import logger

PathLike = Union[str, Path]

HEADER_SUFFIX = ".hdr.json"
PAYLOAD_SUFFIX = ".bin"
FILE_DTYPE = np.dtype("<f4")


@dataclass(frozen=True, eq=False)
class HsiCube:
    """
    Cubo hiperespectral achatado em L pixels x B bandas (pixel-major).

    Attributes:
        height (int): Linhas espaciais
        width (int): Colunas espaciais
        bands (int): Quantidade de bandas B
        values (NDArray): Matriz L x B de reais finitos, L = height * width
    """
    height: int
    width: int
    bands: int
    values: NDArray

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.bands < 1:
            raise CubeFormatError(
                f"invalid cube dimensions {self.height}x{self.width}x{self.bands}"
            )
        expected = (self.height * self.width, self.bands)
        if self.values.shape != expected:
            raise CubeFormatError(f"values shape {self.values.shape} != {expected}")
        if not np.all(np.isfinite(self.values)):
            bad = int(np.count_nonzero(~np.isfinite(self.values)))
            raise CubeFormatError(f"cube contains {bad} non-finite values")

    @property
    def pixels(self) -> int:
        return self.height * self.width

    @property
    def shape_label(self) -> str:
        return f"{self.height}x{self.width}x{self.bands}"

    def with_values(self, values: NDArray) -> "HsiCube":
        """Novo cubo com as mesmas dimensões espaciais e os valores dados."""
        return HsiCube(self.height, self.width, values.shape[1], values)


@dataclass(frozen=True, eq=False)
class AnomalyMask:
    """
    Máscara de anomalias (True = anomalia), uma flag por pixel.
    """
    height: int
    width: int
    labels: NDArray

    def __post_init__(self):
        if self.labels.shape != (self.height * self.width,):
            raise MaskFormatError(
                f"labels shape {self.labels.shape} does not match {self.height}x{self.width}"
            )
        if self.labels.dtype != np.bool_:
            raise MaskFormatError("labels must be boolean")

    @property
    def anomaly_count(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def anomaly_fraction(self) -> float:
        return self.anomaly_count / self.labels.size

    def matches(self, cube: HsiCube) -> bool:
        return (self.height, self.width) == (cube.height, cube.width)


def cube_paths(path: PathLike) -> Tuple[Path, Path]:
    """
    Resolve o par (header, payload) a partir do prefixo ou de um dos dois arquivos.

    Args:
        path: ``nome``, ``nome.hdr.json`` ou ``nome.bin``

    Returns:
        Tupla (caminho do header, caminho do payload)
    """
    text = str(path)
    for suffix in (HEADER_SUFFIX, PAYLOAD_SUFFIX):
        if text.endswith(suffix):
            text = text[: -len(suffix)]
            break
    return Path(text + HEADER_SUFFIX), Path(text + PAYLOAD_SUFFIX)


def load_cube(path: PathLike) -> HsiCube:
    """
    Lê um cubo no formato header JSON + payload binário.

    Args:
        path: Prefixo do cubo ou caminho de um dos arquivos do par

    Returns:
        HsiCube com valores float32

    Raises:
        CubeFormatError: Arquivo ausente, header inválido, tamanho divergente
            ou valores não finitos
    """
    header_path, payload_path = cube_paths(path)
    for required in (header_path, payload_path):
        if not required.is_file():
            raise CubeFormatError(f"missing cube file: {required}")
    try:
        header = json.loads(header_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CubeFormatError(f"invalid header {header_path}: {e}") from e

    try:
        height, width, bands = (int(header[key]) for key in ("height", "width", "bands"))
    except (KeyError, TypeError, ValueError) as e:
        raise CubeFormatError(f"header {header_path} lacks integer height/width/bands") from e
    if header.get("dtype", setting.BSDM_FILE_DTYPE) != setting.BSDM_FILE_DTYPE:
        raise CubeFormatError(f"unsupported dtype {header.get('dtype')!r}")
    if header.get("layout", setting.BSDM_FILE_LAYOUT) != setting.BSDM_FILE_LAYOUT:
        raise CubeFormatError(f"unsupported layout {header.get('layout')!r}")

    payload = np.fromfile(payload_path, dtype=FILE_DTYPE)
    expected = height * width * bands
    if payload.size != expected:
        raise CubeFormatError(
            f"payload {payload_path} holds {payload.size} floats, header declares {expected}"
        )
    values = payload.astype(np.float32).reshape(height * width, bands)
    logger.debug(f"CUBE: loaded {height}x{width}x{bands} from {payload_path}")
    return HsiCube(height, width, bands, values)


def save_cube(cube: HsiCube, path: PathLike) -> None:
    """
    Grava o par header/payload de um cubo, sobrescrevendo arquivos existentes.

    Valores float64 são arredondados para 32 bits na gravação.

    Args:
        cube: Cubo a gravar
        path: Prefixo ou caminho de um dos arquivos do par

    Raises:
        CubeFormatError: Falha de E/S
    """
    header_path, payload_path = cube_paths(path)
    header = {
        "height": cube.height,
        "width": cube.width,
        "bands": cube.bands,
        "dtype": setting.BSDM_FILE_DTYPE,
        "layout": setting.BSDM_FILE_LAYOUT,
    }
    try:
        header_path.parent.mkdir(parents=True, exist_ok=True)
        header_path.write_text(json.dumps(header, indent=2), encoding="utf-8")
        np.ascontiguousarray(cube.values, dtype=FILE_DTYPE).tofile(payload_path)
    except OSError as e:
        raise CubeFormatError(f"could not write cube {payload_path}: {e}") from e
    logger.debug(f"CUBE: saved {cube.shape_label} to {payload_path}")


def load_mask(path: PathLike) -> AnomalyMask:
    """
    Lê uma máscara P5 (0 = fundo, 255 = anomalia).

    Raises:
        MaskFormatError: Arquivo ausente, formato diferente de P5 ou valores fora de {0, 255}
    """
    path = Path(path)
    if not path.is_file():
        raise MaskFormatError(f"missing mask file: {path}")
    try:
        with Image.open(path) as image:
            if image.format != "PPM" or image.mode != "L":
                raise MaskFormatError(f"{path} is not an 8-bit P5 graymap")
            pixels = np.asarray(image, dtype=np.uint8)
    except UnidentifiedImageError as e:
        raise MaskFormatError(f"{path} is not an 8-bit P5 graymap") from e

    invalid = np.setdiff1d(np.unique(pixels), [0, 255])
    if invalid.size:
        raise MaskFormatError(f"{path} contains values outside {{0,255}}: {invalid[:5].tolist()}")
    height, width = pixels.shape
    return AnomalyMask(height, width, (pixels == 255).reshape(-1))


def save_mask(mask: AnomalyMask, path: PathLike) -> None:
    """Grava a máscara como graymap P5 com valores {0, 255}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.where(mask.labels, 255, 0).astype(np.uint8).reshape(mask.height, mask.width)
    Image.fromarray(pixels, mode="L").save(path, format="PPM")


def save_graymap_preview(scores: NDArray, height: int, width: int, path: PathLike) -> None:
    """
    Grava uma prévia 8 bits (min-max) de um mapa de scores.

    Args:
        scores: L scores
        height: Linhas
        width: Colunas
        path: Arquivo P5 de destino
    """
    low, high = float(np.min(scores)), float(np.max(scores))
    span = high - low
    scaled = np.zeros_like(scores, dtype=np.float64) if span == 0 else (scores - low) / span
    pixels = np.round(scaled * 255.0).astype(np.uint8).reshape(height, width)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode="L").save(path, format="PPM")


def normalize_cube(cube: HsiCube) -> HsiCube:
    """
    Min-max global do cubo inteiro para [0, 1], preservando o dtype.

    Cubos constantes viram zeros.
    """
    values = cube.values.astype(np.float64)
    low, high = values.min(), values.max()
    span = high - low
    if span == 0:
        scaled = np.zeros_like(values)
    else:
        scaled = (values - low) / span
    return cube.with_values(scaled.astype(cube.values.dtype))


@dataclass
class BandPlan:
    """
    Plano de reagrupamento gerado por align_bands.

    Attributes:
        kind (str): identity | mirror | remove | split
        source_bands (int): B do cubo original
        train_bands (int): Largura de entrada da rede
        batch_indices (list): Para cada lote, índice da banda original de cada coluna
        sources (list): Para cada banda original, o par (lote, coluna) cuja saída ela recebe
        removed (list): Bandas removidas (apenas kind == remove)
        seed (int): Semente da remoção aleatória
    """
    kind: str
    source_bands: int
    train_bands: int
    batch_indices: List[NDArray]
    sources: List[Tuple[int, int]] = field(default_factory=list)
    removed: List[int] = field(default_factory=list)
    seed: Optional[int] = None


def _reflect_indices(count: int, target: int, allow_repeat: bool) -> List[int]:
    """
    Índices 0..count-1 seguidos do espelhamento com a última banda como centro.

    Com allow_repeat, a reflexão continua indo e voltando entre as extremidades
    até atingir target; sem ele, apenas uma reflexão (no máximo 2*count - 1).
    """
    if not allow_repeat and target > 2 * count - 1:
        raise BandAlignmentError(
            f"cannot mirror {count} bands up to {target}: at most {2 * count - 1} available"
        )
    if count == 1:
        return [0] * target
    period = 2 * (count - 1)
    indices = []
    for k in range(target):
        m = k % period
        indices.append(m if m < count else period - m)
    return indices


def _first_sources(batch_indices: List[NDArray], source_bands: int) -> List[Tuple[int, int]]:
    sources: dict = {}
    for batch, indices in enumerate(batch_indices):
        for column, band in enumerate(indices.tolist()):
            sources.setdefault(band, (batch, column))
    present = sorted(sources)
    resolved = []
    for band in range(source_bands):
        if band in sources:
            resolved.append(sources[band])
        else:
            # banda removida: copia da banda retida mais próxima (empate -> menor índice)
            nearest = min(present, key=lambda kept: (abs(kept - band), kept))
            resolved.append(sources[nearest])
    return resolved


def align_bands(cube: HsiCube, train_bands: int, seed: int = 0) -> Tuple[List[HsiCube], BandPlan]:
    """
    Ajusta a quantidade de bandas do cubo à largura de entrada da rede.

    - B == B_train: um lote, plano identidade.
    - B < B_train: espelha a partir da última banda (b_{B-2}, b_{B-3}, ...).
    - B_train < B <= 2*B_train: remove B - B_train bandas em posições aleatórias.
    - B > 2*B_train: ceil(B/B_train) lotes contíguos, o último completado por espelhamento.

    Args:
        cube: Cubo de entrada
        train_bands: B_train
        seed: Semente da remoção aleatória

    Returns:
        Tupla (lotes com exatamente B_train bandas, plano de reagrupamento)

    Raises:
        BandAlignmentError: B_train < 1 ou espelhamento insuficiente
    """
    if train_bands < 1:
        raise BandAlignmentError(f"train band count must be >= 1, got {train_bands}")
    bands = cube.bands

    if bands == train_bands:
        kind = "identity"
        batch_indices = [np.arange(bands)]
        removed: List[int] = []
    elif bands < train_bands:
        kind = "mirror"
        batch_indices = [np.array(_reflect_indices(bands, train_bands, allow_repeat=False))]
        removed = []
    elif bands <= 2 * train_bands:
        kind = "remove"
        rng = np.random.default_rng(seed)
        removed = sorted(rng.choice(bands, size=bands - train_bands, replace=False).tolist())
        batch_indices = [np.setdiff1d(np.arange(bands), removed)]
    else:
        kind = "split"
        removed = []
        batch_indices = []
        for start in range(0, bands, train_bands):
            chunk = np.arange(start, min(start + train_bands, bands))
            if chunk.size < train_bands:
                chunk = chunk[_reflect_indices(chunk.size, train_bands, allow_repeat=True)]
            batch_indices.append(chunk)

    plan = BandPlan(
        kind=kind,
        source_bands=bands,
        train_bands=train_bands,
        batch_indices=batch_indices,
        sources=_first_sources(batch_indices, bands),
        removed=removed,
        seed=seed if kind == "remove" else None,
    )
    batches = [cube.with_values(cube.values[:, indices]) for indices in batch_indices]
    logger.debug(f"bands {bands} -> {train_bands}: {kind}, {len(batches)} batch(es)")
    return batches, plan


def reassemble_bands(outputs: List[HsiCube], plan: BandPlan) -> HsiCube:
    """
    Reconstrói um cubo com as B bandas originais a partir das saídas por lote.

    Bandas espelhadas ou de preenchimento são descartadas; bandas removidas
    recebem a saída da banda retida mais próxima.
    """
    if len(outputs) != len(plan.batch_indices):
        raise BandAlignmentError(
            f"expected {len(plan.batch_indices)} batch outputs, got {len(outputs)}"
        )
    first = outputs[0]
    values = np.empty((first.pixels, plan.source_bands), dtype=first.values.dtype)
    for band, (batch, column) in enumerate(plan.sources):
        values[:, band] = outputs[batch].values[:, column]
    return first.with_values(values)


class SceneConfig(BaseModel):
    """
    Configuração da cena sintética (fundo em clusters gaussianos + blocos anômalos).
    """
    model_config = ConfigDict(extra="forbid")

    height: int = Field(setting.BSDM_SCENE_HEIGHT, ge=1)
    width: int = Field(setting.BSDM_SCENE_WIDTH, ge=1)
    bands: int = Field(setting.BSDM_SCENE_BANDS, ge=1)
    background_cluster_count: int = Field(setting.BSDM_SCENE_CLUSTER_COUNT, ge=1)
    cluster_mean_range: Tuple[float, float] = tuple(setting.BSDM_SCENE_CLUSTER_MEAN_RANGE)
    cluster_sigma_range: Tuple[float, float] = tuple(setting.BSDM_SCENE_CLUSTER_SIGMA_RANGE)
    anomaly_count: int = Field(setting.BSDM_SCENE_ANOMALY_COUNT, ge=0)
    anomaly_size: int = Field(setting.BSDM_SCENE_ANOMALY_SIZE, ge=1)
    anomaly_spectrum_offset: float = setting.BSDM_SCENE_ANOMALY_OFFSET
    anomaly_band_fraction: float = Field(setting.BSDM_SCENE_ANOMALY_BAND_FRACTION, gt=0, le=1)
    band_correlation: float = Field(setting.BSDM_SCENE_BAND_CORRELATION, ge=0, lt=1)
    seed: int = Field(0, ge=0)

    @field_validator("cluster_mean_range", "cluster_sigma_range")
    @classmethod
    def _ordered_interval(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if value[0] > value[1]:
            raise ValueError(f"interval lower bound {value[0]} exceeds upper bound {value[1]}")
        return value

    @field_validator("cluster_sigma_range")
    @classmethod
    def _nonnegative_sigma(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if value[0] < 0:
            raise ValueError("cluster sigma must be nonnegative")
        return value

    @model_validator(mode="after")
    def _anomaly_fraction(self) -> "SceneConfig":
        fraction = self.anomaly_count * self.anomaly_size / (self.height * self.width)
        if fraction > setting.BSDM_SCENE_MAX_ANOMALY_FRACTION:
            raise ValueError(
                f"implied anomaly fraction {fraction:.4f} exceeds "
                f"{setting.BSDM_SCENE_MAX_ANOMALY_FRACTION}"
            )
        return self


def _cluster_labels(config: SceneConfig, rng: np.random.Generator) -> NDArray:
    if config.background_cluster_count == 1:
        return np.zeros(config.height * config.width, dtype=np.int64)
    centers = rng.uniform(0, 1, size=(config.background_cluster_count, 2))
    centers *= np.array([config.height, config.width], dtype=np.float64)
    rows, cols = np.meshgrid(np.arange(config.height), np.arange(config.width), indexing="ij")
    coords = np.stack([rows.reshape(-1), cols.reshape(-1)], axis=1).astype(np.float64)
    distances = ((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(distances, axis=1)


def _block_offsets(size: int) -> Tuple[int, int, List[Tuple[int, int]]]:
    side = math.ceil(math.sqrt(size))
    rows = math.ceil(size / side)
    cells = [(r, c) for r in range(rows) for c in range(side)][:size]
    return rows, side, cells


def _place_anomalies(config: SceneConfig, rng: np.random.Generator) -> List[List[int]]:
    """Posiciona blocos contíguos sem sobreposição (margem de 1 pixel)."""
    rows, cols, cells = _block_offsets(config.anomaly_size)
    if config.anomaly_count and (rows > config.height or cols > config.width):
        raise SceneError(
            f"anomaly block {rows}x{cols} does not fit a {config.height}x{config.width} scene"
        )
    occupied = np.zeros((config.height, config.width), dtype=bool)
    blocks = []
    attempts = 0
    max_attempts = 1000 * max(config.anomaly_count, 1)
    while len(blocks) < config.anomaly_count:
        if attempts >= max_attempts:
            raise SceneError(
                f"could only place {len(blocks)} of {config.anomaly_count} anomaly blocks"
            )
        attempts += 1
        top = int(rng.integers(0, config.height - rows + 1))
        left = int(rng.integers(0, config.width - cols + 1))
        window = occupied[max(top - 1, 0): top + rows + 1, max(left - 1, 0): left + cols + 1]
        if window.any():
            continue
        occupied[top: top + rows, left: left + cols] = True
        blocks.append([(top + r) * config.width + (left + c) for r, c in cells])
    return blocks


def synth_scene(config: SceneConfig) -> Tuple[HsiCube, AnomalyMask]:
    """
    Gera uma cena sintética determinística a partir da configuração.

    O fundo é dividido em regiões espaciais (Voronoi); cada região tem uma
    gaussiana multivariada com média suave ao longo das bandas e covariância
    AR(1) entre bandas. Cada anomalia é um bloco contíguo cujo espectro é o
    fundo do pixel somado a anomaly_spectrum_offset em um subconjunto sorteado
    de bandas. A saída é normalizada para [0, 1] em float32.

    Raises:
        SceneError: Blocos anômalos não cabem na cena
    """
    rng = np.random.default_rng(config.seed)
    n_pixels = config.height * config.width
    n_bands = config.bands
    labels = _cluster_labels(config, rng)

    positions = np.arange(n_bands) / max(n_bands - 1, 1)
    lags = np.abs(np.subtract.outer(np.arange(n_bands), np.arange(n_bands)))
    mean_lo, mean_hi = config.cluster_mean_range
    sigma_lo, sigma_hi = config.cluster_sigma_range

    values = np.empty((n_pixels, n_bands), dtype=np.float64)
    for cluster in range(config.background_cluster_count):
        base = rng.uniform(mean_lo, mean_hi)
        amplitude = 0.25 * (mean_hi - mean_lo)
        frequency = rng.uniform(0.5, 2.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        mean = np.clip(
            base + amplitude * np.sin(2.0 * np.pi * frequency * positions + phase),
            mean_lo, mean_hi,
        )
        sigma = rng.uniform(sigma_lo, sigma_hi)
        covariance = sigma ** 2 * config.band_correlation ** lags
        # jitter mínimo para sigma == 0
        chol = np.linalg.cholesky(covariance + 1e-12 * np.eye(n_bands))
        members = np.flatnonzero(labels == cluster)
        draws = rng.standard_normal((members.size, n_bands))
        values[members] = mean + draws @ chol.T

    mask_labels = np.zeros(n_pixels, dtype=bool)
    n_shifted = max(1, round(config.anomaly_band_fraction * n_bands))
    for block in _place_anomalies(config, rng):
        shifted = rng.choice(n_bands, size=n_shifted, replace=False)
        pixels = np.array(block)
        values[np.ix_(pixels, shifted)] += config.anomaly_spectrum_offset
        mask_labels[pixels] = True

    cube = normalize_cube(
        HsiCube(config.height, config.width, n_bands, values.astype(np.float32))
    )
    mask = AnomalyMask(config.height, config.width, mask_labels)
    logger.info(
        f"scene {cube.shape_label}: {config.background_cluster_count} cluster(s), "
        f"{mask.anomaly_count} anomaly pixels ({mask.anomaly_fraction:.4f})"
    )
    return cube, mask
