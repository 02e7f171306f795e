"""
Mapas de detecção.

Um DetectionMap guarda um score por pixel. A exportação reutiliza o formato
de cubo com uma única banda e, opcionalmente, uma prévia P5 de 8 bits.
"""
# Biblioteca padrão
from dataclasses import dataclass
from pathlib import Path
from typing import Union

# Bibliotecas de terceiros
import numpy as np
from numpy.typing import NDArray

# Módulos locais
from bsdm.core.exceptions import CubeFormatError
from bsdm.core.hsi_data import HsiCube, load_cube, save_cube, save_graymap_preview


@dataclass(frozen=True, eq=False)
class DetectionMap:
    """
    Scores de anomalia de um cubo.

    Attributes:
        height (int): Linhas
        width (int): Colunas
        scores (NDArray): L scores finitos
        normalized (bool): Scores em [0, 1] com mínimo 0 e máximo 1 (ou todos 0)
    """
    height: int
    width: int
    scores: NDArray
    normalized: bool = False

    def __post_init__(self):
        if self.scores.shape != (self.height * self.width,):
            raise CubeFormatError(
                f"scores shape {self.scores.shape} does not match {self.height}x{self.width}"
            )
        if not np.all(np.isfinite(self.scores)):
            raise CubeFormatError("detection map contains non-finite scores")


def normalize_map(detection: DetectionMap) -> DetectionMap:
    """Min-max para [0, 1]; mapas constantes viram zeros."""
    scores = detection.scores.astype(np.float64)
    low, high = scores.min(), scores.max()
    span = high - low
    scaled = np.zeros_like(scores) if span == 0 else (scores - low) / span
    return DetectionMap(detection.height, detection.width, scaled, normalized=True)


def save_map(detection: DetectionMap, path: Union[str, Path], preview: bool = False) -> None:
    """
    Grava o mapa como cubo de uma banda e, com preview, ``<path>.pgm``.
    """
    cube = HsiCube(detection.height, detection.width, 1, detection.scores.reshape(-1, 1))
    save_cube(cube, path)
    if preview:
        save_graymap_preview(detection.scores, detection.height, detection.width, f"{path}.pgm")


def load_map(path: Union[str, Path]) -> DetectionMap:
    """
    Lê um mapa gravado por save_map.

    Raises:
        CubeFormatError: Arquivo inválido ou com mais de uma banda
    """
    cube = load_cube(path)
    if cube.bands != 1:
        raise CubeFormatError(f"detection map must have 1 band, got {cube.bands}")
    scores = cube.values[:, 0].astype(np.float64)
    normalized = bool(scores.min() == 0.0 and scores.max() in (0.0, 1.0))
    return DetectionMap(cube.height, cube.width, scores, normalized=normalized)
