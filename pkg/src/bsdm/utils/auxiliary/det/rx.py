"""
Módulo DET do detector RX global.

Score de cada pixel = distância de Mahalanobis ao vetor médio da imagem sob a
covariância populacional global, regularizada por ridge * tr(C)/B na diagonal.
O sistema é resolvido por fatoração de Cholesky, sem inversa explícita.
"""
# Biblioteca padrão
from typing import Optional

# Bibliotecas de terceiros
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

# Módulos locais
from bsdm.config import setting
from bsdm.core.basemodule import BaseModule
from bsdm.core.detection import DetectionMap
from bsdm.core.exceptions import BsdmError, NumericError
from bsdm.core.hsi_data import HsiCube
from bsdm.core.thread_process import ThreadProcess, default_pool


def rx_detect(
    cube: HsiCube, ridge: Optional[float] = None, pool: Optional[ThreadProcess] = None
) -> DetectionMap:
    """
    Detector RX global.

    Args:
        cube: Cubo de entrada (valores reais quaisquer)
        ridge: Fator de regularização (padrão BSDM_RX_RIDGE)
        pool: Executor por blocos

    Returns:
        DetectionMap não normalizado com scores >= 0

    Raises:
        NumericError: Fatoração falhou mesmo com ridge
    """
    pool = pool or default_pool
    ridge = setting.BSDM_RX_RIDGE if ridge is None else ridge
    values = cube.values.astype(np.float64)
    centered = values - values.mean(axis=0)
    rows = values.shape[0]

    scatter = pool.reduce_blocks(
        lambda block: centered[block].T @ centered[block], rows, lambda a, b: a + b
    )
    covariance = scatter / rows
    regularized = covariance + ridge * (np.trace(covariance) / cube.bands) * np.eye(cube.bands)
    try:
        factor = cho_factor(regularized, lower=True)
    except (LinAlgError, ValueError) as e:
        raise NumericError(f"RX covariance factorization failed: {e}") from e

    def score_block(block: slice) -> np.ndarray:
        solved = cho_solve(factor, centered[block].T).T
        return np.einsum("ij,ij->i", centered[block], solved)

    scores = np.concatenate(pool.map_blocks(score_block, rows))
    return DetectionMap(cube.height, cube.width, np.maximum(scores, 0.0))


class rx(BaseModule):
    """
    Detector RX (Reed-Xiaoli) global.
    """

    def __init__(self):
        super().__init__()
        self.meta = {
            "name": "Global RX detector",
            "author": "BSDM",
            "version": "1.0",
            "description": "Distância de Mahalanobis à média global com covariância regularizada",
            "type": "detector",
            "example": "bsdm detect --cube scene --method rx --out maps/scene_rx",
        }
        self.options = {
            "data": None,    # HsiCube
            "ridge": setting.BSDM_RX_RIDGE,
            "pool": None,
            "seed": 0,
        }

    def run(self):
        """
        Calcula o mapa RX de options['data'].

        Returns:
            DetectionMap não normalizado
        """
        cube = self.options.get("data")
        if cube is None:
            self.log_debug("[X] Nenhum cubo fornecido")
            return None
        try:
            detection = rx_detect(cube, ridge=self.options.get("ridge"), pool=self.options.get("pool"))
        except BsdmError as e:
            self.handle_error(e, "RX detection failed", raise_error=True)
        self.log_debug(f"scores {cube.shape_label}: max={float(detection.scores.max()):.4f}")
        self.set_result(detection)
        return detection
