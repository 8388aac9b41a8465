# mcsense/api/services/linalg.py - Thin wrappers over numpy.linalg with domain errors

import logging
from typing import Tuple

import numpy as np

from .errors import NumericalFailureError

logger = logging.getLogger(__name__)


def svd(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD (U, s, Vt) with s sorted non-increasing."""
    try:
        return np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as e:
        logger.error(f"SVD did not converge on a {matrix.shape} matrix: {e}")
        raise NumericalFailureError(f"SVD did not converge: {e}", {"shape": list(matrix.shape)}) from e


def singular_values(matrix: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.svd(matrix, compute_uv=False)
    except np.linalg.LinAlgError as e:
        logger.error(f"SVD did not converge on a {matrix.shape} matrix: {e}")
        raise NumericalFailureError(f"SVD did not converge: {e}", {"shape": list(matrix.shape)}) from e
