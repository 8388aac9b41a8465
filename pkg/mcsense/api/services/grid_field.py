# mcsense/api/services/grid_field.py - Correlated ground-truth fields, noise and SVD diagnostics

import logging
from typing import Optional, Tuple, Union

import numpy as np

from ...config import CORRELATION_LENGTHS
from ...models import CorrelationLevel, GridField, SvdDiagnostics
from .errors import InvalidArgumentError, NumericalFailureError
from .linalg import svd

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-8
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)

LevelLike = Union[CorrelationLevel, str, float]


def resolve_level(level: LevelLike) -> Tuple[CorrelationLevel, float]:
    """Map a preset name or a custom length scale to (level, length_scale)."""
    if isinstance(level, (int, float)) and not isinstance(level, bool):
        if level <= 0:
            raise InvalidArgumentError(f"length scale must be positive, got {level}")
        return CorrelationLevel.CUSTOM, float(level)
    try:
        preset = level if isinstance(level, CorrelationLevel) else CorrelationLevel(str(level).lower())
    except ValueError:
        raise InvalidArgumentError(
            f"Unknown correlation level '{level}'. Use one of {sorted(CORRELATION_LENGTHS)} or a length scale"
        )
    if preset is CorrelationLevel.CUSTOM:
        raise InvalidArgumentError("custom correlation needs an explicit length scale")
    return preset, CORRELATION_LENGTHS[preset.value]


def exponential_covariance(size: int, length_scale: float) -> np.ndarray:
    """1-D covariance exp(-|i - j| / length_scale) on grid indices."""
    index = np.arange(size, dtype=np.float64)
    return np.exp(-np.abs(index[:, None] - index[None, :]) / length_scale)


def cholesky_factor(covariance: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter until it succeeds."""
    identity = np.eye(covariance.shape[0])
    for jitter in JITTER_LADDER:
        try:
            return np.linalg.cholesky(covariance + jitter * identity)
        except np.linalg.LinAlgError:
            logger.warning(f"Cholesky failed with jitter {jitter:g}, escalating")
    raise NumericalFailureError(
        f"covariance is not positive definite even with jitter {JITTER_LADDER[-1]:g}",
        {"jitter": JITTER_LADDER[-1]},
    )


def generate_field(
    n: int,
    level: LevelLike = CorrelationLevel.HIGH,
    seed: int = 0,
    cols: Optional[int] = None,
) -> GridField:
    """Zero-mean Gaussian random field with separable exponential covariance.

    The field is L_r Z L_c^T with Z i.i.d. standard normal, so its covariance is the
    Kronecker product of the two 1-D exponential kernels.
    """
    cols = n if cols is None else cols
    if n < 2 or cols < 2:
        raise InvalidArgumentError(f"grid must be at least 2x2, got {n}x{cols}")
    preset, length_scale = resolve_level(level)

    row_factor = cholesky_factor(exponential_covariance(n, length_scale))
    col_factor = row_factor if cols == n else cholesky_factor(exponential_covariance(cols, length_scale))

    rng = np.random.default_rng(seed)
    white = rng.standard_normal((n, cols))
    values = row_factor @ white @ col_factor.T

    logger.debug(f"Generated {n}x{cols} field (level={preset.value}, length_scale={length_scale}, seed={seed})")
    return GridField(
        rows=n,
        cols=cols,
        values=values,
        seed=seed,
        correlation_level=preset,
        length_scale=length_scale,
    )


def rms(field: GridField) -> float:
    return float(np.linalg.norm(field.values) / np.sqrt(field.rows * field.cols))


def add_noise(field: GridField, noise_level: float, seed: int = 0) -> GridField:
    """Add i.i.d. Gaussian noise with std = noise_level * RMS(field)."""
    if noise_level < 0:
        raise InvalidArgumentError(f"noise level must be non-negative, got {noise_level}")
    if noise_level == 0:
        return field

    rng = np.random.default_rng(seed)
    std = noise_level * rms(field)
    noisy = field.values + std * rng.standard_normal(field.values.shape)
    return GridField(**{**field.model_dump(exclude={"values"}), "values": noisy})


def coherence(max_abs_left: float, max_abs_right: float, rows: int, cols: int) -> float:
    """Coherence of the singular subspaces; n * max(|u|, |v|)^2 on square grids."""
    if rows == cols:
        return rows * max(max_abs_left, max_abs_right) ** 2
    return max(rows * max_abs_left ** 2, cols * max_abs_right ** 2)


def diagnose(field: GridField, rank_tol: float = DEFAULT_RANK_TOL) -> SvdDiagnostics:
    """Singular spectrum, numeric rank and coherence of a field."""
    u, s, vt = svd(np.asarray(field.values))
    if s[0] == 0:
        raise InvalidArgumentError("the zero matrix has no singular subspace to diagnose")

    rank = int(np.count_nonzero(s > rank_tol * s[0]))
    max_left = float(np.max(np.abs(u[:, :rank])))
    max_right = float(np.max(np.abs(vt[:rank, :])))
    mu = coherence(max_left, max_right, field.rows, field.cols)

    logger.info(f"🔍 Diagnosed {field.rows}x{field.cols} field: rank {rank}, mu {mu:.2f}")
    return SvdDiagnostics(
        singular_values=s,
        max_abs_left=max_left,
        max_abs_right=max_right,
        coherence_mu=mu,
        numeric_rank=rank,
        rank_tol=rank_tol,
    )


def energy_fraction(diag: SvdDiagnostics, k: int) -> float:
    """Share of sum(sigma^2) captured by the top-k singular values."""
    total_count = diag.singular_values.size
    if not 1 <= k <= total_count:
        raise InvalidArgumentError(f"k must be in [1, {total_count}], got {k}")
    if k == total_count:
        return 1.0
    energy = diag.singular_values ** 2
    return float(np.sum(energy[:k]) / np.sum(energy))
