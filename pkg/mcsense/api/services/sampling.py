# mcsense/api/services/sampling.py - Sampling masks on the sensor grid and the masking operator

import logging
import warnings
from typing import Iterable, Iterator, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from ...models import CoverageReport, GridField, Observations, SamplingMask, SamplingScheme
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

HALTON_BASES = (2, 3)
MAX_OFFSET = 2 ** 20

SYMMETRY = 5
STAR = np.stack([np.cos(2 * np.pi * np.arange(SYMMETRY) / SYMMETRY),
                 np.sin(2 * np.pi * np.arange(SYMMETRY) / SYMMETRY)], axis=1)
# conjugate star: projection of Z^5 onto internal space
STAR_PERP = np.stack([np.cos(4 * np.pi * np.arange(SYMMETRY) / SYMMETRY),
                      np.sin(4 * np.pi * np.arange(SYMMETRY) / SYMMETRY)], axis=1)
# vertex K @ STAR = (5/2) z + a bounded drift for the multigrid point z of its tile
STAR_SCALE = SYMMETRY / 2
VERTEX_DRIFT = 8.0
# tiles (= vertices) per unit area with unit edges: 4/5 (sin 72 + sin 36)
VERTEX_DENSITY = 0.8 * (np.sin(2 * np.pi / 5) + np.sin(np.pi / 5))
BASE_ROTATION_DEG = 9.0
ROTATION_JITTER_DEG = 3.0
PITCH_GROWTH = 1.01
MAX_PITCH_STEPS = 60

MatrixLike = Union[GridField, np.ndarray]


def mask_size(rows: int, cols: int, ratio: float) -> int:
    """Exact sample count round(ratio * rows * cols), ties to even."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"grid must be non-empty, got {rows}x{cols}")
    if not 0 < ratio <= 1:
        raise InvalidArgumentError(f"sampling ratio must be in (0, 1], got {ratio}")
    m = round(ratio * rows * cols)
    if m < 1:
        raise InvalidArgumentError(f"ratio {ratio} selects no cell of a {rows}x{cols} grid")
    return m


def _build_mask(flat: np.ndarray, rows: int, cols: int, scheme: SamplingScheme,
                ratio: float, seed: int, generator: str = "halton") -> SamplingMask:
    pairs = np.stack(np.divmod(np.asarray(flat, dtype=np.int64), cols), axis=1)
    return SamplingMask(
        rows=rows, cols=cols, indices=pairs, scheme=scheme,
        target_ratio=ratio, seed=seed, generator=generator,
    )


def _collect_distinct(batches: Iterable[np.ndarray], m: int, total: int) -> np.ndarray:
    """Take cells from candidate batches in order, skipping ones already taken."""
    taken = np.zeros(total, dtype=bool)
    chosen = []
    count = 0
    for flat in batches:
        _, first = np.unique(flat, return_index=True)
        flat = flat[np.sort(first)]
        flat = flat[~taken[flat]][: m - count]
        taken[flat] = True
        chosen.append(flat)
        count += flat.size
        if count == m:
            break
    if count < m:
        # deterministic extension with the lowest untaken row-major cells
        chosen.append(np.flatnonzero(~taken)[: m - count])
    return np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)


# ---------------------------------------------------------------- random

def random_mask(rows: int, cols: int, ratio: float, seed: int = 0) -> SamplingMask:
    """Uniform sampling without replacement."""
    m = mask_size(rows, cols, ratio)
    rng = np.random.default_rng(seed)
    flat = rng.choice(rows * cols, size=m, replace=False)
    return _build_mask(flat, rows, cols, SamplingScheme.RANDOM, ratio, seed)


# ---------------------------------------------------------------- quasi-random

def radical_inverse(index, base: int = 2) -> np.ndarray:
    """Van der Corput radical inverse of non-negative integers in the given base."""
    remaining = np.array(index, dtype=np.int64, copy=True)
    result = np.zeros(remaining.shape, dtype=np.float64)
    scale = 1.0 / base
    while np.any(remaining > 0):
        remaining, digit = np.divmod(remaining, base)
        result += digit * scale
        scale /= base
    return result


def _qmc_batches(sampler: qmc.QMCEngine, rows: int, cols: int, start: int, batch: int,
                 limit: int) -> Iterator[np.ndarray]:
    sampler.fast_forward(start)
    produced = 0
    while produced < limit:
        with warnings.catch_warnings():
            # balance warnings for non power-of-two Sobol draws
            warnings.simplefilter("ignore", UserWarning)
            points = sampler.random(batch)
        produced += batch
        r = np.minimum(np.floor(points[:, 0] * rows), rows - 1).astype(np.int64)
        c = np.minimum(np.floor(points[:, 1] * cols), cols - 1).astype(np.int64)
        yield r * cols + c


def quasi_random_mask(rows: int, cols: int, ratio: float, seed: int = 0,
                      generator: str = "halton") -> SamplingMask:
    """Low-discrepancy points (Halton bases 2/3, or Sobol) mapped to grid cells.

    Unscrambled Halton point i is (radical_inverse(i, 2), radical_inverse(i, 3)).
    """
    m = mask_size(rows, cols, ratio)
    total = rows * cols
    start = 1 + int(np.random.default_rng(seed).integers(0, MAX_OFFSET))
    if generator == "halton":
        sampler = qmc.Halton(d=len(HALTON_BASES), scramble=False)
    elif generator == "sobol":
        sampler = qmc.Sobol(d=2, scramble=False)
    else:
        raise InvalidArgumentError(f"Unknown quasi-random generator '{generator}'")
    batches = _qmc_batches(sampler, rows, cols, start, max(2 * m, 64), 64 * total)
    flat = _collect_distinct(batches, m, total)
    return _build_mask(flat, rows, cols, SamplingScheme.QUASI_RANDOM, ratio, seed, generator)


# ---------------------------------------------------------------- quasi-crystal

def multigrid_vertices(radius: float, offsets: np.ndarray) -> np.ndarray:
    """Vertices of the rhombus tiling dual to a 5-fold multigrid (de Bruijn).

    Grid lines of family j are {z : z . e_j - offsets[j] in Z}. Every pair of lines from
    two families meets in one rhombus whose corners are integer 5-vectors K; a vertex sits
    at K @ STAR. Returns the distinct K of all tiles within `radius` of the origin.
    """
    reach = (radius + VERTEX_DRIFT) / STAR_SCALE + 1
    lines = np.arange(np.floor(-reach) - 1, np.ceil(reach) + 1)
    nt, nr = (axis.ravel() for axis in np.meshgrid(lines, lines, indexing="ij"))
    corners = []
    for t in range(SYMMETRY - 1):
        for r in range(t + 1, SYMMETRY):
            rhs = np.stack([nt + offsets[t], nr + offsets[r]])
            z = np.linalg.solve(STAR[[t, r]], rhs).T
            keep = np.hypot(z[:, 0], z[:, 1]) <= reach
            k = np.ceil(z[keep] @ STAR.T - offsets).astype(np.int64)
            k[:, t] = nt[keep].astype(np.int64)
            k[:, r] = nr[keep].astype(np.int64)
            for dt, dr in ((0, 0), (1, 0), (0, 1), (1, 1)):
                corner = k.copy()
                corner[:, t] += dt
                corner[:, r] += dr
                corners.append(corner)
    return np.unique(np.concatenate(corners), axis=0)


def _quasi_crystal_candidates(rows: int, cols: int, pitch: float, offsets: np.ndarray,
                              angle: float) -> np.ndarray:
    """Grid cells hit by the tiling vertices (pitch tiling units per cell), window centre first."""
    k = multigrid_vertices(0.5 * pitch * np.hypot(rows, cols) + 1, offsets)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    points = (k @ STAR) @ rotation.T / pitch + np.array([rows / 2, cols / 2])
    cells = np.floor(points).astype(np.int64)
    inside = (cells[:, 0] >= 0) & (cells[:, 0] < rows) & (cells[:, 1] >= 0) & (cells[:, 1] < cols)
    flat = cells[inside, 0] * cols + cells[inside, 1]

    # distance from the acceptance-window centre in internal space
    centre = (0.5 - offsets) @ STAR_PERP
    score = np.linalg.norm(k[inside] @ STAR_PERP - centre, axis=1)
    return flat[np.lexsort((flat, score))]


def quasi_crystal_mask(rows: int, cols: int, ratio: float, seed: int = 0) -> SamplingMask:
    """Vertices of a 5-fold quasiperiodic tiling scaled to the target density.

    The seed picks the multigrid offsets (the window position) and a small rotation about
    the 9 degree orientation that keeps grid rows and columns off the tiling directions.
    """
    m = mask_size(rows, cols, ratio)
    total = rows * cols
    gen = np.random.default_rng(seed)
    offsets = gen.random(SYMMETRY)
    angle = np.deg2rad(BASE_ROTATION_DEG + gen.uniform(-ROTATION_JITTER_DEG, ROTATION_JITTER_DEG))
    pitch = np.sqrt(m / (VERTEX_DENSITY * total))

    # coarsen the cells until the vertices cover at least m distinct ones
    for _ in range(MAX_PITCH_STEPS):
        ordered = _quasi_crystal_candidates(rows, cols, pitch, offsets, angle)
        distinct = np.unique(ordered).size
        if distinct >= m:
            break
        pitch *= max(PITCH_GROWTH, np.sqrt(m / max(distinct, 1)))
    flat = _collect_distinct([ordered], m, total)
    logger.debug(f"Quasi-crystal mask: pitch {pitch:.3f}, {m} of {distinct} cells")
    return _build_mask(flat, rows, cols, SamplingScheme.QUASI_CRYSTAL, ratio, seed)


# ---------------------------------------------------------------- farthest point

def farthest_point_order(rows: int, cols: int, first: int, count: int) -> np.ndarray:
    """Greedy farthest-point traversal of the grid from a given first cell.

    Ties go to the smallest row-major index (np.argmax returns the first maximum).
    """
    grid = np.indices((rows, cols)).reshape(2, -1).T.astype(np.int64)

    def squared_distance(flat_index: int) -> np.ndarray:
        delta = grid - grid[flat_index]
        return np.einsum("ij,ij->i", delta, delta)

    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = first
    distance = squared_distance(first)
    for step in range(1, count):
        nxt = int(np.argmax(distance))
        chosen[step] = nxt
        distance = np.minimum(distance, squared_distance(nxt))
    return chosen


def farthest_point_mask(rows: int, cols: int, ratio: float, seed: int = 0) -> SamplingMask:
    m = mask_size(rows, cols, ratio)
    first = int(np.random.default_rng(seed).integers(rows * cols))
    flat = farthest_point_order(rows, cols, first, m)
    return _build_mask(flat, rows, cols, SamplingScheme.FARTHEST_POINT, ratio, seed)


def generate_mask(scheme: Union[SamplingScheme, str], rows: int, cols: int, ratio: float,
                  seed: int = 0, generator: str = "halton") -> SamplingMask:
    """Dispatch to the generator of a sampling scheme."""
    try:
        scheme = SamplingScheme(scheme)
    except ValueError:
        raise InvalidArgumentError(
            f"Unknown sampling scheme '{scheme}'. Use one of {[s.value for s in SamplingScheme]}"
        )
    if scheme is SamplingScheme.RANDOM:
        mask = random_mask(rows, cols, ratio, seed)
    elif scheme is SamplingScheme.QUASI_RANDOM:
        mask = quasi_random_mask(rows, cols, ratio, seed, generator)
    elif scheme is SamplingScheme.QUASI_CRYSTAL:
        mask = quasi_crystal_mask(rows, cols, ratio, seed)
    else:
        mask = farthest_point_mask(rows, cols, ratio, seed)
    logger.debug(f"Generated {scheme.value} mask: {mask.size} cells of {rows}x{cols} (seed={seed})")
    return mask


# ---------------------------------------------------------------- masking operator

def _matrix(field: MatrixLike) -> np.ndarray:
    return np.asarray(field.values if isinstance(field, GridField) else field, dtype=np.float64)


def restrict(mask: SamplingMask, matrix: np.ndarray) -> np.ndarray:
    """M x: entries on the mask in row-major order."""
    return matrix[mask.indices[:, 0], mask.indices[:, 1]]


def scatter(mask: SamplingMask, values: np.ndarray) -> np.ndarray:
    """M^T y: zero-filled matrix with values placed on the mask."""
    matrix = np.zeros((mask.rows, mask.cols))
    matrix[mask.indices[:, 0], mask.indices[:, 1]] = values
    return matrix


def apply_mask(mask: SamplingMask, field: MatrixLike) -> Observations:
    matrix = _matrix(field)
    if matrix.shape != (mask.rows, mask.cols):
        raise InvalidArgumentError(f"field shape {matrix.shape} does not match mask ({mask.rows}, {mask.cols})")
    return Observations(mask=mask, values=restrict(mask, matrix))


def adjoint_mask(mask: SamplingMask, obs: Observations) -> np.ndarray:
    if not mask.same_support(obs.mask):
        raise InvalidArgumentError("observations were taken with a different mask")
    return scatter(mask, obs.values)


def coverage_report(mask: SamplingMask) -> CoverageReport:
    """Empty rows/columns and minimum pairwise distance; diagnostic only."""
    row_hits = np.bincount(mask.indices[:, 0], minlength=mask.rows)
    col_hits = np.bincount(mask.indices[:, 1], minlength=mask.cols)
    if mask.size < 2:
        min_distance = float("inf")
    else:
        distances, _ = cKDTree(mask.indices).query(mask.indices, k=2)
        min_distance = float(distances[:, 1].min())
    return CoverageReport(
        empty_rows=int(np.count_nonzero(row_hits == 0)),
        empty_cols=int(np.count_nonzero(col_hits == 0)),
        min_pairwise_distance=min_distance,
    )
