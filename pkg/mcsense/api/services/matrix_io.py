# mcsense/api/services/matrix_io.py - Matrix, mask, trace and header file formats

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from ...models import SamplingMask, SamplingScheme, TraceRow
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
BINARY_SUFFIX = ".bin"
TRACE_COLUMNS = ["outer", "inner", "lambda", "objective", "residual"]


def header_path(path: PathLike) -> Path:
    """Sidecar for a file: f.csv -> f.csv.json."""
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_header(path: PathLike, header: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path


def read_header(path: PathLike) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidArgumentError(f"header file not found: {path}")
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"header file {path} is not valid JSON: {e}")


# ---------------------------------------------------------------- matrices

def write_matrix(path: PathLike, matrix: np.ndarray) -> Path:
    """CSV with full float precision, or little-endian [u32 rows][u32 cols][f64...] for .bin."""
    path = Path(path)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D matrix, got shape {matrix.shape}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == BINARY_SUFFIX:
        rows, cols = matrix.shape
        with path.open("wb") as handle:
            handle.write(struct.pack("<II", rows, cols))
            handle.write(matrix.astype("<f8").tobytes(order="C"))
    else:
        np.savetxt(path, matrix, delimiter=",", fmt="%.17g")
    logger.debug(f"Wrote {matrix.shape} matrix to {path}")
    return path


def read_matrix(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"matrix file not found: {path}")
    if path.suffix == BINARY_SUFFIX:
        raw = path.read_bytes()
        if len(raw) < 8:
            raise InvalidArgumentError(f"{path} is too short for a matrix header")
        rows, cols = struct.unpack("<II", raw[:8])
        expected = 8 + 8 * rows * cols
        if len(raw) != expected:
            raise InvalidArgumentError(f"{path} holds {len(raw)} bytes, expected {expected} for {rows}x{cols}")
        matrix = np.frombuffer(raw[8:], dtype="<f8").reshape(rows, cols).astype(np.float64)
    else:
        try:
            matrix = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as e:
            raise InvalidArgumentError(f"could not parse matrix CSV {path}: {e}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentError(f"{path} contains non-finite values")
    return matrix


# ---------------------------------------------------------------- masks

def write_mask(path: PathLike, mask: SamplingMask) -> Path:
    """`row,col` lines (0-based, no header) plus the JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, mask.indices, delimiter=",", fmt="%d")
    write_header(header_path(path), mask.header())
    return path


def read_mask(path: PathLike) -> SamplingMask:
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"mask file not found: {path}")
    header = read_header(header_path(path))
    try:
        indices = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
        return SamplingMask(
            rows=header["rows"],
            cols=header["cols"],
            indices=indices,
            scheme=SamplingScheme(header["scheme"]),
            target_ratio=header["ratio"],
            seed=header.get("seed", 0),
            generator=header.get("generator", "halton"),
        )
    except (KeyError, ValueError) as e:
        raise InvalidArgumentError(f"invalid mask file {path}: {e}")


# ---------------------------------------------------------------- traces

def write_trace(path: PathLike, trace: List[TraceRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [[row.outer, row.inner, row.lam, row.objective, row.residual] for row in trace],
        columns=TRACE_COLUMNS,
    )
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
