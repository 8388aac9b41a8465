# tests/test_matrix_io.py - Matrix, mask and trace files

import json
import struct

import numpy as np
import pandas as pd
import pytest

from mcsense.api.services.errors import InvalidArgumentError
from mcsense.api.services.matrix_io import (
    TRACE_COLUMNS,
    header_path,
    read_mask,
    read_matrix,
    write_mask,
    write_matrix,
    write_trace,
)
from mcsense.api.services.sampling import quasi_crystal_mask
from mcsense.models import TraceRow


def test_csv_matrix_keeps_full_precision(tmp_path, rng):
    matrix = rng.standard_normal((4, 6))
    path = write_matrix(tmp_path / "field.csv", matrix)
    assert np.array_equal(read_matrix(path), matrix)
    assert len(path.read_text().splitlines()) == 4


def test_binary_matrix_layout(tmp_path):
    matrix = np.arange(6, dtype=float).reshape(2, 3)
    path = write_matrix(tmp_path / "field.bin", matrix)
    raw = path.read_bytes()
    assert struct.unpack("<II", raw[:8]) == (2, 3)
    assert len(raw) == 8 + 6 * 8
    assert np.array_equal(read_matrix(path), matrix)


def test_truncated_binary_is_rejected(tmp_path):
    path = tmp_path / "short.bin"
    path.write_bytes(struct.pack("<II", 3, 3) + b"\x00" * 16)
    with pytest.raises(InvalidArgumentError):
        read_matrix(path)


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_non_finite_matrix_is_rejected(tmp_path, suffix):
    path = write_matrix(tmp_path / f"field{suffix}", np.array([[1.0, np.nan], [np.inf, 2.0]]))
    with pytest.raises(InvalidArgumentError):
        read_matrix(path)


def test_missing_and_malformed_matrix(tmp_path):
    with pytest.raises(InvalidArgumentError):
        read_matrix(tmp_path / "absent.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    with pytest.raises(InvalidArgumentError):
        read_matrix(bad)


def test_mask_file_and_sidecar(tmp_path):
    mask = quasi_crystal_mask(16, 12, 0.25, seed=4)
    path = write_mask(tmp_path / "mask.csv", mask)

    lines = path.read_text().splitlines()
    assert len(lines) == mask.size
    assert lines[0] == f"{mask.indices[0, 0]},{mask.indices[0, 1]}"

    header = json.loads(header_path(path).read_text())
    assert header == {"scheme": "quasi-crystal", "rows": 16, "cols": 12, "ratio": 0.25, "seed": 4, "generator": "halton"}
    assert read_mask(path).same_support(mask)


def test_mask_without_sidecar_is_rejected(tmp_path):
    path = tmp_path / "mask.csv"
    path.write_text("0,0\n1,1\n")
    with pytest.raises(InvalidArgumentError):
        read_mask(path)


def test_trace_columns(tmp_path):
    rows = [TraceRow(outer=1, inner=0, lam=2.0, objective=10.0, residual=3.0),
            TraceRow(outer=1, inner=1, lam=2.0, objective=8.0, residual=2.5)]
    frame = pd.read_csv(write_trace(tmp_path / "trace.csv", rows))
    assert list(frame.columns) == TRACE_COLUMNS
    assert frame["objective"].tolist() == [10.0, 8.0]
