# tests/test_grid_field.py - Field generation, noise and SVD diagnostics

import numpy as np
import pytest

from mcsense.api.services.errors import InvalidArgumentError
from mcsense.api.services.grid_field import (
    add_noise,
    coherence,
    diagnose,
    energy_fraction,
    exponential_covariance,
    generate_field,
    resolve_level,
    rms,
)
from mcsense.config import CORRELATION_LENGTHS
from mcsense.models import CorrelationLevel, GridField, SvdDiagnostics


def test_generate_field_is_deterministic():
    first = generate_field(64, "high", seed=1)
    second = generate_field(64, CorrelationLevel.HIGH, seed=1)
    assert np.array_equal(first.values, second.values)
    assert first.length_scale == CORRELATION_LENGTHS["high"]


def test_generate_field_seeds_differ():
    assert not np.array_equal(generate_field(16, "low", seed=1).values, generate_field(16, "low", seed=2).values)


def test_generate_field_rectangular():
    field = generate_field(10, 20.0, seed=3, cols=14)
    assert field.values.shape == (10, 14)
    assert field.correlation_level is CorrelationLevel.CUSTOM
    assert field.length_scale == 20.0


def test_tiny_length_scale_gives_independent_cells():
    adjacent = []
    for seed in range(2000):
        values = generate_field(4, 1e-3, seed=seed).values
        adjacent.extend(zip(values[:, 0], values[:, 1]))
    left, right = np.array(adjacent).T
    assert abs(np.corrcoef(left, right)[0, 1]) < 0.1
    assert np.std(left) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("bad", ["extreme", "custom", -1.0, 0.0])
def test_resolve_level_rejects(bad):
    with pytest.raises(InvalidArgumentError):
        resolve_level(bad)


def test_resolve_level_presets():
    assert resolve_level("Medium") == (CorrelationLevel.MEDIUM, CORRELATION_LENGTHS["medium"])
    assert resolve_level(5) == (CorrelationLevel.CUSTOM, 5.0)


def test_generate_field_rejects_tiny_grid():
    with pytest.raises(InvalidArgumentError):
        generate_field(1, "high")


def test_exponential_covariance():
    cov = exponential_covariance(5, 2.0)
    assert np.allclose(np.diag(cov), 1.0)
    assert np.allclose(cov, cov.T)
    assert cov[0, 2] == pytest.approx(np.exp(-1.0))


def test_presets_order_energy():
    def mean_energy(level):
        return np.mean([energy_fraction(diagnose(generate_field(64, level, seed=s)), 6) for s in range(10)])

    low, medium, high = mean_energy("low"), mean_energy("medium"), mean_energy("high")
    assert low < medium < high
    assert high >= 0.99


def test_add_noise_zero_is_identity():
    field = generate_field(16, "high", seed=0)
    assert add_noise(field, 0.0, seed=5) is field


def test_add_noise_std_matches_level():
    field = generate_field(64, "medium", seed=2)
    noisy = add_noise(field, 0.10, seed=9)
    residual = noisy.values - field.values
    assert np.std(residual) == pytest.approx(0.10 * rms(field), rel=0.03)
    assert noisy.seed == field.seed
    assert noisy.length_scale == field.length_scale


def test_add_noise_is_deterministic():
    field = generate_field(16, "low", seed=0)
    assert np.array_equal(add_noise(field, 0.05, seed=4).values, add_noise(field, 0.05, seed=4).values)


def test_add_noise_rejects_negative_level():
    with pytest.raises(InvalidArgumentError):
        add_noise(generate_field(8, "low"), -0.1)


def test_diagnose_identity():
    diag = diagnose(GridField.from_matrix(np.eye(4)))
    assert np.allclose(diag.singular_values, 1.0)
    assert diag.numeric_rank == 4
    assert diag.max_abs_left == pytest.approx(1.0)
    assert diag.coherence_mu == pytest.approx(4.0)


def test_diagnose_all_ones_is_incoherent():
    diag = diagnose(GridField.from_matrix(np.ones((4, 4))))
    assert diag.numeric_rank == 1
    assert diag.max_abs_left == pytest.approx(0.5)
    assert diag.max_abs_right == pytest.approx(0.5)
    assert diag.coherence_mu == pytest.approx(1.0)


def test_coherence_table_value():
    assert coherence(0.7592, 0.4603, 64, 64) == pytest.approx(36.9, abs=0.05)
    assert round(coherence(0.7592, 0.4603, 64, 64)) == 37


def test_coherence_rectangular():
    assert coherence(0.5, 0.2, 8, 10) == pytest.approx(max(8 * 0.25, 10 * 0.04))


def test_diagnose_rejects_zero_matrix():
    with pytest.raises(InvalidArgumentError):
        diagnose(GridField.from_matrix(np.zeros((3, 3))))


def test_energy_fraction_examples(low_rank):
    diag = SvdDiagnostics(
        singular_values=[2.0, 1.0, 1.0], max_abs_left=1.0, max_abs_right=1.0, coherence_mu=3.0, numeric_rank=3,
    )
    assert energy_fraction(diag, 1) == pytest.approx(4 / 6)
    assert energy_fraction(diag, 3) == 1.0

    rank_one = diagnose(GridField.from_matrix(low_rank(6, 1)))
    assert energy_fraction(rank_one, 1) == pytest.approx(1.0)


@pytest.mark.parametrize("k", [0, 4])
def test_energy_fraction_rejects_k(k):
    diag = SvdDiagnostics(
        singular_values=[2.0, 1.0, 1.0], max_abs_left=1.0, max_abs_right=1.0, coherence_mu=3.0, numeric_rank=3,
    )
    with pytest.raises(InvalidArgumentError):
        energy_fraction(diag, k)


def test_grid_field_rejects_non_finite():
    with pytest.raises(ValueError):
        GridField.from_matrix(np.array([[1.0, np.nan], [0.0, 1.0]]))
