# tests/test_acceptance.py - Desk-scale acceptance runs (pytest -m slow)

import time

import numpy as np
import pytest

from mcsense.api.services.bench_harness import compare_report, nmse, run_plan
from mcsense.api.services.grid_field import diagnose, energy_fraction, generate_field
from mcsense.api.services.mc_solvers import residual_target, solve, solve_fixed_lambda
from mcsense.api.services.sampling import apply_mask, random_mask
from mcsense.models import HARD_THRESHOLDING, NONCONVEX, SHRINKAGE, CorrelationLevel, ExperimentPlan, SamplingScheme, SolverConfig

pytestmark = pytest.mark.slow


def test_exact_recovery_rank_five(low_rank):
    recovered = 0
    for trial in range(100):
        truth = low_rank(64, 5, seed=trial)
        obs = apply_mask(random_mask(64, 64, 0.5, seed=trial), truth)
        started = time.perf_counter()
        result = solve(obs, SolverConfig(p=1.0, dec_fac=0.9, inner_tol=1e-6, sigma=residual_target(obs)))
        assert time.perf_counter() - started < 10.0
        recovered += nmse(result.estimate, truth) < 1e-4
    assert recovered >= 95


@pytest.mark.parametrize("p", [0.0, 0.5, 0.8, 1.0])
def test_objective_descent_many_instances(p, low_rank):
    for instance in range(100):
        gen = np.random.default_rng(instance)
        truth = low_rank(16, int(gen.integers(1, 5)), seed=instance)
        obs = apply_mask(random_mask(16, 16, float(gen.uniform(0.2, 0.8)), seed=instance), truth)
        lam = float(gen.uniform(0.01, 10.0))
        state = solve_fixed_lambda(obs, np.zeros((16, 16)), lam, SolverConfig(p=p, max_inner=100))
        for before, after in zip(state.objectives, state.objectives[1:]):
            assert after <= before + 1e-10 * max(1.0, before)


def test_high_correlation_energy():
    fractions = [energy_fraction(diagnose(generate_field(64, "high", seed=s)), 6) for s in range(100)]
    assert np.mean(fractions) >= 0.99


def test_table_orderings(tmp_path):
    schemes = run_plan(
        ExperimentPlan(
            n=64,
            schemes=[SamplingScheme.RANDOM, SamplingScheme.QUASI_CRYSTAL],
            ratios=[0.1, 0.2, 0.3, 0.4, 0.5],
            noise_levels=[0.0, 0.05, 0.10],
            algorithms=[SHRINKAGE],
            trials=100,
        ),
        tmp_path / "schemes",
        jobs=-1,
    )["aggregates"]

    lowest = schemes[schemes["ratio"] == 0.1].set_index(["correlation", "noise", "scheme"])["mean_nmse"]
    for level in ("low", "medium", "high"):
        for noise in (0.0, 0.05, 0.10):
            assert lowest[(level, noise, "quasi-crystal")] < lowest[(level, noise, "random")]

    report = compare_report(schemes)
    assert report.check("ratio_monotone").passed
    assert report.check("noise_monotone").passed

    algorithms = run_plan(
        ExperimentPlan(
            n=64,
            correlation_levels=[CorrelationLevel.HIGH],
            schemes=[SamplingScheme.QUASI_CRYSTAL],
            ratios=[0.1],
            noise_levels=[0.0],
            algorithms=[SHRINKAGE, HARD_THRESHOLDING, NONCONVEX],
            trials=100,
        ),
        tmp_path / "algorithms",
        jobs=-1,
    )["aggregates"].set_index("algorithm")["mean_nmse"]
    assert algorithms["nonconvex"] <= algorithms["shrinkage"] <= algorithms["hard-thresholding"]
