# tests/conftest.py - Shared fixtures

import numpy as np
import pandas as pd
import pytest

from mcsense.api.services.bench_harness import AGGREGATE_COLUMNS
from mcsense.models import SHRINKAGE, CorrelationLevel, ExperimentPlan, SamplingScheme


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def low_rank():
    """Factory for rows x cols matrices of a given rank (product of standard-normal factors)."""

    def build(rows: int, rank: int, cols: int = None, seed: int = 0) -> np.ndarray:
        cols = rows if cols is None else cols
        gen = np.random.default_rng(seed)
        return gen.standard_normal((rows, rank)) @ gen.standard_normal((rank, cols))

    return build


@pytest.fixture
def tiny_plan():
    return ExperimentPlan(
        n=12,
        correlation_levels=[CorrelationLevel.HIGH],
        schemes=[SamplingScheme.RANDOM],
        ratios=[0.5],
        noise_levels=[0.0],
        algorithms=[SHRINKAGE],
        trials=3,
        base_seed=7,
    )


@pytest.fixture
def make_aggregates():
    """Build an aggregate table from (scheme, ratio, noise, algorithm, p, mean, std) tuples."""

    def build(rows):
        records = [
            {
                "correlation": "high",
                "noise": noise,
                "algorithm": algorithm,
                "p": p,
                "hard_rule": "paper",
                "scheme": scheme,
                "ratio": ratio,
                "trials": 10,
                "mean_nmse": mean,
                "std_nmse": std,
                "convergence_rate": 1.0,
                "mean_outer_iters": 50.0,
                "mean_inner_iters": 120.0,
            }
            for scheme, ratio, noise, algorithm, p, mean, std in rows
        ]
        return pd.DataFrame(records, columns=AGGREGATE_COLUMNS)

    return build
