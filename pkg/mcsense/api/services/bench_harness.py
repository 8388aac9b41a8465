# mcsense/api/services/bench_harness.py - Factorial reconstruction benchmark with NMSE aggregation

import hashlib
import logging
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ... import __version__
from ...config import CORRELATION_LENGTHS
from ...models import (
    RECORD_COLUMNS,
    ExperimentPlan,
    ExperimentRecord,
    PlanCell,
    SamplingScheme,
    SolverConfig,
    TrendCheck,
    TrendReport,
)
from .errors import InvalidArgumentError, McSenseError
from .grid_field import add_noise, generate_field, rms
from .matrix_io import write_header
from .mc_solvers import residual_target, solve
from .sampling import apply_mask, generate_mask

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.csv"
AGGREGATES_FILE = "aggregates.csv"
RUN_CONFIG_FILE = "run_config.json"

CELL_KEYS = ["correlation", "noise", "algorithm", "p", "hard_rule", "scheme", "ratio"]
AGGREGATE_COLUMNS = CELL_KEYS + [
    "trials", "mean_nmse", "std_nmse", "convergence_rate", "mean_outer_iters", "mean_inner_iters",
]
BLUE_NOISE_SCHEMES = [SamplingScheme.QUASI_RANDOM, SamplingScheme.QUASI_CRYSTAL, SamplingScheme.FARTHEST_POINT]


# ---------------------------------------------------------------- seeds and metric

def _token(part: Any) -> str:
    if hasattr(part, "value"):
        part = part.value
    if isinstance(part, float):
        return repr(part)
    return str(part)


def derive_seed(*parts: Any) -> int:
    """Stable 63-bit seed from a tuple of coordinates (blake2b, independent of PYTHONHASHSEED)."""
    key = "|".join(_token(part) for part in parts).encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little") & (2 ** 63 - 1)


def nmse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Squared relative Frobenius error ||estimate - truth||^2 / ||truth||^2."""
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise InvalidArgumentError(f"estimate shape {estimate.shape} does not match truth {truth.shape}")
    energy = float(np.sum(truth ** 2))
    if energy == 0:
        raise InvalidArgumentError("NMSE is undefined for an all-zero ground truth")
    return float(np.sum((estimate - truth) ** 2) / energy)


def trial_seeds(plan: ExperimentPlan, cell: PlanCell, trial: int) -> Dict[str, int]:
    """Per-trial seeds; field, noise and mask seeds are shared across cells that differ elsewhere."""
    base = plan.base_seed
    field_key = ("field", cell.correlation) if plan.fixed_field else ("field", cell.correlation, trial)
    return {
        "field": derive_seed(base, *field_key),
        "noise": derive_seed(base, "noise", cell.correlation, cell.noise, trial),
        "mask": derive_seed(base, "mask", cell.scheme, cell.ratio, trial),
        "record": derive_seed(
            base, cell.correlation, cell.scheme, cell.ratio, cell.noise,
            cell.algorithm.name, cell.algorithm.p, cell.algorithm.hard_rule, trial,
        ),
    }


# ---------------------------------------------------------------- trials

def run_trial(plan: ExperimentPlan, cell: PlanCell, trial: int) -> ExperimentRecord:
    """field -> noise -> mask -> observations -> solve -> NMSE against the clean field."""
    seeds = trial_seeds(plan, cell, trial)
    truth = generate_field(plan.n, cell.correlation, seed=seeds["field"])
    noisy = add_noise(truth, cell.noise, seed=seeds["noise"])
    mask = generate_mask(cell.scheme, plan.n, plan.n, cell.ratio, seed=seeds["mask"])
    obs = apply_mask(mask, noisy)

    noise_std = cell.noise * rms(truth)
    cfg = SolverConfig(
        **{
            **plan.solver,
            "p": cell.algorithm.p,
            "hard_rule": cell.algorithm.hard_rule,
            "sigma": residual_target(obs, noise_std),
        }
    )

    error: Optional[str] = None
    started = time.perf_counter()
    try:
        result = solve(obs, cfg)
        estimate, converged = result.estimate, result.converged
        outer, inner = result.state.outer_count, result.state.inner_count
    except McSenseError as e:
        logger.warning(f"⚠️ Trial {trial} of {cell.scheme.value}/{cell.ratio} failed: {e.detail}")
        estimate, converged, outer, inner = np.zeros_like(truth.values), False, 0, 0
        error = e.detail
    elapsed = time.perf_counter() - started

    return ExperimentRecord(
        correlation=cell.correlation.value,
        scheme=cell.scheme.value,
        ratio=cell.ratio,
        noise=cell.noise,
        algorithm=cell.algorithm.name,
        p=cell.algorithm.p,
        hard_rule=cell.algorithm.hard_rule,
        trial=trial,
        seed=seeds["record"],
        nmse=nmse(estimate, truth.values),
        converged=converged,
        outer_iters=outer,
        inner_iters=inner,
        wall_time_s=elapsed,
        error=error,
    )


# ---------------------------------------------------------------- aggregation

def records_frame(records: Iterable[ExperimentRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.row() for record in records], columns=RECORD_COLUMNS)


def aggregate(records: pd.DataFrame) -> pd.DataFrame:
    """Per-cell mean/std NMSE, convergence rate and mean iteration counts."""
    if records.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)
    grouped = records.groupby(CELL_KEYS, sort=True)
    table = grouped.agg(
        trials=("nmse", "size"),
        mean_nmse=("nmse", "mean"),
        std_nmse=("nmse", "std"),
        convergence_rate=("converged", "mean"),
        mean_outer_iters=("outer_iters", "mean"),
        mean_inner_iters=("inner_iters", "mean"),
    ).reset_index()
    # sample std; a single trial has no spread
    table["std_nmse"] = table["std_nmse"].fillna(0.0)
    table["convergence_rate"] = table["convergence_rate"].astype(float)
    return table[AGGREGATE_COLUMNS]


def _noise_label(noise: float) -> str:
    return f"noise{noise:g}"


def comparison_tables(aggregates: pd.DataFrame) -> Dict[str, pd.DataFrame]:
    """Scheme-by-ratio tables per algorithm and algorithm-by-ratio tables per scheme.

    Keys are file stems; each table holds mean NMSE with one column per sampling ratio.
    """
    tables: Dict[str, pd.DataFrame] = {}
    for (correlation, noise), block in aggregates.groupby(["correlation", "noise"], sort=True):
        prefix = f"{correlation}_{_noise_label(noise)}"
        for algorithm, rows in block.groupby("algorithm", sort=True):
            tables[f"schemes_{prefix}_{algorithm}"] = rows.pivot(index="scheme", columns="ratio", values="mean_nmse")
        for scheme, rows in block.groupby("scheme", sort=True):
            tables[f"algorithms_{prefix}_{scheme}"] = rows.pivot(index="algorithm", columns="ratio", values="mean_nmse")
    return tables


def plot_series(aggregates: pd.DataFrame) -> Dict[str, pd.DataFrame]:
    """(ratio, mean_nmse, std) series, one frame per (correlation, noise, algorithm) figure."""
    series: Dict[str, pd.DataFrame] = {}
    keys = ["correlation", "noise", "algorithm"]
    for (correlation, noise, algorithm), rows in aggregates.groupby(keys, sort=True):
        frame = rows[["scheme", "ratio", "mean_nmse", "std_nmse"]].rename(columns={"std_nmse": "std"})
        series[f"{correlation}_{_noise_label(noise)}_{algorithm}"] = frame.reset_index(drop=True)
    return series


# ---------------------------------------------------------------- harness

class BenchmarkHarness:
    """Runs every cell x trial of an experiment plan and writes records, aggregates and tables."""

    def __init__(self, plan: ExperimentPlan, out_dir: Union[str, Path], jobs: int = 1, plot_data: bool = False):
        self.plan = plan
        self.out_dir = Path(out_dir)
        self.jobs = jobs
        self.plot_data = plot_data
        self.records_path = self.out_dir / RECORDS_FILE
        logger.info(
            f"🧪 Benchmark harness ready: {len(plan.cells())} cells x {plan.trials} trials, "
            f"n={plan.n}, jobs={jobs}"
        )

    def run_config(self) -> Dict[str, Any]:
        return {
            "version": __version__,
            "plan": self.plan.model_dump(mode="json"),
            "correlation_lengths": dict(CORRELATION_LENGTHS),
            "jobs": self.jobs,
            "plot_data": self.plot_data,
        }

    def _run_cell(self, cell: PlanCell, parallel: Parallel) -> List[ExperimentRecord]:
        if self.jobs == 1:
            return [run_trial(self.plan, cell, trial) for trial in range(self.plan.trials)]
        return parallel(delayed(run_trial)(self.plan, cell, trial) for trial in range(self.plan.trials))

    def run(self) -> Dict[str, Any]:
        """Stream records cell by cell, then aggregate; completed cells survive an abort."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        write_header(self.out_dir / RUN_CONFIG_FILE, self.run_config())
        if self.records_path.exists():
            self.records_path.unlink()

        start_time = time.time()
        failures = 0
        cells = self.plan.cells()
        with Parallel(n_jobs=self.jobs) as parallel:
            for index, cell in enumerate(cells, start=1):
                records = self._run_cell(cell, parallel)
                failures += sum(record.error is not None for record in records)
                records_frame(records).to_csv(
                    self.records_path, mode="a", header=index == 1, index=False,
                )
                logger.info(
                    f"📊 Cell {index}/{len(cells)} {cell.correlation.value}/{cell.scheme.value}/"
                    f"ratio={cell.ratio}/noise={cell.noise}/{cell.algorithm.name}: "
                    f"mean NMSE {np.mean([r.nmse for r in records]):.4g}"
                )

        records = pd.read_csv(self.records_path)
        aggregates = aggregate(records)
        aggregates.to_csv(self.out_dir / AGGREGATES_FILE, index=False)

        tables = comparison_tables(aggregates)
        table_dir = self.out_dir / "tables"
        table_dir.mkdir(exist_ok=True)
        for stem, table in tables.items():
            table.to_csv(table_dir / f"{stem}.csv")

        if self.plot_data:
            plot_dir = self.out_dir / "plots"
            plot_dir.mkdir(exist_ok=True)
            for stem, frame in plot_series(aggregates).items():
                frame.to_csv(plot_dir / f"{stem}.csv", index=False)

        elapsed = time.time() - start_time
        logger.info(f"✅ Benchmark finished: {len(records)} records in {elapsed:.1f}s ({failures} failed solves)")
        return {
            "records": records,
            "aggregates": aggregates,
            "tables": tables,
            "failures": failures,
            "out_dir": str(self.out_dir),
        }


def run_plan(plan: ExperimentPlan, out_dir: Union[str, Path], jobs: int = 1, plot_data: bool = False) -> Dict[str, Any]:
    return BenchmarkHarness(plan, out_dir, jobs=jobs, plot_data=plot_data).run()


# ---------------------------------------------------------------- trend checks

def _cell_name(row: Dict[str, Any], keys: List[str]) -> str:
    return ", ".join(f"{key}={row[key]}" for key in keys)


def _missing_cells(aggregates: pd.DataFrame) -> List[str]:
    axes = ["correlation", "noise", "algorithm", "scheme", "ratio"]
    present = set(map(tuple, aggregates[axes].itertuples(index=False)))
    expected = pd.MultiIndex.from_product([sorted(aggregates[axis].unique()) for axis in axes])
    return [
        _cell_name(dict(zip(axes, cell)), axes)
        for cell in expected
        if tuple(cell) not in present
    ]


def _ratio_check(aggregates: pd.DataFrame) -> TrendCheck:
    check = TrendCheck(name="ratio_monotone", description="mean NMSE non-increasing as the sampling ratio grows")
    keys = ["correlation", "noise", "algorithm", "scheme"]
    margins = []
    for _, rows in aggregates.groupby(keys, sort=True):
        rows = rows.sort_values("ratio")
        for (_, low), (_, high) in zip(rows.iterrows(), rows.iloc[1:].iterrows()):
            margin = low["mean_nmse"] - high["mean_nmse"]
            margins.append(margin)
            if margin < 0:
                check.violations.append(
                    f"{_cell_name(low, keys)}: ratio {low['ratio']} -> {high['ratio']} "
                    f"raises NMSE {low['mean_nmse']:.4g} -> {high['mean_nmse']:.4g}"
                )
    return _finish(check, margins)


def _noise_check(aggregates: pd.DataFrame) -> TrendCheck:
    check = TrendCheck(name="noise_monotone", description="mean NMSE non-decreasing in noise, within one std")
    keys = ["correlation", "algorithm", "scheme", "ratio"]
    margins = []
    for _, rows in aggregates.groupby(keys, sort=True):
        rows = rows.sort_values("noise")
        for (_, quiet), (_, loud) in zip(rows.iterrows(), rows.iloc[1:].iterrows()):
            slack = max(quiet["std_nmse"], loud["std_nmse"])
            margin = loud["mean_nmse"] - quiet["mean_nmse"] + slack
            margins.append(margin)
            if margin < 0:
                check.violations.append(
                    f"{_cell_name(quiet, keys)}: noise {quiet['noise']} -> {loud['noise']} "
                    f"lowers NMSE {quiet['mean_nmse']:.4g} -> {loud['mean_nmse']:.4g} beyond one std"
                )
    return _finish(check, margins)


def _algorithm_check(aggregates: pd.DataFrame) -> TrendCheck:
    check = TrendCheck(name="nonconvex_vs_shrinkage", description="non-convex mean NMSE <= shrinkage per cell")
    keys = ["correlation", "noise", "scheme", "ratio"]
    shrinkage = aggregates[aggregates["p"] == 1.0]
    nonconvex = aggregates[(aggregates["p"] > 0) & (aggregates["p"] < 1)]
    merged = nonconvex.merge(shrinkage, on=keys, suffixes=("_nc", "_sh"))
    margins = []
    for _, row in merged.iterrows():
        margin = row["mean_nmse_sh"] - row["mean_nmse_nc"]
        margins.append(margin)
        if margin < 0:
            check.violations.append(
                f"{_cell_name(row, keys)}: {row['algorithm_nc']} {row['mean_nmse_nc']:.4g} > "
                f"shrinkage {row['mean_nmse_sh']:.4g}"
            )
    return _finish(check, margins)


def _blue_noise_check(aggregates: pd.DataFrame) -> TrendCheck:
    lowest = aggregates["ratio"].min()
    check = TrendCheck(
        name="blue_noise_vs_random",
        description=f"blue-noise schemes beat random sampling at ratio {lowest:g}",
    )
    keys = ["correlation", "noise", "algorithm"]
    rows = aggregates[aggregates["ratio"] == lowest]
    random_rows = rows[rows["scheme"] == SamplingScheme.RANDOM.value]
    blue_rows = rows[rows["scheme"].isin([s.value for s in BLUE_NOISE_SCHEMES])]
    merged = blue_rows.merge(random_rows, on=keys, suffixes=("_blue", "_rand"))
    margins = []
    for _, row in merged.iterrows():
        margin = row["mean_nmse_rand"] - row["mean_nmse_blue"]
        margins.append(margin)
        if margin <= 0:
            check.violations.append(
                f"{_cell_name(row, keys)}: {row['scheme_blue']} {row['mean_nmse_blue']:.4g} >= "
                f"random {row['mean_nmse_rand']:.4g}"
            )
    return _finish(check, margins, strict=True)


def _finish(check: TrendCheck, margins: List[float], strict: bool = False) -> TrendCheck:
    if not margins:
        return check
    worst = float(min(margins))
    passed = worst > 0 if strict else worst >= 0
    return check.model_copy(update={"passed": passed, "worst_margin": worst, "comparisons": len(margins)})


def _comparison_gaps(aggregates: pd.DataFrame) -> List[str]:
    """Counterpart cells that would give each present cell something to be compared with."""
    axes = ["correlation", "noise", "algorithm", "scheme", "ratio"]
    blue = "|".join(scheme.value for scheme in BLUE_NOISE_SCHEMES)
    gaps: List[str] = []
    for _, row in aggregates.iterrows():
        cell = {axis: row[axis] for axis in axes}
        counterparts = [
            {**cell, "ratio": "<another ratio>"},
            {**cell, "noise": "<another noise level>"},
            {**cell, "scheme": SamplingScheme.RANDOM.value if row["scheme"] != SamplingScheme.RANDOM.value else blue},
        ]
        if row["p"] == 1.0:
            counterparts.append({**cell, "algorithm": "<non-convex, 0<p<1>"})
        elif 0 < row["p"] < 1:
            counterparts.append({**cell, "algorithm": "<shrinkage, p=1>"})
        else:
            counterparts.append({**cell, "algorithm": "<shrinkage, p=1> and <non-convex, 0<p<1>"})
        gaps.extend(_cell_name(counterpart, axes) for counterpart in counterparts)
    return list(dict.fromkeys(gaps))


def compare_report(aggregates: pd.DataFrame) -> TrendReport:
    """Ordering and trend checks over aggregated results.

    Checks that have nothing to compare are reported with passed=None.
    """
    missing_columns = [column for column in AGGREGATE_COLUMNS if column not in aggregates.columns]
    if missing_columns:
        raise InvalidArgumentError(f"aggregates lack columns {missing_columns}")
    if aggregates.empty:
        raise InvalidArgumentError("no aggregate cells to compare")

    missing = _missing_cells(aggregates)
    if missing:
        raise InvalidArgumentError(f"aggregates miss {len(missing)} factorial cells: {'; '.join(missing)}")

    checks = [
        _ratio_check(aggregates),
        _noise_check(aggregates),
        _algorithm_check(aggregates),
        _blue_noise_check(aggregates),
    ]
    if all(check.passed is None for check in checks):
        gaps = _comparison_gaps(aggregates)
        raise InvalidArgumentError(
            f"nothing to compare; add any of these counterpart cells: {'; '.join(gaps)}",
            {"missing": gaps},
        )
    report = TrendReport(checks=checks)
    for check in checks:
        status = "skipped" if check.passed is None else ("passed" if check.passed else "FAILED")
        logger.info(f"📈 {check.name}: {status} ({check.comparisons} comparisons)")
    return report
