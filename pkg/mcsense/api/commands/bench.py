# mcsense/api/commands/bench.py - bench command: run an experiment plan

import argparse
import json
import logging
from pathlib import Path

from ...config import FULL_TRIALS, get_settings
from ...models import ExperimentPlan
from ..services.bench_harness import compare_report, run_plan
from ..services.errors import InvalidArgumentError
from ..services.matrix_io import write_header
from . import cli_header

logger = logging.getLogger(__name__)

TRENDS_FILE = "trends.json"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("bench", help="Run a factorial benchmark plan")
    parser.add_argument("--plan", default=None, help="JSON experiment plan (defaults to the built-in sweep)")
    parser.add_argument("--trials", type=int, default=None, help="trials per cell")
    parser.add_argument("--full", action="store_true", help=f"run the full {FULL_TRIALS} trials per cell")
    parser.add_argument("--seed", type=int, default=None, help="base seed (overrides the plan)")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers for trials")
    parser.add_argument("--out", default=None, help="results directory")
    parser.add_argument("--plot-data", action="store_true", help="also write per-figure series CSVs")
    parser.set_defaults(handler=bench)


def load_plan(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidArgumentError(f"plan file not found: {path}")
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"plan file {path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise InvalidArgumentError(f"plan file {path} must hold a JSON object")
    return raw


def bench(args: argparse.Namespace) -> None:
    settings = get_settings()
    raw = load_plan(args.plan) if args.plan else {}

    if args.full:
        raw["trials"] = FULL_TRIALS
    elif args.trials is not None:
        raw["trials"] = args.trials
    else:
        raw.setdefault("trials", settings.default_trials)
    if args.seed is not None:
        raw["base_seed"] = args.seed
    plan = ExperimentPlan.model_validate(raw)

    jobs = args.jobs or settings.jobs
    out_dir = Path(args.out or settings.results_dir)
    result = run_plan(plan, out_dir, jobs=jobs, plot_data=args.plot_data)

    try:
        report = compare_report(result["aggregates"])
        write_header(out_dir / TRENDS_FILE, report.model_dump(mode="json"))
    except InvalidArgumentError as e:
        logger.info(f"ℹ️ Trend checks skipped: {e.detail}")

    write_header(
        out_dir / "cli.json",
        cli_header(args, plan=plan.model_dump(mode="json"), jobs=jobs, out_dir=str(out_dir)),
    )
