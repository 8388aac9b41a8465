# mcsense/api/commands/solve.py - solve command: reconstruct a field from a mask

import argparse
import logging
from typing import Union

from ...models import SolverConfig
from ..services.bench_harness import nmse
from ..services.errors import InvalidArgumentError
from ..services.matrix_io import header_path, read_mask, read_matrix, write_header, write_matrix, write_trace
from ..services.mc_solvers import auto_lambda, residual_target, solve
from ..services.sampling import apply_mask
from . import cli_header

logger = logging.getLogger(__name__)


def _auto_or_float(value: str) -> Union[str, float]:
    if value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got '{value}'")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("solve", help="Complete a field from its masked entries")
    parser.add_argument("--field", required=True, help="field to sample (.csv or .bin)")
    parser.add_argument("--mask", required=True, help="mask CSV with its .json sidecar")
    parser.add_argument("--p", type=float, default=1.0, help="1 shrinkage, 0 hard thresholding, (0,1) non-convex")
    parser.add_argument("--hard-rule", choices=["paper", "half", "derived"], default="paper",
                        help="paper (alias half): lambda/(2 alpha); derived: sqrt(lambda/alpha)")
    parser.add_argument("--max-polish", type=int, default=1000, help="final-lambda steps once sigma is met")
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--sigma", type=_auto_or_float, default="auto", help="residual target or 'auto'")
    parser.add_argument("--noise-std", type=float, default=None, help="known noise std for --sigma auto")
    parser.add_argument("--lambda-init", type=_auto_or_float, default="auto")
    parser.add_argument("--dec-fac", type=float, default=0.9)
    parser.add_argument("--inner-tol", type=float, default=1e-6)
    parser.add_argument("--max-outer", type=int, default=200)
    parser.add_argument("--max-inner", type=int, default=200)
    parser.add_argument("--truth", default=None, help="ground truth for an NMSE report")
    parser.add_argument("--out", required=True, help="estimate file (.csv or .bin)")
    parser.add_argument("--trace", default=None, help="optional per-iteration trace CSV")
    parser.set_defaults(handler=solve_field)


def solve_field(args: argparse.Namespace) -> None:
    field = read_matrix(args.field)
    mask = read_mask(args.mask)
    obs = apply_mask(mask, field)

    sigma = residual_target(obs, args.noise_std) if args.sigma == "auto" else args.sigma
    lambda_init = auto_lambda(obs) if args.lambda_init == "auto" else args.lambda_init
    cfg = SolverConfig(
        p=args.p,
        alpha=args.alpha,
        sigma=sigma,
        dec_fac=args.dec_fac,
        inner_tol=args.inner_tol,
        lambda_init=lambda_init,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        max_polish=args.max_polish,
        hard_rule=args.hard_rule,
        record_trace=args.trace is not None,
    )

    logger.info(f"🚀 Solving {mask.rows}x{mask.cols} completion ({cfg.mode}) from {mask.size} samples")
    result = solve(obs, cfg)
    if not result.converged:
        logger.warning(
            f"⚠️ Iteration cap reached: residual {result.state.residual:.4g} > sigma {sigma:.4g}"
        )

    error = None
    if args.truth is not None:
        truth = read_matrix(args.truth)
        if truth.shape != result.estimate.shape:
            raise InvalidArgumentError(f"truth shape {truth.shape} does not match estimate {result.estimate.shape}")
        error = nmse(result.estimate, truth)
        logger.info(f"📏 NMSE against {args.truth}: {error:.6g}")

    write_matrix(args.out, result.estimate)
    if args.trace is not None:
        write_trace(args.trace, result.trace or [])
    write_header(
        header_path(args.out),
        cli_header(
            args,
            sigma=sigma,
            lambda_init=lambda_init,
            mode=cfg.mode,
            converged=result.converged,
            outer_iters=result.state.outer_count,
            inner_iters=result.state.inner_count,
            residual=result.state.residual,
            nmse=error,
        ),
    )
    logger.info(f"✅ Wrote estimate to {args.out} (converged={result.converged})")
