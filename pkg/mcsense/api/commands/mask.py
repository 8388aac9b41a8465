# mcsense/api/commands/mask.py - gen-mask command

import argparse
import logging

from ...models import SamplingScheme
from ..services.matrix_io import header_path, write_header, write_mask
from ..services.sampling import coverage_report, generate_mask
from . import cli_header

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gen-mask", help="Generate a sampling mask")
    parser.add_argument("--rows", type=int, default=64)
    parser.add_argument("--cols", type=int, default=None, help="defaults to --rows")
    parser.add_argument("--ratio", type=float, required=True, help="fraction of cells to sample, in (0, 1]")
    parser.add_argument("--scheme", required=True, choices=[scheme.value for scheme in SamplingScheme])
    parser.add_argument("--generator", choices=["halton", "sobol"], default="halton",
                        help="low-discrepancy sequence behind the quasi-random scheme")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output CSV of row,col pairs")
    parser.set_defaults(handler=gen_mask)


def gen_mask(args: argparse.Namespace) -> None:
    cols = args.cols or args.rows
    mask = generate_mask(args.scheme, args.rows, cols, args.ratio, seed=args.seed, generator=args.generator)
    coverage = coverage_report(mask)

    write_mask(args.out, mask)
    # the mask sidecar carries both the mask header and the run configuration
    write_header(
        header_path(args.out),
        {**mask.header(), "cli": cli_header(args, size=mask.size, coverage=coverage.model_dump())},
    )
    logger.info(
        f"✅ Wrote {args.scheme} mask with {mask.size} cells to {args.out} "
        f"(empty rows {coverage.empty_rows}, empty cols {coverage.empty_cols})"
    )
