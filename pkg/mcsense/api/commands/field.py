# mcsense/api/commands/field.py - gen-field command

import argparse
import logging

from ..services.bench_harness import derive_seed
from ..services.grid_field import add_noise, generate_field, rms
from ..services.matrix_io import header_path, write_header, write_matrix
from . import cli_header

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("gen-field", help="Generate a correlated ground-truth field")
    parser.add_argument("--n", type=int, default=64, help="grid size (square)")
    parser.add_argument("--rows", type=int, default=None, help="override the row count")
    parser.add_argument("--cols", type=int, default=None, help="override the column count")
    parser.add_argument("--level", default="high", help="correlation preset: low, medium or high")
    parser.add_argument("--length-scale", type=float, default=None, help="custom correlation length in cells")
    parser.add_argument("--noise", type=float, default=0.0, help="noise std as a fraction of the field RMS")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output file (.csv or .bin)")
    parser.set_defaults(handler=gen_field)


def gen_field(args: argparse.Namespace) -> None:
    rows = args.rows or args.n
    cols = args.cols or rows
    level = args.length_scale if args.length_scale is not None else args.level

    field = generate_field(rows, level, seed=args.seed, cols=cols)
    noise_seed = derive_seed(args.seed, "noise")
    noisy = add_noise(field, args.noise, seed=noise_seed)

    write_matrix(args.out, noisy.values)
    write_header(
        header_path(args.out),
        cli_header(
            args,
            rows=rows,
            cols=cols,
            correlation_level=field.correlation_level.value,
            length_scale=field.length_scale,
            noise_seed=noise_seed,
            noise_std=args.noise * rms(field),
        ),
    )
    logger.info(f"✅ Wrote {rows}x{cols} {field.correlation_level.value} field to {args.out}")
