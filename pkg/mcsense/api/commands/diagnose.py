# mcsense/api/commands/diagnose.py - diagnose command: spectrum, energy and coherence of a field

import argparse
import json
import logging

from ...models import GridField
from ..services.grid_field import DEFAULT_RANK_TOL, diagnose, energy_fraction, generate_field
from ..services.matrix_io import header_path, read_matrix, write_header
from . import cli_header

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("diagnose", help="Report singular spectrum, energy fractions and coherence")
    parser.add_argument("--field", default=None, help="field file; otherwise one is generated")
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--level", default="high")
    parser.add_argument("--length-scale", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    parser.add_argument("--top-k", type=int, default=6)
    parser.add_argument("--out", default=None, help="optional JSON report file")
    parser.set_defaults(handler=diagnose_field)


def diagnose_field(args: argparse.Namespace) -> None:
    if args.field is not None:
        field = GridField.from_matrix(read_matrix(args.field))
    else:
        level = args.length_scale if args.length_scale is not None else args.level
        field = generate_field(args.n, level, seed=args.seed)

    diag = diagnose(field, rank_tol=args.rank_tol)
    top_k = min(args.top_k, diag.singular_values.size)
    report = {
        "rows": field.rows,
        "cols": field.cols,
        "numeric_rank": diag.numeric_rank,
        "coherence_mu": diag.coherence_mu,
        "max_abs_left": diag.max_abs_left,
        "max_abs_right": diag.max_abs_right,
        "singular_values": diag.singular_values[:top_k].tolist(),
        "energy_fractions": {str(k): energy_fraction(diag, k) for k in range(1, top_k + 1)},
    }
    print(json.dumps(report, indent=2))

    if args.out is not None:
        write_header(args.out, report)
        write_header(header_path(args.out), cli_header(args, length_scale=field.length_scale))
