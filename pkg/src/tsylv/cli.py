"""``tsylv`` command line.

Exit status: 0 converged, 2 did not converge, 1 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .bench import METHODS, format_table, rows_to_json, run_method, run_table1
from .errors import TensorError
from .io import write_tt3d
from .problems import ProblemConfig, load_problem

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_problem_args(p):
    p.add_argument("--problem", choices=("convdiff", "random", "file"), default="convdiff")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--n3", type=int, default=2)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sign", choices=("plus", "minus"), default="minus")


def build_parser():
    parser = _Parser(prog="tsylv", description="Sylvester tensor equations under the T-product.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve one problem")
    solve.add_argument("--method", choices=METHODS, default="tbas")
    _add_problem_args(solve)
    solve.add_argument("--m", type=int, default=10)
    solve.add_argument("--tol", type=float, default=1e-6)
    solve.add_argument("--max-restarts", type=int, default=100)
    solve.add_argument("--a", dest="a_path")
    solve.add_argument("--b", dest="b_path")
    solve.add_argument("--c", dest="c_path")
    solve.add_argument("--out", help="write the JSON report here")
    solve.add_argument("--save-x", help="write the solution as a TT3D file")

    table = sub.add_parser("table1", help="run the two-row convection-diffusion benchmark")
    table.add_argument("--out", help="write the rows as JSON here")
    table.add_argument("--mu", type=float, default=1.0)
    table.add_argument("--max-restarts", type=int, default=100)
    table.add_argument("--seed", type=int, default=0)

    gen = sub.add_parser("gen", help="write a generated problem as TT3D files")
    _add_problem_args(gen)
    gen.add_argument("--out-prefix", required=True)
    return parser


def _config(args, **extra):
    return ProblemConfig(
        n=args.n, q=args.q, n3=args.n3, mu=args.mu, seed=args.seed, problem=args.problem,
        sign=1 if args.sign == "plus" else -1, **extra,
    )


def _solve(args):
    cfg = _config(args, m=args.m, tol=args.tol, max_restarts=args.max_restarts,
                  a_path=args.a_path, b_path=args.b_path, c_path=args.c_path)
    problem = load_problem(cfg)
    row, x, rep = run_method(args.method, cfg, problem)
    payload = rep.to_dict() if rep is not None else {"method": args.method, "converged": False}
    payload["config"] = row.config
    if row.error:
        payload["error"] = row.error
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    status = "converged" if row.converged else "NOT converged"
    print(f"{args.method}: {status}, iterations {row.iterations}, residual {row.residual:.3e}, "
          f"{row.wall_time_ms:.1f} ms")
    if row.error:
        print(row.error, file=sys.stderr)
    if args.save_x and x is not None:
        write_tt3d(x, args.save_x)
    return EXIT_OK if row.converged else EXIT_NOT_CONVERGED


def _table1(args):
    rows = run_table1(mu=args.mu, max_restarts=args.max_restarts, seed=args.seed)
    print(format_table(rows))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rows_to_json(rows, indent=2) + "\n")
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NOT_CONVERGED


def _gen(args):
    if args.problem == "file":
        raise ValueError("gen needs a generated problem kind")
    a, b, c = load_problem(_config(args))
    for name, t in zip("abc", (a, b, c)):
        write_tt3d(t, f"{args.out_prefix}_{name}.tt3d")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"solve": _solve, "table1": _table1, "gen": _gen}[args.command]
    try:
        return handler(args)
    except (OSError, ValueError, TensorError) as exc:
        print(f"tsylv: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
