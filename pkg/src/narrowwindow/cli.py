"""Command-line interface: ``narrowwindow <subcommand> [options]``.

Scalars are printed as JSON, sweeps as CSV.  Exit status: 0 success,
2 invalid input, 3 numerical non-convergence, 4 a sandwich or lemma check
failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import (
    default_a_grid,
    fit_rows,
    read_sweep_csv,
    sandwich_report,
    sweep,
    write_sweep_csv,
    SweepResult,
)
from .constants import build_chain
from .exceptions import (
    BracketEmptyError,
    ConvergenceError,
    GeometryError,
    FactorizationError,
    NarrowWindowError,
)
from .fd import GridSpec, fd_solve
from .geometry import Geometry, read_geometry_config
from .lemmas import (
    Grid1D,
    lemma1_instance,
    lemma2_instance,
    lemma3_gap,
    lemma3_route,
    lemma4_constant,
    min_quadratic_form,
)
from .modematch import solve_ground_state
from .varbound import optimize_trial

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

logger = logging.getLogger("narrowwindow")


class CheckFailed(Exception):
    """A verification subcommand ran but its inequality did not hold."""

    def __init__(self, payload):
        super().__init__("check failed")
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INVALID)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _metadata():
    return {"version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}


def _dump_json(obj, args, out):
    if getattr(args, "metadata", False):
        obj = {"_metadata": _metadata(), "data": obj}
    out.write(json.dumps(_clean(obj), allow_nan=False) + "\n")


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _geometry(args, need_a=True) -> Geometry:
    values = read_geometry_config(args.config) if args.config else {}
    for key in ("d1", "d2", "a"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    values.setdefault("d2", 0.0)
    if "d1" not in values:
        raise GeometryError("d1 is required (flag or --config)")
    if need_a and "a" not in values:
        raise GeometryError("a is required (flag or --config)")
    return Geometry(values["d1"], values["d2"], values.get("a", 0.1 * values["d1"]))


def _add_geometry(p, a=True):
    p.add_argument("--config", help="plain-text geometry file (d1, d2, a)")
    p.add_argument("--d1", type=float, help="width of the upper strip")
    p.add_argument("--d2", type=float, help="width of the lower strip (0: half-strip)")
    if a:
        p.add_argument("--a", type=float, help="window half-width")


def _open_out(args):
    path = getattr(args, "output", None)
    if path and path != "-":
        return open(path, "w", newline="")
    return None


def _emit_json(obj, args):
    handle = _open_out(args)
    try:
        _dump_json(obj, args, handle or sys.stdout)
    finally:
        if handle:
            handle.close()


# subcommands ------------------------------------------------------------

def cmd_solve(args):
    g = _geometry(args)
    res = solve_ground_state(g, tol=args.tol, n_max=args.n_max)
    payload = res.to_dict()
    payload["status"] = res.status
    _emit_json(payload, args)


def _sweep_grid(args):
    if args.a_values:
        return np.asarray(args.a_values, dtype=float)
    return default_a_grid(args.a_min, args.count)


def cmd_sweep(args):
    g = _geometry(args, need_a=False)
    result = sweep(g, _sweep_grid(args), tol=args.tol, n_max=args.n_max)
    meta = _metadata() if args.metadata else None
    handle = _open_out(args)
    try:
        write_sweep_csv(result, handle or sys.stdout, metadata=meta)
    finally:
        if handle:
            handle.close()


def _read_rows(path):
    if path == "-":
        return read_sweep_csv(sys.stdin)
    with open(path, newline="") as fh:
        return read_sweep_csv(fh)


def cmd_fit(args):
    rows = _read_rows(args.input)
    result = fit_rows(SweepResult(None, rows),
                      args.window)
    _emit_json({
        "slope": result.fit_slope,
        "coefficient": result.fit_coefficient,
        "fit_window": list(result.fit_window),
        "max_residual": result.fit_max_residual,
        "n_rows": len(rows),
        "notes": result.notes,
    }, args)


def cmd_bound_upper(args):
    g = _geometry(args, need_a=args.a_values is None)
    if args.a_values is not None:
        out = [optimize_trial(g.with_window(a), args.variant).to_dict() for a in args.a_values]
    else:
        out = optimize_trial(g, args.variant).to_dict()
    _emit_json(out, args)


def cmd_bound_lower(args):
    _emit_json(build_chain(args.d, args.a_max).to_dict(), args)


def cmd_lemma(args):
    which = args.which
    if which == 1:
        spec, grid, exact = lemma1_instance(args.m, args.alpha, args.n)
        numeric = min_quadratic_form(spec, grid).value
        closed = args.m * args.alpha**2
        ok = abs(numeric / closed - 1.0) < 0.01
        extra = {"truncated_exact": exact}
    elif which == 2:
        spec, grid, closed = lemma2_instance(args.b, args.n)
        numeric = min_quadratic_form(spec, grid).value
        ok = abs(numeric / closed - 1.0) < 0.005
        extra = {}
    elif which == 3:
        numeric, eps2, _ = lemma3_gap(args.d, Grid1D(args.n, (0.0, args.d)))
        closed = (math.pi / args.d) ** 2
        ok = eps2 > 0
        route = lemma3_route(args.d)
        extra = {"eps2": eps2, "route": route.__dict__}
    else:
        a = args.a
        numeric, closed = lemma4_constant(args.m, args.d, a)
        ok = numeric >= closed
        extra = {"m": args.m, "d": args.d, "a": a}
    payload = {"lemma": which, "numeric": numeric, "closed_form": closed,
               "ratio": numeric / closed, "passed": ok, **extra}
    _emit_json(payload, args)
    if not ok:
        raise CheckFailed(payload)


def cmd_oracle_fd(args):
    g = _geometry(args)
    res = fd_solve(GridSpec(args.h, args.X, g))
    _emit_json(res.to_dict(), args)


def cmd_sandwich(args):
    rows = _read_rows(args.sweep)
    with open(args.upper) as fh:
        upper = json.load(fh)
    with open(args.constants) as fh:
        chain = json.load(fh)
    if isinstance(upper, dict):
        upper = upper.get("data", upper)
    if isinstance(upper, dict):
        upper = [upper]
    if isinstance(chain, dict) and "data" in chain:
        chain = chain["data"]
    pairs = [(u["a"], u["value"]) for u in upper]
    result = fit_rows(SweepResult(None, rows))
    report = sandwich_report(result, pairs, float(chain["c1"]), float(chain["a_star"]))
    payload = report.to_dict()
    _emit_json(payload, args)
    if not report.passed:
        raise CheckFailed(payload)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="narrowwindow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--output", "-o", help="output file (default: standard output)")
        p.add_argument("--metadata", action="store_true",
                       help="add a version/timestamp header to the output")

    p = sub.add_parser("solve", help="ground-state eigenvalue by mode matching")
    _add_geometry(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--n-max", type=int, default=2048)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a grid of window half-widths (CSV)")
    _add_geometry(p, a=False)
    p.add_argument("--a-values", type=_float_list, help="comma-separated half-widths")
    p.add_argument("--a-min", type=float, default=0.02, help="first point of the sqrt(2) grid")
    p.add_argument("--count", type=int, default=7, help="points of the sqrt(2) grid")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--n-max", type=int, default=4096)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="power-law fit of a sweep CSV")
    p.add_argument("--input", "-i", default="-", help="sweep CSV (default: standard input)")
    p.add_argument("--window", choices=("lower_half", "all"), default="lower_half")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bound-upper", help="optimised trial-function bound")
    _add_geometry(p)
    p.add_argument("--a-values", type=_float_list, help="comma-separated half-widths")
    p.add_argument("--variant", choices=("auto", "symmetric", "nonsymmetric"), default="auto")
    common(p)
    p.set_defaults(func=cmd_bound_upper)

    p = sub.add_parser("bound-lower-constants", help="constants of the lower bound")
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--a-max", type=float, default=float(default_a_grid()[-1]))
    common(p)
    p.set_defaults(func=cmd_bound_lower)

    p = sub.add_parser("lemma", help="variational oracle for one of the 1-D inequalities")
    p.add_argument("--which", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.05)
    p.add_argument("--n", type=int, default=256, help="grid cells")
    common(p)
    p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("oracle-fd", help="finite-difference eigenvalue oracle")
    _add_geometry(p)
    p.add_argument("--h", type=float, default=1.0 / 160.0)
    p.add_argument("--X", type=float, default=6.0)
    common(p)
    p.set_defaults(func=cmd_oracle_fd)

    p = sub.add_parser("sandwich", help="check |trial bound| <= gap <= c1 a^4 row by row")
    p.add_argument("--sweep", required=True, help="sweep CSV")
    p.add_argument("--upper", required=True, help="bound-upper JSON (list over the grid)")
    p.add_argument("--constants", required=True, help="bound-lower-constants JSON")
    common(p)
    p.set_defaults(func=cmd_sandwich)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(name)s: %(message)s")
    if args.subcommand == "lemma" and args.m is None:
        args.m = 1.0 if args.which == 1 else math.pi / 8.0
    try:
        args.func(args)
    except CheckFailed:
        sys.stderr.write("check failed\n")
        return EXIT_CHECK
    except (ConvergenceError, FactorizationError, BracketEmptyError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (NarrowWindowError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
