"""Command line: point evaluation, CSV grid export and invariant suites.

Exit codes: 0 success, 1 invalid input, 2 a verification suite failed.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import conjugacy as cj
from . import hidden_convexity as hc
from . import l0 as l0m
from . import norms
from .suites import SUITES, TOLERANCES
from .xreal import format_value

EXIT_OK, EXIT_INVALID, EXIT_SUITE = 0, 1, 2
FAULTS = ("capra-origin",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_vector(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}") from exc
    if not vals:
        raise UsageError("empty vector")
    v = np.array(vals)
    if not np.all(np.isfinite(v)):
        raise UsageError("vector components must be finite")
    return v


def _ints(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t != ""]
    except ValueError as exc:
        raise UsageError(f"cannot parse integer list {text!r}") from exc


def _g15(v) -> str:
    return format_value(float(v), 15)


def _open_out(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def cmd_norm(args, out) -> int:
    x = parse_vector(args.x)
    ks = _ints(args.k)
    d = x.size
    for k in ks:
        if not 1 <= k <= d:
            raise UsageError(f"k={k} is out of range for d={d} (need 1 <= k <= d)")
    for k in ks:
        out.write(f"k={k} gauge {_g15(norms.gauge_norm(x, k))} / support {_g15(norms.support_norm(x, k))}\n")
    return EXIT_OK


def conj_table(d: int, resolution: int, radii: int, rmax: float, primal: int, extra=()) -> str:
    """CSV text comparing the grid Capra conjugate of l0 with its closed form."""
    dirs = cj.sphere_grid(d, resolution)
    rs = np.linspace(0.0, rmax, radii)[1:]
    rows = [np.zeros((1, d))] + [r * dirs for r in rs]
    rows += [np.asarray(e, dtype=float).reshape(1, d) for e in extra]
    Y = np.vstack(rows)
    _, keep = np.unique(Y, axis=0, return_index=True)
    Y = Y[np.sort(keep)]
    X = l0m.capra_l0_primal_grid(d, primal)
    f = cj.GridFunction(X, [l0m.l0(x).count for x in X])
    grid = cj.conjugate(f, cj.capra(), Y).values
    closed = np.array([l0m.capra_conj_l0(y) for y in Y])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"y_{i + 1}" for i in range(d)] + ["grid", "closed", "delta"])
    for y, g, c in zip(Y, grid, closed):
        w.writerow([format_value(float(t)) for t in y] + [format_value(g), format_value(c), format_value(c - g)])
    return buf.getvalue()


def cmd_conj(args, out) -> int:
    if args.d < 1:
        raise UsageError("d must be positive")
    if args.resolution < 2 or args.radii < 2:
        raise UsageError("resolution and radii must be at least 2")
    extra = [parse_vector(t) for t in (args.y or [])]
    if any(e.size != args.d for e in extra):
        raise UsageError("--y vectors must have dimension d")
    text = conj_table(args.d, args.resolution, args.radii, args.rmax, args.primal or args.resolution, extra)
    fh, close = _open_out(args.out)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def l0ext_grid(resolution: int, boundary: int = 0) -> str:
    """CSV x_1,x_2,value,branch over [-1.1, 1.1]^2, row-major in x_1 then x_2.

    With boundary > 0, that many unit-circle points (starting at (1, 0), so
    the four axis points are included when boundary is a multiple of 4) are
    appended after the grid rows.
    """
    g = np.linspace(-1.1, 1.1, resolution)
    pts = [(a, b) for a in g for b in g]
    if boundary:
        pts += [tuple(p) for p in cj.sphere_grid(2, boundary)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x_1", "x_2", "value", "branch"])
    for p in pts:
        val, br = hc.calL0_2d_branch(p)
        w.writerow([format_value(float(p[0])), format_value(float(p[1])), format_value(val), br])
    return buf.getvalue()


def cmd_l0ext(args, out) -> int:
    if (args.x is None) == (args.grid is None):
        raise UsageError("give exactly one of --x or --grid")
    if args.grid is not None:
        if args.grid < 2:
            raise UsageError("grid resolution must be at least 2")
        if args.boundary < 0:
            raise UsageError("--boundary must be nonnegative")
        text = l0ext_grid(args.grid, args.boundary)
        fh, close = _open_out(args.out)
        try:
            fh.write(text)
        finally:
            if close:
                fh.close()
        return EXIT_OK
    x = parse_vector(args.x)
    if x.size == 2:
        val, br = hc.calL0_2d_branch(x)
        out.write(f"{_g15(val)} {br}\n")
        if float(np.hypot(*x)) < 1.0:
            dec = hc.decompose_2d(x)
            lam = "none" if dec.lam is None else _g15(dec.lam)
            x1 = ",".join(_g15(t) for t in dec.x1bar)
            x2 = ",".join(_g15(t) for t in dec.x2bar)
            out.write(f"x1bar {x1} x2bar {x2} lambda {lam} objective {_g15(dec.objective)}\n")
        return EXIT_OK
    if x.size > 5:
        raise UsageError("the ascent evaluation supports d <= 5")
    res = hc.calL0_general(x, tol=args.tol, max_iter=args.max_iter)
    status = "converged" if res.converged else "not-converged"
    out.write(f"{_g15(res.value)} ascent {status}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    names = args.suite or list(SUITES)
    for n in names:
        if n not in SUITES:
            raise UsageError(f"unknown suite {n!r}; choose from {', '.join(SUITES)}")
    out.write("# tolerances " + " ".join(f"{k}={v:g}" for k, v in TOLERANCES.items()) + "\n")
    out.write(f"# seed={args.seed} scale={args.scale} fault={args.inject_fault or 'none'}\n")
    all_ok = True
    ctx = cj.capra_origin_fault() if args.inject_fault == "capra-origin" else contextlib.nullcontext()
    with ctx:
        for n in names:
            res = SUITES[n](seed=args.seed, scale=args.scale)
            all_ok &= res.ok
            out.write(f"{'PASS' if res.ok else 'FAIL'} {n} max_deviation={res.max_deviation:.3g}\n")
            for label, ok, dev in res.checks:
                if not ok or args.verbose:
                    out.write(f"  {'ok  ' if ok else 'FAIL'} {label} ({dev:.3g})\n")
    return EXIT_OK if all_ok else EXIT_SUITE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="l0capra", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("norm", help="top-k gauge and k-support norms of a vector")
    s.add_argument("--x", required=True, help="comma separated components")
    s.add_argument("--k", required=True, help="k or a comma separated list of k")
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("conj", help="grid vs closed-form Capra conjugate of l0 (CSV)")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--resolution", type=int, default=100, help="dual directions")
    s.add_argument("--radii", type=int, default=50, help="radii in [0, rmax], 0 included")
    s.add_argument("--rmax", type=float, default=5.0)
    s.add_argument("--primal", type=int, default=0, help="points per coordinate sphere (default: resolution)")
    s.add_argument("--y", action="append", help="extra dual point, repeatable")
    s.add_argument("--out", help="output path (default stdout)")
    s.set_defaults(func=cmd_conj)

    s = sub.add_parser("l0ext", help="the convex extension L0: point value or CSV grid")
    s.add_argument("--x", help="point (d = 2 closed form, d <= 5 ascent)")
    s.add_argument("--grid", type=int, help="grid resolution over [-1.1, 1.1]^2")
    s.add_argument("--boundary", type=int, default=0, help="append this many unit-circle rows")
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--max-iter", type=int, default=100_000)
    s.add_argument("--out", help="output path (default stdout)")
    s.set_defaults(func=cmd_l0ext)

    s = sub.add_parser("verify", help="run invariant suites")
    s.add_argument("--suite", action="append", help=f"one of {', '.join(SUITES)}; repeatable")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale", type=int, default=1)
    s.add_argument("--inject-fault", choices=FAULTS, help="negative control: break a convention on purpose")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, sys.stdout)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
