"""Fenchel-Moreau conjugacy on finite grids.

A GridFunction is a finite list of points with extended-real values, stored
as float arrays (+-inf allowed, NaN rejected).  A Coupling turns a pair of
point sets into the matrix c(x_i, y_j); conjugates are then row/column
suprema taken with Moreau lower addition, as in

    f^c(y) = sup_x  c(x, y) (lower+) (-f(x)).
"""

from __future__ import annotations

import contextlib
import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.stats import norm as _gauss
from scipy.stats import qmc

from .xreal import ExtReal, format_value, lower_add_array, parse_value, upper_add_array

__all__ = [
    "GridFunction",
    "Mapping",
    "Coupling",
    "bilinear",
    "one_sided",
    "capra",
    "negated",
    "coupling_matrix",
    "conjugate",
    "reverse_conjugate",
    "biconjugate",
    "minus_conjugate",
    "weak_duality_gap",
    "infimal_postcomposition",
    "indicator",
    "normalize",
    "capra_eval",
    "capra_origin_fault",
    "sphere_grid",
    "fenchel_conjugate_2d",
    "write_csv",
    "read_csv",
]


def _points(P, d: Optional[int] = None) -> np.ndarray:
    A = np.asarray(P, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1) if d in (None, 1) else A.reshape(-1, d)
    if A.ndim != 2:
        raise ValueError("a point set must be a 2-D array of shape (n, d)")
    if not np.all(np.isfinite(A)):
        raise ValueError("grid points must be finite")
    return A


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of an extended-real function on a finite set of distinct points."""

    domain: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        D = _points(self.domain)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape[0] != D.shape[0]:
            raise ValueError("domain and values must have the same length")
        if np.isnan(v).any():
            raise ValueError("NaN is not an extended real")
        if np.unique(D, axis=0).shape[0] != D.shape[0]:
            raise ValueError("domain points must be distinct")
        D.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "domain", D)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, points, f: Callable) -> "GridFunction":
        D = _points(points)
        return cls(D, np.array([float(ExtReal.of(f(p)).value) for p in D]))

    @property
    def dim(self) -> int:
        return self.domain.shape[1]

    def __len__(self):
        return self.domain.shape[0]

    def at(self, x) -> ExtReal:
        """Value at a domain point (exact match required)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        hit = np.flatnonzero(np.all(self.domain == x, axis=1))
        if hit.size == 0:
            raise KeyError(f"{x.tolist()} is not a grid point")
        return ExtReal(self.values[hit[0]])

    def items(self):
        for p, v in zip(self.domain, self.values):
            yield p, ExtReal(v)


class Mapping:
    """A total map theta from a finite domain of vectors to vectors."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray]):
        self.func = func

    @classmethod
    def linear(cls, A) -> "Mapping":
        M = np.asarray(A, dtype=float)
        return cls(lambda w: M @ w)

    @classmethod
    def table(cls, src, dst) -> "Mapping":
        S, T = _points(src), _points(dst)
        lut = {tuple(s): t for s, t in zip(S, T)}
        return cls(lambda w: lut[tuple(np.asarray(w, dtype=float))])

    def __call__(self, w) -> np.ndarray:
        return np.asarray(self.func(np.asarray(w, dtype=float)), dtype=float).reshape(-1)

    def image(self, W) -> np.ndarray:
        return np.array([self(w) for w in _points(W)])


# Fault hook for negative-control runs: when set, the Capra coupling uses
# c(0, y) = ||y|| instead of 0.
_CAPRA_ORIGIN_FAULT = False


@contextlib.contextmanager
def capra_origin_fault():
    """Temporarily break the Capra convention c(0, y) = 0 (test hook)."""
    global _CAPRA_ORIGIN_FAULT
    old = _CAPRA_ORIGIN_FAULT
    _CAPRA_ORIGIN_FAULT = True
    try:
        yield
    finally:
        _CAPRA_ORIGIN_FAULT = old


def _row_norms(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", X, X))


def normalize(x) -> np.ndarray:
    """x / ||x|| for x != 0, and exactly 0 at the origin."""
    v = np.asarray(x, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        return np.zeros_like(v)
    return v / nrm


def _capra_matrix(X, Y):
    n = _row_norms(X)
    safe = np.where(n > 0, n, 1.0)
    C = (X / safe[:, None]) @ Y.T
    zero = n == 0
    if zero.any():
        C[zero, :] = _row_norms(Y)[None, :] if _CAPRA_ORIGIN_FAULT else 0.0
    return C


def capra_eval(x, y) -> float:
    """Capra coupling <x, y> / ||x||, equal to 0 when x = 0."""
    X = _points(np.asarray(x, dtype=float).reshape(1, -1))
    Y = _points(np.asarray(y, dtype=float).reshape(1, -1))
    return float(_capra_matrix(X, Y)[0, 0])


@dataclass(frozen=True, eq=False)
class Coupling:
    """A coupling c(x, y), evaluated blockwise on point sets.

    tag is "Bilinear", "OneSidedLinear", "Capra" or "Negated"; ``theta`` is set
    for one-sided linear couplings and ``inner`` for negated ones.
    """

    tag: str
    matrix_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    theta: Optional[Mapping] = field(default=None, repr=False)
    inner: Optional["Coupling"] = field(default=None, repr=False)

    def matrix(self, X, Y) -> np.ndarray:
        C = np.asarray(self.matrix_fn(_points(X), _points(Y)), dtype=float)
        if np.isnan(C).any():
            raise ValueError("coupling produced NaN")
        return C

    def __call__(self, x, y) -> ExtReal:
        X = np.asarray(x, dtype=float).reshape(1, -1)
        Y = np.asarray(y, dtype=float).reshape(1, -1)
        return ExtReal(self.matrix(X, Y)[0, 0])


def bilinear() -> Coupling:
    return Coupling("Bilinear", lambda X, Y: X @ Y.T)


def one_sided(theta: Mapping) -> Coupling:
    """c_theta(w, y) = <theta(w), y>."""
    return Coupling("OneSidedLinear", lambda W, Y: theta.image(W) @ Y.T, theta=theta)


def capra() -> Coupling:
    return Coupling("Capra", _capra_matrix)


def negated(c: Coupling) -> Coupling:
    return Coupling("Negated", lambda X, Y: -c.matrix_fn(X, Y), inner=c)


def coupling_matrix(c: Coupling, X, Y) -> np.ndarray:
    return c.matrix(X, Y)


_BLOCK = 1 << 21


def _blocks(n_fixed: int, n_out: int):
    # slices over output points; one block of the coupling matrix holds
    # about _BLOCK entries, which only bounds memory use
    step = max(1, _BLOCK // max(1, n_fixed))
    for start in range(0, n_out, step):
        yield slice(start, min(n_out, start + step))


def conjugate(f: GridFunction, c: Coupling, Y) -> GridFunction:
    """f^c(y) = sup_x c(x, y) (lower+) (-f(x)) over the grid of f."""
    Yp = _points(Y, f.dim)
    if len(f) == 0:
        raise ValueError("the primal grid must be non-empty")
    out = np.empty(Yp.shape[0])
    for sl in _blocks(len(f), Yp.shape[0]):
        C = c.matrix(f.domain, Yp[sl])
        out[sl] = lower_add_array(C, -f.values[:, None]).max(axis=0)
    return GridFunction(Yp, out)


def reverse_conjugate(g: GridFunction, c: Coupling, X) -> GridFunction:
    """g^{c'}(x) = sup_y c(x, y) (lower+) (-g(y)) over the grid of g."""
    Xp = _points(X)
    if len(g) == 0:
        raise ValueError("the dual grid must be non-empty")
    out = np.empty(Xp.shape[0])
    for sl in _blocks(len(g), Xp.shape[0]):
        C = c.matrix(Xp[sl], g.domain)
        out[sl] = lower_add_array(C, -g.values[None, :]).max(axis=1)
    return GridFunction(Xp, out)


def biconjugate(f: GridFunction, c: Coupling, Y) -> GridFunction:
    return reverse_conjugate(conjugate(f, c, Y), c, f.domain)


def minus_conjugate(f: GridFunction, c: Coupling, Y) -> GridFunction:
    """Conjugate with respect to the negated coupling -c."""
    return conjugate(f, negated(c), Y)


def weak_duality_gap(f: GridFunction, h: GridFunction, c: Coupling, Y) -> Tuple[ExtReal, ExtReal]:
    """Both sides of  sup_y [-f^c(y) (lower+) -h^{-c}(y)] <= inf_x [f(x) (upper+) h(x)].

    f and h must share their domain.  With h an indicator this is the
    constrained form of the inequality.
    """
    if f.domain.shape != h.domain.shape or not np.array_equal(f.domain, h.domain):
        raise ValueError("f and h must be defined on the same grid")
    fc = conjugate(f, c, Y).values
    hmc = minus_conjugate(h, c, Y).values
    dual = float(np.max(lower_add_array(-fc, -hmc)))
    primal = float(np.min(upper_add_array(f.values, h.values)))
    return ExtReal(dual), ExtReal(primal)


def infimal_postcomposition(theta: Mapping, f: GridFunction, X) -> GridFunction:
    """(theta |> f)(x) = inf { f(w) : theta(w) = x }, with inf of nothing = +inf."""
    Xp = _points(X)
    images = theta.image(f.domain)
    best: dict = {}
    for img, v in zip(map(tuple, images), f.values):
        best[img] = min(best.get(img, math.inf), v)
    return GridFunction(Xp, np.array([best.get(tuple(x), math.inf) for x in Xp]))


def indicator(points, subset) -> GridFunction:
    """delta_S on the grid: 0 on points of S, +inf elsewhere."""
    P = _points(points)
    S = {tuple(s) for s in _points(subset, P.shape[1])}
    return GridFunction(P, np.array([0.0 if tuple(p) in S else math.inf for p in P]))


def sphere_grid(d: int, n: int, scheme: str = "auto", seed: int = 0) -> np.ndarray:
    """n deterministic points on the unit sphere of R^d.

    Schemes: "uniform" angles (d = 2), "fibonacci" lattice (d = 3),
    "qmc" (scrambled Sobol mapped through the Gaussian quantile and
    normalized, any d).  "auto" picks by dimension.
    """
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    if int(n) != n or n < 2:
        raise ValueError("n must be an integer >= 2")
    d, n = int(d), int(n)
    if scheme == "auto":
        scheme = {1: "line", 2: "uniform", 3: "fibonacci"}.get(d, "qmc")
    if d == 1 or scheme == "line":
        if d != 1 or n != 2:
            raise ValueError("the sphere of R^1 has exactly two points")
        return np.array([[1.0], [-1.0]])
    if scheme == "uniform":
        if d != 2:
            raise ValueError("uniform angles need d = 2")
        t = 2.0 * np.pi * np.arange(n) / n
        P = np.c_[np.cos(t), np.sin(t)]
        P[np.abs(P) < 1e-15] = 0.0
        return P
    if scheme == "fibonacci":
        if d != 3:
            raise ValueError("the Fibonacci lattice needs d = 3")
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = np.pi * (3.0 - math.sqrt(5.0)) * np.arange(n)
        P = np.c_[rho * np.cos(phi), rho * np.sin(phi), z]
        return P / _row_norms(P)[:, None]
    if scheme == "qmc":
        with warnings.catch_warnings():
            # Sobol prefixes of any length are fine here; balance is not needed
            warnings.simplefilter("ignore", UserWarning)
            U = qmc.Sobol(d, scramble=True, seed=seed).random(n)
        G = _gauss.ppf(np.clip(U, 1e-12, 1 - 1e-12))
        return G / _row_norms(G)[:, None]
    raise ValueError(f"unknown scheme {scheme!r}")


def _conj_last_axis(F: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    out = np.full(F.shape[:-1] + (ys.size,), -np.inf)
    for i, x in enumerate(xs):
        col = F[..., i]
        np.maximum(out, lower_add_array(x * ys[None, :], -col[:, None]), out=out)
    return out


def fenchel_conjugate_2d(F, x1, x2, y1, y2) -> np.ndarray:
    """Bilinear conjugate of F[i, j] = f(x1[i], x2[j]) on the product grid y1 x y2.

    The supremum over the product grid is split into two one-dimensional
    suprema, which is legitimate because <x, y> is finite.
    """
    F = np.asarray(F, dtype=float)
    x1, x2, y1, y2 = (np.asarray(a, dtype=float) for a in (x1, x2, y1, y2))
    inner = _conj_last_axis(F, x2, y2)  # [i, l] = sup_j x2_j y2_l - F[i, j]
    return _conj_last_axis(-inner.T, x1, y1).T


def write_csv(g: GridFunction, out: Optional[TextIO] = None, names: Optional[Sequence[str]] = None) -> str:
    """Serialize to CSV with columns x_1..x_d,value; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names) if names else [f"x_{i + 1}" for i in range(g.dim)] + ["value"])
    for p, v in zip(g.domain, g.values):
        w.writerow([format_value(float(c)) for c in p] + [format_value(float(v))])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(src) -> GridFunction:
    """Parse the output of :func:`write_csv` (a path, a file object or text)."""
    if isinstance(src, str) and "\n" in src:
        fh: TextIO = io.StringIO(src)
    elif isinstance(src, str):
        fh = open(src, newline="")
    else:
        fh = src
    try:
        rows = list(csv.reader(fh))
    finally:
        if fh is not src:
            fh.close()
    if not rows:
        raise ValueError("empty CSV")
    body = [r for r in rows[1:] if r]
    pts = np.array([[parse_value(c).value for c in r[:-1]] for r in body], dtype=float)
    vals = np.array([parse_value(r[-1]).value for r in body], dtype=float)
    return GridFunction(pts.reshape(len(body), len(rows[0]) - 1), vals)
