"""The convex lsc extension L0 of l0 restricted to the unit sphere.

L0 is the reverse Fenchel conjugate of y -> max_l (gauge_norm(y, l) - l).
Equivalently it is the value of

    min  sum_l l * support_norm(x_l, l)
    s.t. sum_l support_norm(x_l, l) <= 1,  sum_l x_l = x,

and it is the closed convex hull of the staircase function lbar0.  In
dimension 2 it has a closed form on four regions of the disk.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .conjugacy import fenchel_conjugate_2d, sphere_grid
from .norms import TAU_BALL, as_vector, face_l1_ball_2d, support_norm
from .xreal import ExtReal, POS_INF

__all__ = [
    "BRANCHES",
    "calL0_2d",
    "calL0_2d_branch",
    "calL0_2d_array",
    "Decomposition2D",
    "decompose_2d",
    "KKTReport",
    "verify_kkt_2d",
    "LBar0Value",
    "lbar0",
    "lbar0_2d_array",
    "AscentResult",
    "calL0_general",
    "calL0_general_batch",
    "calL0_decomposition_oracle",
    "EpigraphReport",
    "epigraph_grid_report",
    "epigraph_grid_check",
]

SQRT2 = math.sqrt(2.0)
_MIX = SQRT2 - 1.0
TIE_TOL = 1e-12
AGREE_TOL = 1e-9

BRANCHES = ("Lozenge", "NailX1", "NailX2", "Triangle", "SphereAxis", "SphereOffAxis", "Infeasible")


def _vec2(x) -> np.ndarray:
    v = as_vector(x)
    if v.size != 2:
        raise ValueError("dimension must be 2")
    return v


def _nail(a: float, b: float) -> float:
    # a is the dominant magnitude, b the other one
    return (3.0 - a) / 2.0 + b * b / (2.0 * (1.0 - a))


def _triangle(a: float, b: float) -> float:
    return (a + b - 2.0 + SQRT2) / _MIX


def calL0_2d_branch(x) -> Tuple[ExtReal, str]:
    """L0(x) for x in R^2 together with the name of the region used.

    Points lying within 1e-12 of a region boundary are evaluated on every
    region whose closed description holds; the values must agree.
    """
    v = _vec2(x)
    a1, a2 = abs(float(v[0])), abs(float(v[1]))
    r = math.hypot(a1, a2)
    if r > 1.0 + TIE_TOL:
        return POS_INF, "Infeasible"
    if r >= 1.0 - TIE_TOL:
        if a1 == 0.0 or a2 == 0.0:
            return ExtReal(1.0), "SphereAxis"
        return ExtReal(2.0), "SphereOffAxis"
    hi, lo = max(a1, a2), min(a1, a2)
    s1 = a1 + a2
    cands = []
    if s1 <= 1.0 + TIE_TOL:
        cands.append(("Lozenge", s1))
    if s1 >= 1.0 - TIE_TOL and hi + _MIX * lo <= 1.0 + TIE_TOL:
        cands.append(("Triangle", _triangle(hi, lo)))
    if a1 >= a2 - TIE_TOL and a1 + _MIX * a2 >= 1.0 - TIE_TOL:
        cands.append(("NailX1", _nail(a1, a2)))
    if a2 >= a1 - TIE_TOL and a2 + _MIX * a1 >= 1.0 - TIE_TOL:
        cands.append(("NailX2", _nail(a2, a1)))
    name, val = cands[0]
    for other, w in cands[1:]:
        if abs(w - val) > AGREE_TOL:
            raise ArithmeticError(f"branches {name} and {other} disagree at {v.tolist()}: {val} vs {w}")
    return ExtReal(val), name


def calL0_2d(x) -> ExtReal:
    """Closed-form L0 on R^2 (+inf outside the closed unit disk)."""
    return calL0_2d_branch(x)[0]


def calL0_2d_array(X1, X2) -> np.ndarray:
    """Vectorized closed form on arrays of coordinates (no tie handling)."""
    a1, a2 = np.abs(np.asarray(X1, dtype=float)), np.abs(np.asarray(X2, dtype=float))
    hi, lo = np.maximum(a1, a2), np.minimum(a1, a2)
    r = np.hypot(a1, a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        nail = (3.0 - hi) / 2.0 + lo * lo / (2.0 * (1.0 - hi))
        out = np.where(hi + lo <= 1.0, hi + lo, np.where(hi + _MIX * lo >= 1.0, nail, _triangle(hi, lo)))
    on_sphere = np.abs(r - 1.0) <= TIE_TOL
    out = np.where(on_sphere, np.where(lo == 0.0, 1.0, 2.0), out)
    return np.where(r > 1.0 + TIE_TOL, np.inf, out)


@dataclass(frozen=True)
class Decomposition2D:
    """A feasible pair (x1bar, x2bar) for the 2-D minimization defining L0.

    lam is the multiplier of the constraint l1(x1bar) + ||x2bar|| <= 1, or
    None when the constraint is not needed (x2bar = 0).
    """

    x1bar: Tuple[float, float]
    x2bar: Tuple[float, float]
    branch: str
    lam: Optional[float]
    objective: float

    @staticmethod
    def objective_of(x1bar, x2bar) -> float:
        return support_norm(x1bar, 1) + 2.0 * support_norm(x2bar, 2)

    @staticmethod
    def budget_of(x1bar, x2bar) -> float:
        return support_norm(x1bar, 1) + support_norm(x2bar, 2)


def decompose_2d(x) -> Decomposition2D:
    """Minimizing pair for L0(x), ||x|| < 1, with x1bar carrying the l1 part
    and x2bar the Euclidean part."""
    v = _vec2(x)
    if math.hypot(v[0], v[1]) >= 1.0:
        raise ValueError("decompose_2d needs ||x|| < 1")
    _, branch = calL0_2d_branch(v)
    sgn = np.where(v < 0, -1.0, 1.0)
    u = np.abs(v)
    lam: Optional[float]
    if branch == "Lozenge":
        d1, d2, lam = u.copy(), np.zeros(2), None
    elif branch == "Triangle":
        beta = (u[0] + u[1] - 1.0) / (2.0 - SQRT2)
        d2 = np.array([beta, beta])
        d1 = u - d2
        lam = SQRT2
    else:
        i = 0 if branch == "NailX1" else 1
        j = 1 - i
        a, b = u[i], u[j]
        d1 = np.zeros(2)
        d1[i] = (1.0 - a * a - b * b) / (2.0 * (1.0 - a))
        d2 = np.zeros(2)
        d2[i] = a - d1[i]
        d2[j] = b
        t = d2[i] / math.hypot(d2[0], d2[1])
        lam = (2.0 * t - 1.0) / (1.0 - t)
    d1, d2 = sgn * d1, sgn * d2
    d1[d1 == 0.0] = 0.0  # drop negative zeros
    d2[d2 == 0.0] = 0.0
    return Decomposition2D(
        tuple(d1.tolist()), tuple(d2.tolist()), branch, lam, Decomposition2D.objective_of(d1, d2)
    )


@dataclass(frozen=True)
class KKTReport:
    ok: bool
    lam: Optional[float]
    reason: str
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def verify_kkt_2d(x, dec: Decomposition2D, tol: float = 1e-12) -> KKTReport:
    """Check feasibility and the optimality conditions for a decomposition.

    Either x2bar = 0 and ||x||_1 <= 1, or there is lambda > 0 with the budget
    constraint active and

        (2 + lambda) x2bar / ||x2bar||  in  (1 + lambda) F(x1bar),

    where F(x1bar) is the face of [-1, 1]^2 exposed by x1bar.  lambda is
    solved for in closed form from the kind of face.
    """
    v = _vec2(x)
    d1, d2 = np.asarray(dec.x1bar, dtype=float), np.asarray(dec.x2bar, dtype=float)
    sum_res = float(np.max(np.abs(d1 + d2 - v)))
    budget = Decomposition2D.budget_of(d1, d2)
    diag = {"sum_residual": sum_res, "budget": budget}
    if sum_res > tol:
        return KKTReport(False, None, "sum constraint violated", diag)
    if budget > 1.0 + tol:
        return KKTReport(False, None, "budget constraint violated", diag)
    n2 = math.hypot(d2[0], d2[1])
    if n2 == 0.0:
        l1 = support_norm(v, 1)
        diag["l1"] = l1
        ok = l1 <= 1.0 + tol
        return KKTReport(ok, None, "x2bar = 0 with ||x||_1 <= 1" if ok else "||x||_1 > 1", diag)
    diag["budget_slack"] = 1.0 - budget
    if abs(1.0 - budget) > tol:
        return KKTReport(False, None, "budget constraint not active", diag)
    p = d2 / n2
    face = face_l1_ball_2d(d1)
    if face.kind == "Corner":
        q = np.array(face.sign, dtype=float) / SQRT2
        diag["corner_residual"] = float(np.max(np.abs(p - q)))
        if diag["corner_residual"] > tol:
            return KKTReport(False, None, "direction of x2bar misses the corner", diag)
        return KKTReport(True, SQRT2, "corner face, lambda = sqrt(2)", diag)
    if face.kind == "FullSquare":
        m = float(np.max(np.abs(p)))
        if m >= 1.0:
            return KKTReport(False, None, "no lambda > 0 for the full square", diag)
        lam = max((2.0 * m - 1.0) / (1.0 - m), 0.0) or 1.0
        return KKTReport(True, lam, "full square face", diag)
    i = 0 if face.kind == "VerticalEdge" else 1
    s = face.sign[i]
    t = s * p[i]
    diag["t"] = float(t)
    if not 0.5 < t < 1.0:
        return KKTReport(False, None, "no lambda > 0 solves the edge equation", diag)
    lam = (2.0 * t - 1.0) / (1.0 - t)
    other = (2.0 + lam) / (1.0 + lam) * abs(p[1 - i])
    diag["free_coordinate"] = float(other)
    if other > 1.0 + tol:
        return KKTReport(False, lam, "free coordinate leaves the edge", diag)
    return KKTReport(True, lam, f"{face.kind} face", diag)


@dataclass(frozen=True)
class LBar0Value:
    """Level of the staircase function: an integer 0..d or +inf."""

    level: float

    @property
    def value(self) -> ExtReal:
        return ExtReal(self.level)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.level)


def lbar0(x, tol: float = TAU_BALL) -> LBar0Value:
    """0 at the origin, the smallest l with support_norm(x, l) <= 1 inside the
    closed unit ball, +inf outside."""
    v = as_vector(x)
    if not np.any(v):
        return LBar0Value(0)
    if support_norm(v, v.size) > 1.0 + tol:
        return LBar0Value(math.inf)
    for l in range(1, v.size + 1):
        if support_norm(v, l) <= 1.0 + tol:
            return LBar0Value(l)
    return LBar0Value(v.size)  # pragma: no cover


def lbar0_2d_array(X1, X2, tol: float = TAU_BALL) -> np.ndarray:
    X1, X2 = np.asarray(X1, dtype=float), np.asarray(X2, dtype=float)
    l1 = np.abs(X1) + np.abs(X2)
    out = np.where(l1 <= 1.0 + tol, 1.0, 2.0)
    out = np.where(np.hypot(X1, X2) > 1.0 + tol, np.inf, out)
    return np.where((X1 == 0.0) & (X2 == 0.0), 0.0, out)


# ---------------------------------------------------------------------------
# general dimension: supergradient ascent on psi(y) = <x, y> - max_l(sgn_l(y) - l)


def _psi_and_supergradient(X: np.ndarray, Y: np.ndarray):
    n, d = X.shape
    Z = np.abs(Y)
    # stable sort: among equal magnitudes the smaller index ranks first
    order = np.argsort(-Z, axis=1, kind="stable")
    zs = np.take_along_axis(Z, order, axis=1)
    prof = np.sqrt(np.concatenate([np.zeros((n, 1)), np.cumsum(zs * zs, axis=1)], axis=1))
    vals = prof - np.arange(d + 1)
    l = np.argmax(vals, axis=1)
    rows = np.arange(n)
    psi = np.einsum("ij,ij->i", X, Y) - vals[rows, l]
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.broadcast_to(np.arange(d), (n, d)).copy(), axis=1)
    active = rank < l[:, None]
    nrm = prof[rows, l]
    nrm = np.where(nrm > 0, nrm, 1.0)
    G = X - np.where(active, Y, 0.0) / nrm[:, None]
    return psi, G


def _ascent(X: np.ndarray, iters: int, mode: str, alpha0: float, r0: float):
    n, _ = X.shape
    Y = np.zeros_like(X)
    best = np.full(n, -np.inf)
    best_y = np.zeros_like(X)
    mid = None
    rbar = np.full(n, r0)
    g2 = np.zeros(n)
    for t in range(1, iters + 1):
        psi, G = _psi_and_supergradient(X, Y)
        better = psi > best
        best = np.where(better, psi, best)
        best_y[better] = Y[better]
        if t == iters // 2:
            mid = best.copy()
        if mode == "dog":
            g2 += np.einsum("ij,ij->i", G, G)
            rbar = np.maximum(rbar, np.linalg.norm(Y, axis=1))
            step = rbar / np.sqrt(np.where(g2 > 0, g2, 1.0))
        else:
            step = np.full(n, alpha0 / math.sqrt(t))
        Y = Y + step[:, None] * G
    if mid is None:
        mid = best.copy()
    return best, best_y, mid


@dataclass(frozen=True)
class AscentResult:
    """Best lower bound psi(dual_point) <= L0(x) found by the ascent.

    converged is True when the best value moved by at most tol over the second
    half of the iteration budget.
    """

    value: float
    dual_point: Tuple[float, ...]
    converged: bool
    iterations: int


def calL0_general_batch(X, tol: float = 1e-4, max_iter: int = 100_000, alpha0: float = 3.0):
    """Evaluate L0 at the rows of X by supergradient ascent.

    Two ascents share the budget, max_iter // 2 iterations each: diminishing
    steps alpha0 / sqrt(t), and the parameter-free distance-over-gradients
    rule.  The best iterate of either is kept.  Rows with ||x|| > 1 get +inf
    and the origin gets 0 without iterating.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must have shape (n, d)")
    if max_iter < 2:
        raise ValueError("max_iter must be at least 2")
    n, d = X.shape
    out = [None] * n
    r = np.linalg.norm(X, axis=1)
    inside = np.flatnonzero((r <= 1.0 + TIE_TOL) & (r > 0.0))
    for i in np.flatnonzero(r > 1.0 + TIE_TOL):
        out[i] = AscentResult(math.inf, (), True, 0)
    # psi <= 0 everywhere and psi(0) = 0
    for i in np.flatnonzero(r == 0.0):
        out[i] = AscentResult(0.0, (0.0,) * d, True, 0)
    if inside.size:
        Xi = X[inside]
        half = max_iter // 2
        b1, y1, m1 = _ascent(Xi, half, "classic", alpha0, 1.0)
        b2, y2, m2 = _ascent(Xi, max_iter - half, "dog", alpha0, 1.0)
        take2 = b2 > b1
        best = np.where(take2, b2, b1)
        by = np.where(take2[:, None], y2, y1)
        mid = np.maximum(m1, m2)
        for j, i in enumerate(inside):
            out[i] = AscentResult(float(best[j]), tuple(by[j].tolist()), bool(best[j] - mid[j] <= tol), max_iter)
    return out


def calL0_general(x, tol: float = 1e-4, max_iter: int = 100_000) -> AscentResult:
    """L0(x) in any dimension as a certified lower bound; see calL0_general_batch."""
    v = as_vector(x)
    return calL0_general_batch(v[None, :], tol=tol, max_iter=max_iter)[0]


# ---------------------------------------------------------------------------
# decomposition oracle (upper bound) by linear programming over sparse atoms


def _atoms(d: int, resolution: int):
    atoms, cost = [], []
    for i in range(d):
        for s in (1.0, -1.0):
            e = np.zeros(d)
            e[i] = s
            atoms.append(e)
            cost.append(1.0)
    if d >= 2:
        circ = sphere_grid(2, resolution)
        for K in itertools.combinations(range(d), 2):
            A = np.zeros((resolution, d))
            A[:, list(K)] = circ
            atoms.extend(A)
            cost.extend([2.0] * resolution)
    if d == 3:
        S = sphere_grid(3, resolution * resolution // 2)
        atoms.extend(S)
        cost.extend([3.0] * len(S))
    return np.array(atoms), np.array(cost)


def calL0_decomposition_oracle(x, resolution: int = 400) -> float:
    """Upper bound on L0(x), d <= 3, from sparse atoms.

    Level-l atoms are unit vectors with l nonzero entries: the signed basis
    vectors, `resolution` points on each coordinate circle, and for d = 3 a
    Fibonacci lattice of resolution^2 / 2 points.  Writing x as a combination
    with total weight at most 1 and minimizing sum_l l * weight_l is a linear
    program whose feasible set only shrinks the true one, so the optimum is an
    upper bound that converges as the resolution grows.  +inf if infeasible.
    """
    v = as_vector(x)
    d = v.size
    if d > 3:
        raise ValueError("the decomposition oracle is limited to d <= 3")
    if not np.any(v):
        return 0.0
    A, c = _atoms(d, int(resolution))
    res = linprog(
        c,
        A_ub=np.ones((1, c.size)),
        b_ub=[1.0],
        A_eq=A.T,
        b_eq=v,
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:
        return math.inf
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    return float(res.fun)


# ---------------------------------------------------------------------------
# epigraph check: the bilinear biconjugate of lbar0 against the closed form


def _lower_envelope(X1, X2, F):
    fin = np.isfinite(F)
    P = np.c_[X1[fin], X2[fin], F[fin]]
    top = F[fin].max() + 1.0
    hull = ConvexHull(np.vstack([P, np.c_[X1[fin], X2[fin], np.full(fin.sum(), top)]]))
    eq = hull.equations[hull.equations[:, 2] < -1e-12]
    Q = np.c_[X1.ravel(), X2.ravel()]
    Z = np.full(Q.shape[0], -np.inf)
    for a, b, c, e in eq:
        np.maximum(Z, -(a * Q[:, 0] + b * Q[:, 1] + e) / c, out=Z)
    Z = Z.reshape(X1.shape)
    # outside the hull of the finite samples the envelope is +inf
    inside = np.ones(Q.shape[0], dtype=bool)
    for a, b, c, e in hull.equations[np.abs(hull.equations[:, 2]) <= 1e-12]:
        inside &= a * Q[:, 0] + b * Q[:, 1] + e <= 1e-12
    return np.where(inside.reshape(X1.shape), Z, np.inf)


@dataclass(frozen=True)
class EpigraphReport:
    resolution: int
    cell: float
    max_abs_error: float
    n_points: int
    worst_point: Tuple[float, float]
    band_errors: Dict[str, float]


_BANDS = ((0.0, 0.02), (0.02, 0.04), (0.04, 0.08), (0.08, 1.0))


def epigraph_grid_report(grid_resolution: int, dual_grid: Optional[Tuple[int, float]] = None) -> EpigraphReport:
    """Compare the bilinear grid biconjugate of lbar0 with the closed form.

    lbar0 is sampled on a square grid over [-1.1, 1.1]^2.  With dual_grid
    None the dual variable ranges over all of R^2, in which case the
    biconjugate at grid points is the lower convex envelope of the samples;
    otherwise dual_grid = (n, R) uses the n x n dual grid over [-R, R]^2.
    Errors are measured at grid points strictly inside the unit disk that are
    farther than one grid cell from the circle and from every line separating
    two regions of the closed form.  band_errors splits the maximum error by
    distance to the unit circle.
    """
    n = int(grid_resolution)
    if n < 3:
        raise ValueError("grid_resolution must be at least 3")
    g = np.linspace(-1.1, 1.1, n)
    h = float(g[1] - g[0])
    X1, X2 = np.meshgrid(g, g, indexing="ij")
    F = lbar0_2d_array(X1, X2)
    if dual_grid is None:
        B = _lower_envelope(X1, X2, F)
    else:
        m, R = dual_grid
        y = np.linspace(-R, R, int(m))
        G = fenchel_conjugate_2d(F, g, g, y, y)
        B = fenchel_conjugate_2d(G, y, y, g, g)
    ref = calL0_2d_array(X1, X2)
    a, b = np.maximum(np.abs(X1), np.abs(X2)), np.minimum(np.abs(X1), np.abs(X2))
    r = np.hypot(X1, X2)
    mask = (
        (r < 1.0)
        & (1.0 - r > h)
        & (np.abs(a + b - 1.0) / SQRT2 > h)
        & (np.abs(a + _MIX * b - 1.0) / math.hypot(1.0, _MIX) > h)
        & (np.abs(a - b) / SQRT2 > h)
    )
    with np.errstate(invalid="ignore"):
        E = np.where(mask, np.abs(B - ref), 0.0)
    Em = np.where(mask, E, -1.0)
    k = int(np.argmax(Em))
    bands = {}
    for lo, hi in _BANDS:
        sel = mask & (1.0 - r > lo) & (1.0 - r <= hi)
        if sel.any():
            bands[f"{lo:g}-{hi:g}"] = float(E[sel].max())
    return EpigraphReport(
        n, h, float(Em.flat[k]), int(mask.sum()), (float(X1.flat[k]), float(X2.flat[k])), bands
    )


def epigraph_grid_check(grid_resolution: int, dual_grid: Optional[Tuple[int, float]] = None) -> float:
    """Max absolute error of the grid biconjugate of lbar0 against L0 (2-D)."""
    return epigraph_grid_report(grid_resolution, dual_grid).max_abs_error
