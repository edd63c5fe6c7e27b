"""Top-k gauge norms, k-support norms, their balls and a few exposed faces.

gauge_norm(x, k) is the Euclidean norm of the k largest-magnitude entries of
x.  support_norm(x, k) is its dual norm, evaluated in closed form after
sorting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .xreal import ExtReal, NEG_INF

__all__ = [
    "TAU_BALL",
    "as_vector",
    "restrict",
    "gauge_norm",
    "gauge_profile",
    "support_norm",
    "gauge_ball_contains",
    "support_ball_contains",
    "support_function_sampled",
    "Face2D",
    "face_l1_ball_2d",
    "EuclideanFace",
    "face_euclidean_ball",
]

TAU_BALL = 1e-9


def as_vector(x) -> np.ndarray:
    """Validate and return x as a 1-D float array with finite entries."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise ValueError("a vector must be one-dimensional with d >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


def restrict(x, K: Iterable[int]) -> np.ndarray:
    """x_K: keep the components indexed by K (0-based), zero the others."""
    v = as_vector(x)
    out = np.zeros_like(v)
    idx = list(K)
    if any(i < 0 or i >= v.size for i in idx):
        raise ValueError("index set not contained in {0, ..., d-1}")
    out[idx] = v[idx]
    return out


def _check_k(k, d, lo):
    if int(k) != k or not lo <= k <= d:
        raise ValueError(f"k must be an integer in [{lo}, {d}], got {k}")
    return int(k)


def gauge_norm(x, k: int) -> float:
    """sqrt of the sum of the k largest squared magnitudes; 0 when k = 0.

    The sum is taken with math.fsum, so the result is the correctly rounded
    square root of the correctly rounded sum, independent of the order of the
    entries and of any zero padding.
    """
    v = as_vector(x)
    k = _check_k(k, v.size, 0)
    if k == 0:
        return 0.0
    sq = np.sort(v * v)[::-1][:k]
    return math.sqrt(math.fsum(sq.tolist()))


def gauge_profile(x) -> np.ndarray:
    """Array [gauge_norm(x, 0), ..., gauge_norm(x, d)]."""
    v = as_vector(x)
    sq = np.sort(v * v)[::-1].tolist()
    out = [0.0]
    for k in range(1, v.size + 1):
        out.append(math.sqrt(math.fsum(sq[:k])))
    return np.array(out)


def support_norm(x, k: int) -> float:
    """k-support norm, the dual norm of gauge_norm(., k).

    With z = |x| sorted in decreasing order (1-based, z_0 = +inf), r is the
    unique integer in {0, ..., k-1} with

        z_{k-r-1} > T_r / (r+1) >= z_{k-r},   T_r = sum_{i >= k-r} z_i,

    and the squared norm is sum_{i < k-r} z_i^2 + T_r^2 / (r+1).
    """
    v = as_vector(x)
    d = v.size
    k = _check_k(k, d, 1)
    z = np.sort(np.abs(v))[::-1]
    if k == 1:
        return math.fsum(z.tolist())
    # tails[j] = sum of z[j:] in 0-based indexing
    tails = np.concatenate([np.cumsum(z[::-1])[::-1], [0.0]])
    # The admissible r is unique in exact arithmetic.  With ties among the z_i
    # the rounded averages can miss it by an ulp, so take the r whose
    # conditions are violated least (zero for the admissible one).
    best_r, best_v = 0, math.inf
    for r in range(k):
        head = k - r - 1
        avg = tails[head] / (r + 1)
        upper = math.inf if head == 0 else z[head - 1]
        viol = max(0.0, avg - upper) + max(0.0, z[head] - avg)
        if viol < best_v:
            best_r, best_v = r, viol
            if viol == 0.0 and upper > avg:
                break
    r = best_r
    head = k - r - 1
    sq = math.fsum((z[:head] ** 2).tolist()) + tails[head] ** 2 / (r + 1)
    return math.sqrt(sq)


def gauge_ball_contains(x, k: int, radius: float = 1.0, tol: float = TAU_BALL) -> bool:
    """Membership in {gauge_norm(., k) <= radius} up to an absolute tolerance."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return gauge_norm(x, k) <= radius + tol


def support_ball_contains(x, k: int, radius: float = 1.0, tol: float = TAU_BALL) -> bool:
    """Membership in {support_norm(., k) <= radius} up to an absolute tolerance."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return support_norm(x, k) <= radius + tol


def support_function_sampled(points: Sequence, y) -> ExtReal:
    """max over the sample of <p, y>; -inf for an empty sample."""
    yv = as_vector(y)
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return NEG_INF
    P = P.reshape(-1, yv.size)
    return ExtReal(float(np.max(P @ yv)))


@dataclass(frozen=True)
class Face2D:
    """Exposed face of the square [-1, 1]^2 (dual ball of the l1 norm).

    kind is "FullSquare", "VerticalEdge", "HorizontalEdge" or "Corner".
    sign holds the fixed coordinate signs (0 for a free coordinate).
    """

    kind: str
    sign: Tuple[int, int]

    def contains(self, p, tol: float = 1e-12) -> bool:
        p1, p2 = float(p[0]), float(p[1])
        if max(abs(p1), abs(p2)) > 1 + tol:
            return False
        for s, c in zip(self.sign, (p1, p2)):
            if s != 0 and abs(c - s) > tol:
                return False
        return True

    def vertices(self) -> np.ndarray:
        free = [np.array([-1.0, 1.0]) if s == 0 else np.array([float(s)]) for s in self.sign]
        return np.array([(a, b) for a in free[0] for b in free[1]])


def face_l1_ball_2d(anchor) -> Face2D:
    """Face of [-1, 1]^2 exposed by the anchor (the subdifferential of |.|_1)."""
    v = as_vector(anchor)
    if v.size != 2:
        raise ValueError("face_l1_ball_2d needs a vector of dimension 2")
    s = (int(np.sign(v[0])), int(np.sign(v[1])))
    if s == (0, 0):
        return Face2D("FullSquare", s)
    if s[1] == 0:
        return Face2D("VerticalEdge", s)
    if s[0] == 0:
        return Face2D("HorizontalEdge", s)
    return Face2D("Corner", s)


@dataclass(frozen=True)
class EuclideanFace:
    """Face of the Euclidean unit ball exposed by an anchor.

    point is None when the face is the whole ball (anchor 0).
    """

    point: Optional[Tuple[float, ...]]
    dimension: int

    @property
    def whole_ball(self) -> bool:
        return self.point is None

    def contains(self, p, tol: float = 1e-12) -> bool:
        q = as_vector(p)
        if self.point is None:
            return float(np.linalg.norm(q)) <= 1 + tol
        return bool(np.max(np.abs(q - np.asarray(self.point))) <= tol)


def face_euclidean_ball(anchor) -> EuclideanFace:
    v = as_vector(anchor)
    nrm = math.sqrt(math.fsum((v * v).tolist()))
    if nrm == 0.0:
        return EuclideanFace(None, v.size)
    return EuclideanFace(tuple((v / nrm).tolist()), v.size)
