"""The l0 pseudonorm and its Capra conjugates.

With the Capra coupling c(x, y) = <x, y> / ||x||, the conjugate of the
indicator of {l0 <= k} is gauge_norm(., k), the conjugate of l0 is
max_l (gauge_norm(., l) - l), and the biconjugate gives back l0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .conjugacy import sphere_grid
from .norms import as_vector, gauge_norm, gauge_profile, support_norm
from .xreal import lower_add

__all__ = [
    "TAU_EQ",
    "L0Value",
    "RayCertificate",
    "l0",
    "level_set_member",
    "capra_conj_levelset",
    "capra_conj_l0",
    "capra_conj_l0_batch",
    "capra_biconj_l0",
    "phi",
    "sphere_levelset_samples",
    "sphere_levelset_member",
    "capra_l0_primal_grid",
]

TAU_EQ = 1e-10


@dataclass(frozen=True)
class L0Value:
    count: int

    def __int__(self):
        return self.count

    def __eq__(self, other):
        if isinstance(other, L0Value):
            return self.count == other.count
        if isinstance(other, (int, np.integer)):
            return self.count == int(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.count)


def l0(x, tau_zero: float = 0.0) -> L0Value:
    """Number of components with |x_i| > tau_zero (tau_zero = 0 by default)."""
    v = as_vector(x)
    if tau_zero < 0:
        raise ValueError("tau_zero must be nonnegative")
    return L0Value(int(np.count_nonzero(np.abs(v) > tau_zero)))


def level_set_member(x, k: int, tol: float = TAU_EQ) -> bool:
    """Test l0(x) <= k through |gauge_norm(x, k) - ||x||| <= tol."""
    v = as_vector(x)
    return abs(gauge_norm(v, k) - gauge_norm(v, v.size)) <= tol


def sphere_levelset_member(x, k: int, tol: float = TAU_EQ) -> bool:
    """For a unit vector x, l0(x) <= k iff support_norm(x, k) <= 1."""
    return support_norm(x, k) <= 1.0 + tol


def capra_conj_levelset(k: int, y) -> float:
    """Capra conjugate of the indicator of {l0 <= k}: gauge_norm(y, k)."""
    return gauge_norm(y, k)


def capra_conj_l0(y) -> float:
    """max over l = 0..d of gauge_norm(y, l) - l."""
    prof = gauge_profile(y)
    return float(np.max(prof - np.arange(prof.size)))


def capra_conj_l0_batch(Y) -> np.ndarray:
    """Row-wise capra_conj_l0 for an (n, d) array (plain cumulative sums)."""
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    sq = np.sort(Y * Y, axis=1)[:, ::-1]
    prof = np.sqrt(np.concatenate([np.zeros((n, 1)), np.cumsum(sq, axis=1)], axis=1))
    return np.max(prof - np.arange(d + 1), axis=1)


@dataclass(frozen=True)
class RayCertificate:
    """phi(lambda) along the ray y = lambda * x, with the threshold past which
    phi is constant equal to l.  Empty for x = 0."""

    x: Tuple[float, ...]
    l: int
    lambda_threshold: float
    phi_samples: List[Tuple[float, float]] = field(default_factory=list)

    def holds(self) -> bool:
        return all(v == self.l for lam, v in self.phi_samples if lam > self.lambda_threshold)


def phi(x, lam: float) -> float:
    """phi(lambda) = lambda ||x|| (lower+) -capra_conj_l0(lambda x).

    The conjugate along the ray is evaluated by positive homogeneity of the
    gauge norms, gauge_norm(lambda x, j) = lambda gauge_norm(x, j), using the
    same rounded gauge values for ||x|| and for the j >= l0(x) terms.  This
    makes phi equal to the integer l0(x) exactly past the threshold.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    prof = gauge_profile(x)
    terms = lam * prof - np.arange(prof.size)
    return float(lower_add(lam * prof[-1], -float(np.max(terms))).value)


def _threshold(prof: np.ndarray, l: int) -> float:
    lam = l / prof[-1]
    for j in range(l):
        lam = max(lam, (l - j) / (prof[l] - prof[j]))
    return float(lam)


def capra_biconj_l0(x, multipliers=(0.25, 0.5, 0.9, 1.5, 2.0, 4.0, 16.0)) -> Tuple[int, RayCertificate]:
    """Capra biconjugate of l0 at x, certified along the ray y = lambda x.

    Returns (l, cert) with l = l0(x); cert.lambda_threshold is

        max( l / ||x||,  max_{j < l} (l - j) / (gauge_l(x) - gauge_j(x)) )

    and cert.phi_samples holds phi at the given multiples of the threshold.
    """
    v = as_vector(x)
    l = l0(v).count
    if l == 0:
        return 0, RayCertificate(tuple(v.tolist()), 0, 0.0, [])
    prof = gauge_profile(v)
    lam_star = _threshold(prof, l)
    samples = [(m * lam_star, phi(v, m * lam_star)) for m in multipliers]
    return l, RayCertificate(tuple(v.tolist()), l, lam_star, samples)


def sphere_levelset_samples(d: int, k: int, n: int, seed: int = 0, floor: float = 0.2) -> np.ndarray:
    """n unit vectors with exactly k nonzero entries, cycling over all supports.

    Nonzero magnitudes are drawn uniformly from [floor, 1] with random signs
    before normalization, so no nonzero entry is tiny.  For k = 1 the samples
    are the signed basis vectors, +e_i on the first pass over the supports and
    -e_i on the second.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < floor <= 1:
        raise ValueError("floor must lie in (0, 1]")
    supports = list(itertools.combinations(range(d), k))
    rng = np.random.default_rng(seed)
    out = np.zeros((n, d))
    for m in range(n):
        K = list(supports[m % len(supports)])
        if k == 1:
            out[m, K[0]] = 1.0 if (m // len(supports)) % 2 == 0 else -1.0
            continue
        mag = rng.uniform(floor, 1.0, size=k)
        sgn = rng.choice([-1.0, 1.0], size=k)
        vals = mag * sgn
        out[m, K] = vals / math.sqrt(math.fsum((vals * vals).tolist()))
    return out


def capra_l0_primal_grid(d: int, n: int) -> np.ndarray:
    """Primal grid for Capra conjugates of l0: the origin plus, for every
    support K, points of the unit sphere of the coordinate subspace R^K
    (n points per support of size >= 2, the signed basis vectors for size 1).

    Only directions matter for the Capra coupling, so unit vectors suffice.
    """
    pts = [np.zeros((1, d))]
    for k in range(1, d + 1):
        S = np.array([[1.0], [-1.0]]) if k == 1 else sphere_grid(k, n)
        for K in itertools.combinations(range(d), k):
            P = np.zeros((S.shape[0], d))
            P[:, list(K)] = S
            pts.append(P)
    return np.unique(np.vstack(pts), axis=0)
