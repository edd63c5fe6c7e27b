"""Invariant suites driven by ``l0capra verify``.

Each suite returns a SuiteResult: a list of named checks with the largest
deviation observed.  Exact checks report deviation 0 or 1 (pass/fail).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np

from . import conjugacy as cj
from . import hidden_convexity as hc
from . import l0 as l0m
from . import norms
from .xreal import ExtReal, NEG_INF, POS_INF, lower_add, neg, upper_add

TOLERANCES: Dict[str, float] = {
    "tau_ball": norms.TAU_BALL,
    "tau_eq": l0m.TAU_EQ,
    "kkt": 1e-12,
    "branch_agreement": hc.AGREE_TOL,
    "grid_conjugate_d2": 2e-2,
    "ascent": 5e-2,
}


@dataclass
class SuiteResult:
    name: str
    checks: List[Tuple[str, bool, float]] = field(default_factory=list)

    def add(self, label: str, ok: bool, dev: float = 0.0):
        self.checks.append((label, bool(ok), float(dev)))

    @property
    def ok(self) -> bool:
        return all(c[1] for c in self.checks)

    @property
    def max_deviation(self) -> float:
        return max((c[2] for c in self.checks), default=0.0)


ALPHABET = (NEG_INF, ExtReal(-1), ExtReal(0), ExtReal(1), POS_INF)


def moreau_law_violations(alphabet=ALPHABET) -> Dict[str, int]:
    """Count the violations of each Moreau addition law over the alphabet."""
    L, U, A = lower_add, upper_add, alphabet
    bad: Dict[str, int] = {}

    def check(name, cond):
        bad[name] = bad.get(name, 0) + (0 if cond else 1)

    for u, v in itertools.product(A, repeat=2):
        check("lower commutative", L(u, v) == L(v, u))
        check("upper commutative", U(u, v) == U(v, u))
        check("lower <= upper", L(u, v) <= U(u, v))
        check("-(u upper v) = -u lower -v", neg(U(u, v)) == L(neg(u), neg(v)))
        check("-(u lower v) = -u upper -v", neg(L(u, v)) == U(neg(u), neg(v)))
        check("-u lower -v <= -(u lower v)", L(neg(u), neg(v)) <= neg(L(u, v)))
        check("-u upper -v >= -(u upper v)", U(neg(u), neg(v)) >= neg(U(u, v)))
        check("-u lower u <= 0", L(neg(u), u) <= 0)
        check("-u upper u >= 0", U(neg(u), u) >= 0)
        check("u lower -v <= 0 iff u <= v", (L(u, neg(v)) <= 0) == (u <= v))
        check("u <= v iff 0 <= v upper -u", (u <= v) == (0 <= U(v, neg(u))))
    for u, u2, v, v2 in itertools.product(A, repeat=4):
        if u <= u2 and v <= v2:
            check("lower monotone", L(u, v) <= L(u2, v2))
            check("upper monotone", U(u, v) <= U(u2, v2))
    for u, v, w in itertools.product(A, repeat=3):
        check("lower associative", L(L(u, v), w) == L(u, L(v, w)))
        check("upper associative", U(U(u, v), w) == U(u, U(v, w)))
        lhs, rhs = L(U(u, v), w), U(u, L(v, w))
        check("mixed inequality", lhs <= rhs)
        strict = (u == POS_INF and w == NEG_INF) or (u == NEG_INF and w == POS_INF and v.is_finite)
        check("mixed strictness cases", (lhs < rhs) == strict)
        a = L(u, neg(v)) <= w
        b = u <= U(v, w)
        c = L(u, neg(w)) <= v
        check("u lower -v <= w iff u <= v upper w iff u lower -w <= v", a == b == c)
        a = w <= U(v, neg(u))
        b = L(u, w) <= v
        c = u <= U(v, neg(w))
        check("w <= v upper -u iff u lower w <= v iff u <= v upper -w", a == b == c)
    return bad


def moreau_family_violations(rng: np.random.Generator, trials: int = 200) -> Dict[str, int]:
    """Sup/inf distribution laws on random finite families of extended reals."""
    L, U = lower_add, upper_add
    pool = [-math.inf, math.inf, 0.0, -1.0, 1.0, 2.5, -3.25]
    bad = {k: 0 for k in ("lower sup", "lower inf", "lower inf constant", "upper inf", "upper sup", "upper sup constant")}

    def draw():
        n = int(rng.integers(1, 5))
        return [ExtReal(pool[i]) for i in rng.integers(0, len(pool), n)]

    def sup(xs):
        return max(xs)

    def inf(xs):
        return min(xs)

    for _ in range(trials):
        F, G = draw(), draw()
        t = ExtReal(pool[int(rng.integers(0, len(pool)))])
        pairs_L = [L(f, g) for f in F for g in G]
        pairs_U = [U(f, g) for f in F for g in G]
        bad["lower sup"] += L(sup(F), sup(G)) != sup(pairs_L)
        bad["lower inf"] += not (L(inf(F), inf(G)) <= inf(pairs_L))
        bad["upper inf"] += U(inf(F), inf(G)) != inf(pairs_U)
        bad["upper sup"] += not (U(sup(F), sup(G)) >= sup(pairs_U))
        if t < POS_INF:
            bad["lower inf constant"] += L(inf(F), t) != inf([L(f, t) for f in F])
        if t > NEG_INF:
            bad["upper sup constant"] += U(sup(F), t) != sup([U(f, t) for f in F])
    return bad


def suite_xreal(seed: int = 0, scale: int = 1) -> SuiteResult:
    res = SuiteResult("xreal")
    for name, nbad in moreau_law_violations().items():
        res.add(name, nbad == 0, float(nbad))
    rng = np.random.default_rng(seed)
    for name, nbad in moreau_family_violations(rng, 200 * scale).items():
        res.add(name, nbad == 0, float(nbad))
    return res


def suite_norms(seed: int = 0, scale: int = 1) -> SuiteResult:
    res = SuiteResult("norms")
    rng = np.random.default_rng(seed)
    brute_dev = chain_dev = cs_dev = 0.0
    for _ in range(50 * scale):
        d = int(rng.integers(2, 7))
        x = rng.standard_normal(d)
        for k in range(d + 1):
            best = max(
                (math.sqrt(math.fsum((x[list(K)] ** 2).tolist())) for K in itertools.combinations(range(d), k)),
                default=0.0,
            )
            brute_dev = max(brute_dev, abs(best - norms.gauge_norm(x, k)))
        g = [norms.gauge_norm(x, k) for k in range(1, d + 1)]
        s = [norms.support_norm(x, k) for k in range(1, d + 1)]
        chain_dev = max(chain_dev, -float(np.diff(g).min()), float(np.diff(s).max()), 0.0)
        y = rng.standard_normal(d)
        for k in range(1, d + 1):
            cs_dev = max(cs_dev, float(x @ y) - norms.support_norm(x, k) * norms.gauge_norm(y, k))
    res.add("gauge norm equals subset brute force", brute_dev == 0.0, brute_dev)
    res.add("monotone chains", chain_dev <= 1e-12, chain_dev)
    res.add("generalized Cauchy-Schwarz", cs_dev <= 1e-12, max(cs_dev, 0.0))
    return res


def suite_conjugacy(seed: int = 0, scale: int = 1) -> SuiteResult:
    res = SuiteResult("conjugacy")
    rng = np.random.default_rng(seed)
    worst = 0
    for _ in range(10 * scale):
        W = np.unique(rng.integers(-3, 4, size=(12, 2)).astype(float), axis=0)
        A = rng.integers(-2, 3, size=(2, 2)).astype(float)
        theta = cj.Mapping.linear(A)
        X = np.unique(np.vstack([theta.image(W), rng.integers(-3, 4, size=(5, 2))]).astype(float), axis=0)
        Y = np.unique(rng.integers(-3, 4, size=(15, 2)).astype(float), axis=0)
        vals = rng.choice([0.0, 1.0, -2.0, 3.5, math.inf], size=len(W))
        f = cj.GridFunction(W, vals)
        c = cj.one_sided(theta)
        lhs = cj.conjugate(f, c, Y).values
        rhs = cj.conjugate(cj.infimal_postcomposition(theta, f, X), cj.bilinear(), Y).values
        worst += int(not np.array_equal(lhs, rhs))
    res.add("one-sided conjugate = Fenchel conjugate of postcomposition", worst == 0, float(worst))
    P = cj.sphere_grid(2, 64)
    f0 = cj.indicator(np.vstack([[0.0, 0.0], P]), [[0.0, 0.0]])
    dev = float(np.max(np.abs(cj.conjugate(f0, cj.capra(), P * 3.0).values)))
    res.add("Capra conjugate of delta_0 is 0", dev == 0.0, dev)
    return res


def suite_biconjugate(seed: int = 0, scale: int = 1) -> SuiteResult:
    res = SuiteResult("biconjugate")
    X = l0m.capra_l0_primal_grid(2, 72 * scale)
    f = cj.GridFunction(X, [l0m.l0(x).count for x in X])
    dirs = cj.sphere_grid(2, 90 * scale)
    Y = np.vstack([[0.0, 0.0]] + [r * dirs for r in np.linspace(0.25, 5.0, 20)])
    grid = cj.conjugate(f, cj.capra(), Y).values
    closed = l0m.capra_conj_l0_batch(Y)
    dev = float(np.max(np.abs(grid - closed)))
    res.add("grid Capra conjugate of l0 vs closed form", dev <= TOLERANCES["grid_conjugate_d2"], dev)
    bi = cj.reverse_conjugate(cj.GridFunction(Y, grid), cj.capra(), X).values
    over = float(np.max(bi - f.values))
    res.add("biconjugate <= l0", over <= 0.0, max(over, 0.0))
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(50 * scale):
        d = int(rng.integers(1, 7))
        x = rng.standard_normal(d) * (rng.random(d) < 0.6)
        if not x.any():
            x[0] = 1.0
        l, cert = l0m.capra_biconj_l0(x)
        bad += int(not (l == l0m.l0(x).count and cert.holds()))
    res.add("ray certificate reaches l0 exactly", bad == 0, float(bad))
    return res


def suite_hidden_convexity(seed: int = 0, scale: int = 1) -> SuiteResult:
    res = SuiteResult("hidden_convexity")
    rng = np.random.default_rng(seed)
    kkt_bad, obj_dev = 0, 0.0
    for _ in range(100 * scale):
        r, t = 0.999 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
        x = (r * math.cos(t), r * math.sin(t))
        dec = hc.decompose_2d(x)
        kkt_bad += int(not hc.verify_kkt_2d(x, dec).ok)
        obj_dev = max(obj_dev, abs(dec.objective - hc.calL0_2d(x).value))
    res.add("decompositions pass KKT", kkt_bad == 0, float(kkt_bad))
    res.add("decomposition objective = closed form", obj_dev <= 1e-9, obj_dev)
    sph = cj.sphere_grid(2, 360)
    dev = max(abs(hc.calL0_2d(p).value - l0m.l0(p).count) for p in sph)
    res.add("L0 = l0 on the circle", dev == 0.0, dev)
    pts = l0m.sphere_levelset_samples(3, 2, 6, seed=seed)
    asc = hc.calL0_general_batch(pts, max_iter=4000 * scale)
    dev = max(abs(a.value - 2) for a in asc)
    res.add("ascent recovers l0 on the sphere (d=3)", dev <= TOLERANCES["ascent"], dev)
    return res


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "xreal": suite_xreal,
    "norms": suite_norms,
    "conjugacy": suite_conjugacy,
    "biconjugate": suite_biconjugate,
    "hidden_convexity": suite_hidden_convexity,
}
