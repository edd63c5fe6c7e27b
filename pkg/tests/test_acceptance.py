"""Acceptance criteria, one test each.

Every test records its measured figures with record_property; conftest.py
prints one PASS/FAIL line per criterion at the end of the run.  For the
acceptance report alone: python3 -m tests.test_acceptance
"""

import csv
import io
import itertools
import math
import time

import numpy as np
import pytest

from l0capra import conjugacy as cj
from l0capra import hidden_convexity as hc
from l0capra.cli import main as cli_main
from l0capra.l0 import (
    capra_biconj_l0,
    capra_conj_l0,
    capra_conj_l0_batch,
    capra_l0_primal_grid,
    l0,
    phi,
    sphere_levelset_samples,
)
from l0capra.norms import gauge_norm, support_function_sampled, support_norm
from l0capra.suites import ALPHABET, moreau_law_violations
from l0capra.xreal import lower_add, upper_add

from .oracles import brute_gauge, support_norm_oracle

SQRT2 = math.sqrt(2.0)


class Clock:
    def __init__(self, limit):
        self.limit = limit
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check(self, record):
        record("seconds", round(self.elapsed, 3))
        assert self.elapsed < self.limit, f"took {self.elapsed:.1f} s, limit {self.limit} s"


def test_c01_moreau_laws(record_property):
    clock = Clock(1.0)
    bad = moreau_law_violations()
    # sup/inf laws over every pair of nonempty subfamilies of the alphabet
    L, U = lower_add, upper_add
    subsets = [list(s) for r in range(1, 6) for s in itertools.combinations(ALPHABET, r)]
    fam = 0
    for F in subsets:
        for G in subsets:
            pl = [L(f, g) for f in F for g in G]
            pu = [U(f, g) for f in F for g in G]
            fam += L(max(F), max(G)) != max(pl)
            fam += not L(min(F), min(G)) <= min(pl)
            fam += U(min(F), min(G)) != min(pu)
            fam += not U(max(F), max(G)) >= max(pu)
        for t in ALPHABET:
            if t.value < math.inf:
                fam += L(min(F), t) != min(L(f, t) for f in F)
            if t.value > -math.inf:
                fam += U(max(F), t) != max(U(f, t) for f in F)
    record_property("laws", len(bad))
    record_property("violations", sum(bad.values()) + fam)
    assert all(v == 0 for v in bad.values()), {k: v for k, v in bad.items() if v}
    assert fam == 0
    clock.check(record_property)


def test_c02_norm_oracles(record_property):
    clock = Clock(30.0)
    rng = np.random.default_rng(2)
    worst_gap = 0.0
    for _ in range(500):
        d = int(rng.integers(2, 9))
        x = rng.normal(size=d) * rng.integers(0, 2, size=d) if rng.random() < 0.3 else rng.normal(size=d)
        for k in range(0, d + 1):
            assert gauge_norm(x, k) == brute_gauge(x, k)
        k = int(rng.integers(1, d + 1))
        s = support_norm(x, k)
        Y = rng.normal(size=(200, d))
        ratios = (Y @ x) / np.array([gauge_norm(y, k) for y in Y])
        assert np.all(ratios <= s * (1 + 1e-12))
        gap = abs(support_norm_oracle(x, k) - s)
        worst_gap = max(worst_gap, gap)
    record_property("max_oracle_gap", worst_gap)
    assert worst_gap <= 1e-6
    clock.check(record_property)


def _conj_deviation(X, Y):
    f = cj.GridFunction(X, [l0(x).count for x in X])
    grid = cj.conjugate(f, cj.capra(), Y).values
    closed = capra_conj_l0_batch(Y)
    assert np.all(grid <= closed + 1e-12)
    return float(np.max(closed - grid))


def _radial_dual_grid(dirs, radii):
    return np.vstack([np.zeros((1, dirs.shape[1]))] + [r * dirs for r in radii[1:]])


def test_c03_conjugate_formula(record_property):
    clock = Clock(60.0)
    radii = np.linspace(0.0, 5.0, 50)
    # d = 2: dual directions offset by half a step from the primal circles
    t = (np.arange(720) + 0.5) * (2 * math.pi / 720)
    Y2 = _radial_dual_grid(np.c_[np.cos(t), np.sin(t)], radii)
    devs2 = [_conj_deviation(capra_l0_primal_grid(2, m), Y2) for m in (90, 180, 360, 720)]
    # d = 3: Fibonacci dual directions; primal circles plus nested QMC sphere prefixes
    Y3 = _radial_dual_grid(cj.sphere_grid(3, 2000), radii)
    sphere = cj.sphere_grid(3, 2000, scheme="qmc")
    devs3 = []
    for m, n in zip((90, 180, 360, 720), (250, 500, 1000, 2000)):
        X = np.vstack([capra_l0_primal_grid(3, m), sphere[:n]])
        devs3.append(_conj_deviation(np.unique(X, axis=0), Y3))
    record_property("d2_deviations", [f"{v:.3g}" for v in devs2])
    record_property("d3_deviations", [f"{v:.3g}" for v in devs3])
    assert devs2[-1] <= 2e-2
    assert devs3[-1] <= 5e-2
    assert all(b <= a for a, b in zip(devs2, devs2[1:]))
    assert all(b <= a for a, b in zip(devs3, devs3[1:]))
    clock.check(record_property)


def test_c04_biconjugate_certificate(record_property):
    clock = Clock(10.0)
    rng = np.random.default_rng(4)
    worst = -math.inf
    for _ in range(200):
        d = int(rng.integers(1, 7))
        x = np.zeros(d)
        while not x.any():
            x = rng.normal(size=d) * (rng.random(d) < rng.uniform(0.2, 1.0))
        l, cert = capra_biconj_l0(x)
        assert l == l0(x).count
        assert phi(x, 2 * cert.lambda_threshold) == l
        assert cert.holds()
        # dual bound sup_y <x, y>/||x|| - conj(y) at random y never exceeds l0(x)
        Y = rng.normal(size=(200, d)) * rng.uniform(0.1, 50.0, size=(200, 1))
        bound = (Y @ x) / np.linalg.norm(x) - capra_conj_l0_batch(Y)
        worst = max(worst, float(np.max(bound - l)))
    record_property("max_bound_minus_l0", worst)
    assert worst <= 1e-9
    clock.check(record_property)


def test_c05_closed_form_vs_optimization(record_property):
    clock = Clock(120.0)
    rng = np.random.default_rng(5)

    def disk_points(n, rmax):
        r = rmax * np.sqrt(rng.random(n))
        t = rng.uniform(0, 2 * math.pi, n)
        return np.c_[r * np.cos(t), r * np.sin(t)]

    P = disk_points(300, 0.99)
    ref = np.array([hc.calL0_2d(p).value for p in P])
    orc = np.array([hc.calL0_decomposition_oracle(p, 400) for p in P])
    oracle_err = float(np.max(np.abs(orc - ref)))
    Q = disk_points(100, 0.99)
    asc = hc.calL0_general_batch(Q, tol=1e-4, max_iter=100_000)
    ascent_err = max(abs(r.value - hc.calL0_2d(q).value) for q, r in zip(Q, asc))
    record_property("oracle_max_error", oracle_err)
    record_property("ascent_max_error", ascent_err)
    assert oracle_err <= 5e-3
    assert ascent_err <= 1e-3
    clock.check(record_property)


def test_c06_sphere_coincidence(record_property):
    clock = Clock(60.0)
    rng = np.random.default_rng(6)
    # a uniform circle (which holds the four axis points) and random directions
    S = np.vstack([cj.sphere_grid(2, 500), [cj.normalize(v) for v in rng.normal(size=(500, 2))]])
    exact = all(hc.calL0_2d(s).value == l0(s).count for s in S)
    axis = sum(l0(s).count == 1 for s in S)
    worst = 0.0
    for d in (3, 4, 5):
        # 100 samples per dimension spread over the levels, each level cycling its supports
        counts = [100 // d + (k <= 100 % d) for k in range(1, d + 1)]
        ks = np.repeat(np.arange(1, d + 1), counts)
        X = np.vstack([sphere_levelset_samples(d, k, n, seed=d) for k, n in zip(range(1, d + 1), counts)])
        res = hc.calL0_general_batch(X, tol=1e-4, max_iter=100_000)
        worst = max(worst, max(abs(r.value - k) for r, k in zip(res, ks)))
    record_property("d2_axis_samples", axis)
    record_property("ascent_max_error", worst)
    assert exact and len(S) == 1000 and axis == 4
    assert worst <= 5e-2
    clock.check(record_property)


def test_c07_kkt(record_property):
    clock = Clock(5.0)
    rng = np.random.default_rng(7)
    r = 0.999 * np.sqrt(rng.random(300))
    t = rng.uniform(0, 2 * math.pi, 300)
    P = np.c_[r * np.cos(t), r * np.sin(t)]
    # extra points in the triangle region a + b > 1, a + (sqrt2 - 1) b < 1
    tri = []
    while len(tri) < 100:
        a, b = rng.uniform(0.4, 0.75, 2)
        if a + b > 1 and max(a, b) + (SQRT2 - 1) * min(a, b) < 1:
            tri.append((a * rng.choice([-1, 1]), b * rng.choice([-1, 1])))
    obj_err, lam_err, n_tri = 0.0, 0.0, 0
    for x in np.vstack([P, tri]):
        dec = hc.decompose_2d(x)
        rep = hc.verify_kkt_2d(x, dec)
        assert rep.ok, (x, rep)
        obj_err = max(obj_err, abs(dec.objective - hc.calL0_2d(x).value))
        if dec.branch == "Triangle":
            n_tri += 1
            lam_err = max(lam_err, abs(rep.lam - SQRT2), abs(dec.lam - SQRT2))
    record_property("objective_max_error", obj_err)
    record_property("triangle_points", n_tri)
    record_property("lambda_max_error", lam_err)
    assert obj_err <= 1e-9 and lam_err <= 1e-12 and n_tri >= 100
    clock.check(record_property)


def test_c08_epigraph_grid(record_property):
    clock = Clock(60.0)
    r201 = hc.epigraph_grid_report(201)
    r401 = hc.epigraph_grid_report(401)
    record_property("error_201", r201.max_abs_error)
    record_property("error_401", r401.max_abs_error)
    record_property("worst_point_201", r201.worst_point)
    record_property("bands_201", {k: round(v, 4) for k, v in r201.band_errors.items()})
    clock.check(record_property)
    assert r401.max_abs_error < r201.max_abs_error
    assert r201.max_abs_error <= 6e-2


def _one_sided_instance(rng):
    dw, dx = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    W = np.unique(rng.integers(-4, 5, size=(int(rng.integers(2, 41)), dw)).astype(float), axis=0)
    if rng.random() < 0.5:
        A = rng.integers(-3, 4, size=(dx, dw)).astype(float)
        theta = cj.Mapping.linear(A)
    else:
        T = rng.integers(-3, 4, size=(len(W), dx)).astype(float)
        theta = cj.Mapping.table(W, T)
    img = np.unique(theta.image(W), axis=0)
    extra = rng.integers(-5, 6, size=(int(rng.integers(0, 10)), dx)).astype(float)
    X = np.unique(np.vstack([img, extra]), axis=0)[:40]
    X = np.unique(np.vstack([img, X]), axis=0)
    Y = np.unique(rng.integers(-5, 6, size=(int(rng.integers(1, 41)), dx)).astype(float), axis=0)
    pool = np.array([-3.0, -1.0, 0.0, 2.0, 5.0, math.inf, -math.inf])
    weights = np.array([3, 3, 3, 3, 3, 2, 1], dtype=float)
    f = cj.GridFunction(W, rng.choice(pool, len(W), p=weights / weights.sum()))
    g = cj.GridFunction(Y, rng.choice(pool, len(Y), p=weights / weights.sum()))
    return W, X, Y, theta, f, g


def test_c09_one_sided_linear_identities(record_property):
    clock = Clock(5.0)
    rng = np.random.default_rng(9)
    sizes = []
    for _ in range(50):
        W, X, Y, theta, f, g = _one_sided_instance(rng)
        sizes.append(max(len(W), len(Y)))
        c = cj.one_sided(theta)
        b = cj.bilinear()
        h = cj.infimal_postcomposition(theta, f, X)
        TW, inv = np.unique(theta.image(W), axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        # conjugate through the pushforward
        assert np.array_equal(cj.conjugate(f, c, Y).values, cj.conjugate(h, b, Y).values)
        # reverse conjugate through theta
        assert np.array_equal(cj.reverse_conjugate(g, c, W).values, cj.reverse_conjugate(g, b, TW).values[inv])
        # biconjugate factorization
        hstar = cj.conjugate(h, b, Y)
        assert np.array_equal(cj.biconjugate(f, c, Y).values, cj.reverse_conjugate(hstar, b, TW).values[inv])
        # minus conjugate of an indicator is the support function of -theta(S)
        S = W[rng.random(len(W)) < 0.5]
        if len(S) == 0:
            S = W[:1]
        ms = cj.minus_conjugate(cj.indicator(W, S), c, Y).values
        sig = [support_function_sampled(-theta.image(S), y).value for y in Y]
        assert ms.tolist() == sig
    record_property("instances", 50)
    record_property("max_size", max(sizes))
    clock.check(record_property)


def test_c10_l0ext_grid_export(record_property, capsys, tmp_path):
    clock = Clock(10.0)
    outs = []
    for i in range(2):
        path = tmp_path / f"grid{i}.csv"
        assert cli_main(["l0ext", "--grid", "201", "--boundary", "360", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]
    rows = list(csv.reader(io.StringIO(outs[0].decode())))
    assert rows[0] == ["x_1", "x_2", "value", "branch"]
    grid, ring = rows[1 : 1 + 201 * 201], rows[1 + 201 * 201 :]
    assert len(grid) == 201 * 201 and len(ring) == 360
    P = np.array([[float(r[0]), float(r[1])] for r in grid])
    V = np.array([float(r[2]) for r in grid])
    B = np.array([r[3] for r in grid])
    origin = np.flatnonzero((P[:, 0] == 0) & (P[:, 1] == 0))
    assert len(origin) == 1 and V[origin[0]] == 0.0
    R = np.hypot(P[:, 0], P[:, 1])
    assert np.all(np.isinf(V[R > 1 + 1e-12])) and np.all(np.isfinite(V[R < 1]))
    # the circle: 1 at the four axis points, 2 elsewhere
    ring_pts = [(float(r[0]), float(r[1])) for r in ring]
    ring_vals = [float(r[2]) for r in ring]
    axis = [v for (a, b), v in zip(ring_pts, ring_vals) if a == 0.0 or b == 0.0]
    off = [v for (a, b), v in zip(ring_pts, ring_vals) if a != 0.0 and b != 0.0]
    assert sorted(axis) == [1.0] * 4 and set(off) == {2.0}
    # four labelled interior regions, each consistent with its inequalities
    a = np.maximum(np.abs(P[:, 0]), np.abs(P[:, 1]))
    b = np.minimum(np.abs(P[:, 0]), np.abs(P[:, 1]))
    inner = R < 1
    labels = set(B[inner])
    assert labels == {"Lozenge", "Triangle", "NailX1", "NailX2"}
    eps = 1e-12
    loz, tri = B == "Lozenge", B == "Triangle"
    nail = (B == "NailX1") | (B == "NailX2")
    assert np.all(a[loz] + b[loz] <= 1 + eps)
    assert np.all((a[tri] + b[tri] >= 1 - eps) & (a[tri] + (SQRT2 - 1) * b[tri] <= 1 + eps))
    assert np.all(a[nail] + (SQRT2 - 1) * b[nail] >= 1 - eps)
    x1 = B == "NailX1"
    assert np.all(np.abs(P[x1, 0]) >= np.abs(P[x1, 1]) - eps)
    record_property("rows", len(rows) - 1)
    record_property("interior_labels", sorted(str(v) for v in labels))
    clock.check(record_property)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
