import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from l0capra.norms import (
    face_euclidean_ball,
    face_l1_ball_2d,
    gauge_ball_contains,
    gauge_norm,
    gauge_profile,
    restrict,
    support_ball_contains,
    support_function_sampled,
    support_norm,
)
from l0capra.xreal import NEG_INF

from .oracles import brute_gauge, support_norm_oracle

# entries below 1e-100 are flushed to 0: their squares underflow in the references
entries = st.floats(-100, 100, allow_nan=False, width=64).map(lambda v: v if abs(v) >= 1e-100 else 0.0)
vectors = st.integers(1, 8).flatmap(lambda d: arrays(np.float64, d, elements=entries))
# entries on a 1e-3 lattice: no subnormal or near-tie noise for the SLSQP oracle
lattice = st.integers(2, 6).flatmap(
    lambda d: arrays(np.float64, d, elements=st.integers(-5000, 5000).map(lambda i: i / 1000))
)
pairs = st.integers(1, 8).flatmap(
    lambda d: st.tuples(
        arrays(np.float64, d, elements=st.floats(-100, 100, width=64)),
        arrays(np.float64, d, elements=st.floats(-100, 100, width=64)),
    )
)


def test_gauge_examples():
    x = [3, -4, 0, 12]
    assert gauge_norm(x, 1) == 12
    assert gauge_norm(x, 2) == brute_gauge(x, 2) == math.sqrt(160)
    assert gauge_norm(x, 4) == 13
    assert gauge_norm(x, 0) == 0
    with pytest.raises(ValueError):
        gauge_norm(x, 5)


def test_support_examples():
    assert support_norm([3, -4, 12], 1) == 19
    assert support_norm([3, 4], 2) == 5
    assert support_norm([3, 1, 1], 2) == pytest.approx(math.sqrt(13), abs=1e-12)
    assert support_norm_oracle([3, 1, 1], 2) == pytest.approx(3.6055513, abs=1e-7)
    with pytest.raises(ValueError):
        support_norm([1, 2], 0)


def test_ball_examples():
    assert support_ball_contains([0.5, 0.5], 1, 1.0)
    assert not support_ball_contains([0.9, 0.9], 1, 1.0)
    assert gauge_ball_contains([0.6, 0.6], 2, 1.0)
    assert support_ball_contains([0.6, 0.6], 2, 1.0)


def test_zero_vector():
    for k in range(1, 4):
        assert gauge_norm(np.zeros(3), k) == 0.0
        assert support_norm(np.zeros(3), k) == 0.0


def test_restrict():
    assert restrict([1, 2, 3], [0, 2]).tolist() == [1, 0, 3]
    with pytest.raises(ValueError):
        restrict([1, 2], [2])


@given(vectors)
def test_chains(x):
    d = x.size
    g = gauge_profile(x)
    assert np.all(np.diff(g) >= 0)
    assert g[-1] == pytest.approx(np.linalg.norm(x), rel=1e-12, abs=1e-300)
    s = [support_norm(x, k) for k in range(1, d + 1)]
    assert all(a >= b - 1e-12 * (1 + a) for a, b in zip(s, s[1:]))
    assert s[0] == pytest.approx(np.abs(x).sum(), rel=1e-12)
    assert s[-1] == pytest.approx(np.linalg.norm(x), rel=1e-12, abs=1e-300)
    assert s[-1] == pytest.approx(gauge_norm(x, d), rel=1e-12, abs=1e-300)
    for k in range(1, d + 1):
        assert gauge_norm(x, k) <= math.sqrt(k) * gauge_norm(x, 1) * (1 + 1e-15)


@given(vectors)
def test_brute_force_exact(x):
    for k in range(x.size + 1):
        assert gauge_norm(x, k) == brute_gauge(x, k)


@given(vectors, st.randoms(use_true_random=False))
def test_permutation_and_sign_invariance(x, rnd):
    perm = list(range(x.size))
    rnd.shuffle(perm)
    y = x[perm] * np.array([rnd.choice([-1.0, 1.0]) for _ in perm])
    for k in range(1, x.size + 1):
        assert gauge_norm(y, k) == gauge_norm(x, k)
        assert support_norm(y, k) == pytest.approx(support_norm(x, k), rel=1e-13, abs=1e-300)


@given(pairs)
def test_generalized_cauchy_schwarz(xy):
    x, y = xy
    for k in range(1, x.size + 1):
        assert float(x @ y) <= support_norm(x, k) * gauge_norm(y, k) * (1 + 1e-12) + 1e-9


@settings(max_examples=40, deadline=None)
@given(lattice)
def test_closed_form_matches_duality_oracle(x):
    for k in range(1, x.size + 1):
        assert support_norm(x, k) == pytest.approx(support_norm_oracle(x, k), abs=1e-6, rel=1e-7)


@given(vectors)
def test_ball_nesting(x):
    d = x.size
    for k in range(1, d):
        if gauge_ball_contains(x, k + 1):
            assert gauge_ball_contains(x, k)
        if support_ball_contains(x, k):
            assert support_ball_contains(x, k + 1)


def test_support_function_sampled():
    assert support_function_sampled([(1, 0), (0, 1)], (2, 3)) == 3
    assert support_function_sampled([], (2, 3)) == NEG_INF
    rng = np.random.default_rng(3)
    pts = []
    for K in itertools.combinations(range(3), 2):
        t = rng.uniform(0, 2 * np.pi, 3334)
        P = np.zeros((t.size, 3))
        P[:, K[0]], P[:, K[1]] = np.cos(t), np.sin(t)
        pts.append(P)
    y = np.array([3.0, -4.0, 12.0])
    val = support_function_sampled(np.vstack(pts), y).value
    assert val <= gauge_norm(y, 2)
    assert val == pytest.approx(gauge_norm(y, 2), abs=1e-4)


def test_face_l1_examples():
    assert face_l1_ball_2d((0, 0)).kind == "FullSquare"
    f = face_l1_ball_2d((0.5, 0))
    assert f.kind == "VerticalEdge" and f.sign == (1, 0)
    f = face_l1_ball_2d((0.3, -0.2))
    assert f.kind == "Corner" and f.sign == (1, -1)
    assert face_l1_ball_2d((0, -2)).kind == "HorizontalEdge"


_T = np.linspace(-1, 1, 201)
_SQUARE = np.array([(a, b) for a in _T for b in _T])


@settings(deadline=None)
@given(st.tuples(st.sampled_from([-0.7, 0.0, 0.4]), st.sampled_from([-0.3, 0.0, 0.9])))
def test_face_l1_matches_argmax(anchor):
    # the exposed face is the argmax of <anchor, p> over a dense sample of the square
    P = _SQUARE
    vals = P @ np.asarray(anchor)
    arg = P[vals >= vals.max() - 1e-12]
    face = face_l1_ball_2d(anchor)
    assert all(face.contains(p) for p in arg)
    assert all(any(np.allclose(v, p) for p in arg) for v in face.vertices())


def test_face_euclidean():
    assert face_euclidean_ball((3, 4)).point == pytest.approx((0.6, 0.8))
    assert face_euclidean_ball((0, 0)).whole_ball
    assert face_euclidean_ball((0, -2)).point == (0.0, -1.0)
