from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from malicebench import (Dataset, Halfspace, LabeledSample, PancakeSpec, Provenance, hinge_loss, in_pancake, margin,
                         subgradient, weighted_hinge_loss)
from malicebench.core import AlgorithmParams, as_learner_view, sign

finite = st.floats(-5, 5, allow_nan=False)


def ds(points):
    return Dataset([p[0] for p in points], [p[1] for p in points])


@pytest.mark.parametrize("w,x,y,expected", [
    ((0.5, 0), (1, 0), 1, 0.5),
    ((2, 0), (1, 0), 1, 0.0),
    ((1, 0), (1, 0), -1, 2.0),
])
def test_hinge_loss_examples(w, x, y, expected):
    assert hinge_loss(np.array(w, float), LabeledSample(np.array(x, float), y)) == expected


def test_weighted_hinge_examples():
    S = ds([((0.5, 0), 1), ((1, 0), -1)])
    w = np.array([1.0, 0.0])
    assert weighted_hinge_loss(w, np.zeros(2), S) == 0.0
    assert weighted_hinge_loss(w, [0.5, 0.25], S) == 0.75
    one = ds([((1, 0), 1)])
    assert weighted_hinge_loss(np.array([0.5, 0.0]), [1.0], one) == 0.5


def test_subgradient_examples():
    S = ds([((1, 0), 1), ((0, 1), -1)])
    assert np.array_equal(subgradient(np.array([2.0, -2.0]), [1, 1], S), np.zeros(2))
    one = ds([((1, 0), 1)])
    assert np.array_equal(subgradient(np.zeros(2), [1.0], one), [-1.0, 0.0])


def test_subgradient_kink_takes_active_branch():
    one = ds([((1, 0), 1)])
    assert np.array_equal(subgradient(np.array([1.0, 0.0]), [1.0], one), [-1.0, 0.0])


def test_subgradient_matches_central_differences():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 5))
    y = np.where(rng.random(30) < 0.5, 1, -1)
    S, q, h = Dataset(X, y), rng.random(30), 1e-6
    checked = 0
    while checked < 50:
        w = rng.standard_normal(5)
        if np.min(np.abs(y * (X @ w) - 1)) <= 1e-3:
            continue
        g = subgradient(w, q, S)
        fd = np.array([(weighted_hinge_loss(w + h * e, q, S) - weighted_hinge_loss(w - h * e, q, S)) / (2 * h)
                       for e in np.eye(5)])
        assert np.max(np.abs(g - fd)) <= 1e-5
        checked += 1


def test_margin_examples():
    S = ds([((1, 0), 1), ((0.6, 0.8), 1)])
    assert margin(Halfspace(np.array([1.0, 0.0])), S) == pytest.approx(0.6)
    bad = ds([((1, 0), 1), ((0.5, 0), -1)])
    assert margin(Halfspace(np.array([1.0, 0.0])), bad) < 0


def test_margin_clean_only_ignores_dirty():
    S = Dataset([[1.0, 0.0], [-3.0, 0.0]], [1, 1], dirty=[False, True])
    w = Halfspace(np.array([1.0, 0.0]))
    assert margin(w, S) == 1.0
    assert margin(w, S, clean_only=False) == -3.0


def test_in_pancake_examples():
    c = LabeledSample(np.array([0.3, 0.0]), 1)
    p = PancakeSpec(np.array([1.0, 0.0]), 0.1, c)
    assert in_pancake(p, LabeledSample(np.array([0.35, 0.0]), 1))
    assert not in_pancake(p, LabeledSample(np.array([0.45, 0.0]), 1))
    assert in_pancake(PancakeSpec(np.array([1.0, 0.0]), 0.0, c), c)


def test_validation_errors():
    with pytest.raises(ValueError):
        LabeledSample(np.array([1.0]), 0)
    with pytest.raises(ValueError):
        LabeledSample(np.array([np.nan]), 1)
    with pytest.raises(ValueError):
        Halfspace(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        weighted_hinge_loss(np.zeros(2), [1.5], ds([((1, 0), 1)]))
    with pytest.raises(ValueError):
        hinge_loss(np.zeros(3), LabeledSample(np.array([1.0, 0.0]), 1))
    with pytest.raises(ValueError):
        AlgorithmParams(gamma=0.5, r=1.0, eta0=0.1, epsilon=1.5, delta=0.1)


def test_sign_tie_is_positive():
    assert sign(0.0) == 1 and sign(-0.0) == 1


def test_learner_view_strips_provenance():
    S = Dataset([[1.0], [2.0]], [1, -1], dirty=[False, True])
    V = S.learner_view()
    assert not hasattr(V, "dirty")
    assert as_learner_view(S).n == 2
    with pytest.raises(ValueError):
        V.X[0, 0] = 3.0


def test_dataset_samples_roundtrip():
    S = Dataset([[1.0, 2.0], [3.0, 4.0]], [1, -1], dirty=[False, True])
    assert S[1].provenance is Provenance.DIRTY
    assert Dataset.from_samples(list(S)) == S
    assert list(S.dirty_indices()) == [1]


def test_sigma_bar_example():
    p = AlgorithmParams(gamma=0.2, r=0.4, eta0=0.125, epsilon=0.25, delta=0.1)
    assert p.sigma_bar(100) == pytest.approx(0.58310, abs=1e-5)
    assert p.xi == 0.25


vec2 = arrays(float, 3, elements=finite)


@settings(max_examples=200)
@given(vec2, vec2, vec2, st.sampled_from([-1, 1]), st.floats(0, 1))
def test_hinge_is_convex(w1, w2, x, y, t):
    s = LabeledSample(x, y)
    lhs = hinge_loss(t * w1 + (1 - t) * w2, s)
    assert lhs <= t * hinge_loss(w1, s) + (1 - t) * hinge_loss(w2, s) + 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=100)
@given(st.integers(0, 10**6))
def test_weighted_hinge_monotone_in_q(seed):
    rng = np.random.default_rng(seed)
    S = Dataset(rng.standard_normal((8, 3)), np.where(rng.random(8) < 0.5, 1, -1))
    w, q = rng.standard_normal(3), rng.random(8)
    i = rng.integers(8)
    q2 = q.copy()
    q2[i] = q[i] + (1 - q[i]) * rng.random()
    assert weighted_hinge_loss(w, q2, S) >= weighted_hinge_loss(w, q, S)


@settings(max_examples=100)
@given(st.integers(0, 10**6))
def test_subgradient_inequality(seed):
    rng = np.random.default_rng(seed)
    S = Dataset(rng.standard_normal((10, 3)), np.where(rng.random(10) < 0.5, 1, -1))
    q, w, w2 = rng.random(10), rng.standard_normal(3), rng.standard_normal(3)
    g = subgradient(w, q, S)
    assert weighted_hinge_loss(w2, q, S) >= weighted_hinge_loss(w, q, S) + g @ (w2 - w) - 1e-9


@settings(max_examples=100)
@given(arrays(float, 2, elements=finite), arrays(float, 2, elements=finite),
       st.sampled_from([-1, 1]), st.sampled_from([-1, 1]), st.floats(0, 3))
def test_in_pancake_symmetric(x1, x2, y1, y2, tau):
    w = np.array([0.6, 0.8])
    a, b = LabeledSample(x1, y1), LabeledSample(x2, y2)
    assert in_pancake(PancakeSpec(w, tau, a), b) == in_pancake(PancakeSpec(w, tau, b), a)
