from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from malicebench import Dataset, InfeasibleError, RemovalParams, project_weights, soft_outlier_removal, top_direction
from malicebench import verify_feasibility, sample_mixture
from malicebench.datagen import make_separable_spec
from malicebench.outlier_removal import second_moment

from conftest import unit


def qp_oracle(q_raw, xi):
    """Projection onto the box cut by sum(q) >= (1 - xi) n, by active-set enumeration."""
    n = len(q_raw)
    target = (1 - xi) * n
    best, best_val = None, math.inf
    for states in itertools.product((0, 1, 2), repeat=n):
        states = np.array(states)
        fixed = np.where(states == 0, 0.0, 1.0)
        free = states == 2
        for sum_active in (False, True):
            q = fixed.copy()
            if sum_active:
                if not free.any():
                    continue
                theta = (target - fixed[~free].sum() - q_raw[free].sum()) / free.sum()
                q[free] = q_raw[free] + theta
            else:
                q[free] = q_raw[free]
            if q.min() < -1e-12 or q.max() > 1 + 1e-12 or q.sum() < target - 1e-12:
                continue
            val = float(np.sum((q - q_raw) ** 2))
            if val < best_val:
                best, best_val = q, val
    return best


def test_project_examples():
    assert np.allclose(project_weights([0.2, 0.2], 0.5), [0.5, 0.5])
    q = np.array([0.9, 0.95, 1.0])
    assert np.array_equal(project_weights(q, 0.2), q)


def test_project_matches_qp_oracle():
    rng = np.random.default_rng(0)
    for _ in range(40):
        q_raw = rng.uniform(-1.0, 1.5, 6)
        xi = rng.uniform(0.01, 0.9)
        assert np.max(np.abs(project_weights(q_raw, xi) - qp_oracle(q_raw, xi))) <= 1e-8


@settings(max_examples=200)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=30), st.floats(0.001, 0.999))
def test_project_lands_in_the_feasible_set(q_raw, xi):
    q = project_weights(np.array(q_raw), xi)
    n = len(q_raw)
    assert q.min() >= 0 and q.max() <= 1
    assert q.sum() >= (1 - xi) * n - 1e-9


def test_top_direction_examples():
    S = Dataset([[1.0, 0.0]], [1])
    lam, w = top_direction(S, [1.0])
    assert lam == pytest.approx(1.0) and abs(abs(w[0]) - 1) < 1e-12
    assert top_direction(S, [0.5])[0] == pytest.approx(0.5)


def test_top_direction_matches_dense_eigensolver():
    rng = np.random.default_rng(1)
    for seed in range(20):
        X = rng.standard_normal((10, 5))
        q = rng.random(10)
        lam, w = top_direction(Dataset(X, np.ones(10)), q, seed=seed)
        vals, vecs = np.linalg.eigh(second_moment(X, q))
        assert abs(lam - vals[-1]) <= 1e-9 * vals[-1]
        assert abs(abs(w @ vecs[:, -1]) - 1) <= 1e-6


def clean_setup(seed, d=20, n=2000):
    gamma = 0.5
    ws = unit(d)
    spec = make_separable_spec(d, 2, 0.6, 2 * gamma, ws, seed=seed, strict=False)
    return sample_mixture(spec, ws, n, seed), 2 * gamma


def test_clean_data_is_feasible_without_iterations():
    for seed in range(10):
        S, r = clean_setup(seed)
        p = RemovalParams(xi=0.25, sigma_bar=math.sqrt(2 * (1 / S.d + r * r)))
        res = soft_outlier_removal(S, p)
        assert res.iterations == 0 and np.all(res.q == 1.0)


def test_rank_one_dirty_block_bound():
    rng = np.random.default_rng(3)
    d, n_clean, m, R = 5, 200, 40, 20.0
    Xc = rng.standard_normal((n_clean, d)) / math.sqrt(d)
    u = np.zeros(d)
    u[1] = 1.0
    X = np.vstack([Xc, np.tile(R * u, (m, 1))])
    S = Dataset(X, np.ones(n_clean + m), dirty=[False] * n_clean + [True] * m)
    n = S.n
    p = RemovalParams(xi=0.3, sigma_bar=1.0)
    res = soft_outlier_removal(S, p)
    # u^T M(q) u >= sum_dirty q_i R^2 / n, so feasibility forces the closed-form cap
    assert res.q[n_clean:].sum() <= p.sigma_bar**2 * n / R**2 * (1 + p.feas_tol) + 1e-9
    assert all(e.passed for e in verify_feasibility(S, res.q, p))


def test_slack_constraints_accept_all_ones():
    S = Dataset(np.random.default_rng(0).standard_normal((50, 3)), np.ones(50))
    res = soft_outlier_removal(S, RemovalParams(xi=0.999, sigma_bar=1e6))
    assert res.iterations == 0 and np.all(res.q == 1.0)


def test_verify_feasibility_examples():
    S = Dataset(np.eye(3), np.ones(3))
    p = RemovalParams(xi=0.1, sigma_bar=10.0)
    box, total, spec = verify_feasibility(S, [1.5, 1.0, 1.0], p)
    assert not box.passed
    box, total, spec = verify_feasibility(S, np.zeros(3), p)
    assert not total.passed and box.passed and spec.passed


def test_infeasible_instance_raises_with_best_iterate():
    X = np.tile([3.0, 0.0], (20, 1))
    S = Dataset(X, np.ones(20))
    p = RemovalParams(xi=0.1, sigma_bar=0.5, max_iters=200)
    with pytest.raises(InfeasibleError) as info:
        soft_outlier_removal(S, p)
    assert info.value.residual > 0 and info.value.q.shape == (20,)


def test_single_sample():
    S = Dataset([[2.0]], [1])
    res = soft_outlier_removal(S, RemovalParams(xi=0.9, sigma_bar=1.0))
    assert res.q.sum() >= 0.1 - 1e-9 and res.q[0] * 4 <= 1 + 1e-6


def corrupted_instance(seed):
    rng = np.random.default_rng(seed)
    Xc = rng.standard_normal((150, 4)) / 2
    Xd = np.tile(rng.standard_normal(4) * 4, (20, 1))
    return Dataset(np.vstack([Xc, Xd]), np.ones(170))


def test_running_best_is_monotone():
    S = corrupted_instance(0)
    res = soft_outlier_removal(S, RemovalParams(xi=0.25, sigma_bar=1.0))
    cap = 1.0
    best = np.minimum.accumulate([max(0.0, lam - cap) for lam in res.lambda_trace])
    assert np.all(np.diff(best) <= 1e-12)


def test_relaxing_parameters_preserves_feasibility():
    for seed in range(20):
        S = corrupted_instance(seed)
        p = RemovalParams(xi=0.2, sigma_bar=1.2)
        try:
            soft_outlier_removal(S, p)
        except InfeasibleError:
            continue
        soft_outlier_removal(S, RemovalParams(xi=0.3, sigma_bar=1.2))
        soft_outlier_removal(S, RemovalParams(xi=0.2, sigma_bar=1.5))


def test_deterministic():
    S = corrupted_instance(4)
    p = RemovalParams(xi=0.25, sigma_bar=1.0)
    assert soft_outlier_removal(S, p, seed=3).q.tobytes() == soft_outlier_removal(S, p, seed=3).q.tobytes()
