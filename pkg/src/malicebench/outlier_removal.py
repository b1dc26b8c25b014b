"""Soft outlier removal: weights with bounded weighted second moment.

Finds q in [0, 1]^n with sum(q) >= (1 - xi) n and
lambda_max((1/n) sum_i q_i x_i x_i^T) <= sigma_bar^2, using projected
subgradient descent on the spectral violation. The top eigenpair doubles as
the separation oracle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import BOX_TOL, as_learner_view

log = logging.getLogger(__name__)

POWER_MAX_ITERS = 1000
POWER_REL_TOL = 1e-12
SUM_TOL = 1e-9


@dataclass(frozen=True)
class RemovalParams:
    xi: float
    sigma_bar: float
    feas_tol: float = 1e-6
    max_iters: int = 5000

    def __post_init__(self):
        if not 0 < self.xi < 1:
            raise ValueError("xi must lie in (0, 1)")
        if not self.sigma_bar > 0:
            raise ValueError("sigma_bar must be positive")
        if not 0 < self.feas_tol <= 1e-2:
            raise ValueError("feas_tol must lie in (0, 1e-2]")

    def to_dict(self) -> dict:
        return {"xi": self.xi, "sigma_bar": self.sigma_bar, "feas_tol": self.feas_tol, "max_iters": self.max_iters}

    @classmethod
    def from_dict(cls, data: dict) -> "RemovalParams":
        return cls(**data)


class InfeasibleError(RuntimeError):
    """Raised when the solver stops with the spectral constraint violated."""

    def __init__(self, message: str, q: np.ndarray, residual: float, iterations: int):
        super().__init__(message)
        self.q = q
        self.residual = residual
        self.iterations = iterations


@dataclass
class RemovalResult:
    q: np.ndarray
    iterations: int
    lambda_max: float
    residual: float
    lambda_trace: list = field(default_factory=list)


def second_moment(X: np.ndarray, q: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    return (X.T * q) @ X / n


def power_iteration(M: np.ndarray, start=None, seed: int = 0, max_iters: int = POWER_MAX_ITERS,
                    rel_tol: float = POWER_REL_TOL) -> tuple[float, np.ndarray]:
    """Top eigenpair of a symmetric PSD matrix.

    Runs from ``start`` (or a seeded random vector) and from one extra random
    restart, keeping the larger Rayleigh quotient.
    """
    d = M.shape[0]
    if not np.any(M):
        e1 = np.zeros(d)
        e1[0] = 1.0
        return 0.0, e1
    rng = np.random.default_rng(seed)
    starts = [rng.standard_normal(d) if start is None else np.asarray(start, dtype=float), rng.standard_normal(d)]
    best = (-math.inf, None)
    for v in starts:
        norm = np.linalg.norm(v)
        v = v / norm if norm > 0 else rng.standard_normal(d)
        lam = float(v @ M @ v)
        for _ in range(max_iters):
            u = M @ v
            nu = np.linalg.norm(u)
            if nu == 0:
                break
            v = u / nu
            new = float(v @ M @ v)
            done = abs(new - lam) <= rel_tol * abs(new)
            lam = new
            if done:
                break
        if lam > best[0]:
            best = (lam, v)
    lam, v = best
    return lam, v / np.linalg.norm(v)


def top_direction(S, q, start=None, seed: int = 0) -> tuple[float, np.ndarray]:
    """Largest eigenpair of M(q) = (1/n) sum_i q_i x_i x_i^T."""
    V = as_learner_view(S)
    q = np.asarray(q, dtype=float)
    if q.shape != (V.n,):
        raise ValueError("weight vector length does not match the dataset")
    return power_iteration(second_moment(V.X, q), start=start, seed=seed)


def project_weights(q_raw, xi: float, n: int | None = None) -> np.ndarray:
    """Euclidean projection onto {q in [0,1]^n : sum(q) >= (1 - xi) n}.

    Clips to the box; if the sum constraint then fails, bisects on a
    uniform upward shift theta so that sum(clip(q_raw + theta)) hits the
    target, returning the upper end of the final bracket.
    """
    q_raw = np.asarray(q_raw, dtype=float)
    n = q_raw.shape[0] if n is None else n
    target = (1.0 - xi) * n
    if target > n:
        raise ValueError("sum constraint cannot be met inside the box")
    q = np.clip(q_raw, 0.0, 1.0)
    if q.sum() >= target:
        return q
    lo, hi = 0.0, max(1.0 - float(q_raw.min()), 0.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.clip(q_raw + mid, 0.0, 1.0).sum() >= target:
            hi = mid
        else:
            lo = mid
    # exact solve on the segment found by bisection: free entries shift linearly
    theta = hi
    free = (q_raw + theta > 0.0) & (q_raw + theta < 1.0)
    if free.any():
        fixed = np.clip(q_raw[~free] + theta, 0.0, 1.0).sum()
        exact = (target - fixed - q_raw[free].sum()) / free.sum()
        cand = np.clip(q_raw + exact, 0.0, 1.0)
        if lo <= exact <= hi and cand.sum() >= target:
            return cand
    return np.clip(q_raw + theta, 0.0, 1.0)


def spectral_violation(X: np.ndarray, q: np.ndarray, sigma_bar: float, start=None, seed: int = 0):
    lam, w = power_iteration(second_moment(X, q), start=start, seed=seed)
    return max(0.0, lam - sigma_bar**2), lam, w


def soft_outlier_removal(S, p: RemovalParams, seed: int = 0) -> RemovalResult:
    """Find feasible weights, or raise :class:`InfeasibleError`."""
    V = as_learner_view(S)
    if V.n < 1:
        raise ValueError("empty dataset")
    X, n = V.X, V.n
    cap = p.sigma_bar**2
    stop = cap * p.feas_tol

    q = np.ones(n)
    viol, lam, w = spectral_violation(X, q, p.sigma_bar, seed=seed)
    trace = [lam]
    best_q, best_viol, best_lam = q, viol, lam
    t = 0
    while best_viol > stop and t < p.max_iters:
        t += 1
        g = (X @ w) ** 2 / n
        gg = float(g @ g)
        if gg == 0:
            break
        q = project_weights(q - cap / (gg * math.sqrt(t)) * g, p.xi, n)
        viol, lam, w = spectral_violation(X, q, p.sigma_bar, start=w, seed=seed + t)
        trace.append(lam)
        if viol < best_viol:
            best_q, best_viol, best_lam = q, viol, lam
    if best_viol > stop:
        raise InfeasibleError(
            f"infeasible or unconverged after {t} iterations (residual {best_viol:.3g})",
            best_q, best_viol, t,
        )
    log.debug("soft outlier removal converged in %d iterations", t)
    return RemovalResult(best_q, t, best_lam, best_viol, trace)


def verify_feasibility(S, q, p: RemovalParams, seed: int = 12345) -> list:
    """Recompute all three constraint residuals independently.

    Returns certificate entries (see :mod:`malicebench.diagnostics`).
    """
    from .diagnostics import CertificateEntry

    V = as_learner_view(S)
    q = np.asarray(q, dtype=float)
    n = V.n
    rng = np.random.default_rng(seed)
    lam = float(power_iteration(second_moment(V.X, q), start=rng.standard_normal(V.d), seed=seed + 1)[0])
    q_min = float(q.min()) if n else 0.0
    q_max = float(q.max()) if n else 0.0
    box_ok = q_min >= -BOX_TOL and q_max <= 1 + BOX_TOL
    target = (1.0 - p.xi) * n
    cap = p.sigma_bar**2 * (1 + p.feas_tol)
    return [
        CertificateEntry("box", box_ok, max(-q_min, q_max - 1.0), BOX_TOL,
                         f"min q={q_min!r}, max q={q_max!r}"),
        CertificateEntry("sum", float(q.sum()) >= target - SUM_TOL, float(q.sum()), target,
                         f"sum(q) >= (1 - xi) n with xi={p.xi}"),
        CertificateEntry("spectral", lam <= cap, lam, cap,
                         f"lambda_max(M(q)) <= sigma_bar^2 (1 + feas_tol), sigma_bar={p.sigma_bar}"),
    ]
