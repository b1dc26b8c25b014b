"""Reweighted hinge-loss learner and its vanilla baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import AlgorithmParams, Halfspace, as_learner_view, as_weights, sign
from .outlier_removal import RemovalParams, RemovalResult, soft_outlier_removal


class SolverStatus(str, Enum):
    CONVERGED = "converged"
    ITER_CAP = "iter_cap"


@dataclass(frozen=True)
class OptimizerConfig:
    """Projected subgradient settings.

    ``tol_abs`` of None means 1e-6 * sum(q). ``step_scale`` multiplies the
    base step (1/gamma) / (G sqrt(t)).
    """

    tol_abs: float | None = None
    patience: int = 200
    max_iters: int = 50_000
    step_scale: float = 1.0

    def to_dict(self) -> dict:
        return {"tol_abs": self.tol_abs, "patience": self.patience,
                "max_iters": self.max_iters, "step_scale": self.step_scale}

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        return cls(**data)


@dataclass
class LearnerOutput:
    w_hat: Halfspace
    v_hat: np.ndarray
    q: np.ndarray
    pruned_indices: np.ndarray
    kept_indices: np.ndarray
    objective_trace: list
    solver_status: SolverStatus
    objective: float
    degenerate: bool = False
    removal: RemovalResult | None = None

    def to_dict(self) -> dict:
        out = {
            "w_hat": [float(v) for v in self.w_hat.w],
            "v_hat": [float(v) for v in self.v_hat],
            "q": [float(v) for v in self.q],
            "pruned_indices": [int(i) for i in self.pruned_indices],
            "kept_indices": [int(i) for i in self.kept_indices],
            "status": self.solver_status.value,
            "objective": self.objective,
            "degenerate": self.degenerate,
        }
        if self.removal is not None:
            out["removal"] = {
                "iterations": self.removal.iterations,
                "lambda_max": self.removal.lambda_max,
                "residual": self.removal.residual,
            }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LearnerOutput":
        removal = None
        if data.get("removal"):
            r = data["removal"]
            removal = RemovalResult(np.array(data["q"]), r["iterations"], r["lambda_max"], r["residual"])
        return cls(
            Halfspace(np.array(data["w_hat"], dtype=float)),
            np.array(data["v_hat"], dtype=float),
            np.array(data["q"], dtype=float),
            np.array(data["pruned_indices"], dtype=int),
            np.array(data["kept_indices"], dtype=int),
            [],
            SolverStatus(data["status"]),
            data["objective"],
            data.get("degenerate", False),
            removal,
        )


def prune(S_bar, r: float, delta: float):
    """Drop samples with ||x|| > r + log(9n / delta); return (kept set, removed indices)."""
    if not r > 0 or not 0 < delta < 1:
        raise ValueError("need r > 0 and delta in (0, 1)")
    n = len(S_bar)
    if n == 0:
        raise ValueError("empty dataset")
    threshold = r + math.log(9.0 * n / delta)
    norms = np.linalg.norm(S_bar.X, axis=1)
    removed = np.flatnonzero(norms > threshold)
    kept = np.flatnonzero(norms <= threshold)
    if kept.size == 0:
        raise ValueError("all samples pruned")
    return S_bar.subset(kept), removed


def _objective(X, y, q, w) -> float:
    return float(q @ np.maximum(0.0, 1.0 - y * (X @ w)))


def minimize_weighted_hinge(S, q, gamma: float, opt: OptimizerConfig | None = None) -> LearnerOutput:
    """Projected subgradient descent on the weighted hinge over ||w|| <= 1/gamma.

    Starts at 0 with step (1/gamma) / (G sqrt(t)), G = sum(q) * max ||x_i||.
    Returns whichever of the best iterate and the running average has the
    lower objective.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    opt = opt or OptimizerConfig()
    V = as_learner_view(S)
    X, y = V.X, V.y.astype(float)
    q = as_weights(q, V.n)
    radius = 1.0 / gamma
    tol = 1e-6 * float(q.sum()) if opt.tol_abs is None else opt.tol_abs

    w = np.zeros(V.d)
    avg = np.zeros(V.d)
    best_w, best = w.copy(), _objective(X, y, q, w)
    trace = [best]
    G = float(q.sum()) * float(np.linalg.norm(X, axis=1).max(initial=0.0))
    status = SolverStatus.ITER_CAP
    if G == 0:
        status = SolverStatus.CONVERGED
    else:
        anchor, since = best, 0
        base = opt.step_scale * radius / G
        for t in range(1, opt.max_iters + 1):
            z = y * (X @ w)
            active = z <= 1.0
            g = -((q * y)[active] @ X[active])
            w = w - (base / math.sqrt(t)) * g
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            avg += (w - avg) / t
            obj = _objective(X, y, q, w)
            trace.append(obj)
            if obj < best:
                best, best_w = obj, w.copy()
            if best < anchor - tol:
                anchor, since = best, 0
            else:
                since += 1
                if since >= opt.patience:
                    status = SolverStatus.CONVERGED
                    break
        avg_obj = _objective(X, y, q, avg)
        if avg_obj < best:
            best, best_w = avg_obj, avg.copy()

    v_hat = best_w
    norm = np.linalg.norm(v_hat)
    degenerate = norm == 0
    if degenerate:
        e1 = np.zeros(V.d)
        e1[0] = 1.0
        w_hat = Halfspace(e1)
    else:
        w_hat = Halfspace(v_hat / norm)
    return LearnerOutput(
        w_hat, v_hat, q, np.zeros(0, dtype=int), np.arange(V.n), trace, status, best, degenerate,
    )


def removal_params(params: AlgorithmParams, d: int, **overrides) -> RemovalParams:
    return RemovalParams(xi=params.xi, sigma_bar=params.sigma_bar(d), **overrides)


def learn(S_bar, params: AlgorithmParams, opt: OptimizerConfig | None = None, vanilla: bool = False,
          seed: int = 0, removal: RemovalParams | None = None) -> LearnerOutput:
    """Prune, reweight (unless ``vanilla``), minimize, normalize."""
    S, removed = prune(S_bar, params.r, params.delta)
    kept = np.setdiff1d(np.arange(len(S_bar)), removed)
    view = as_learner_view(S)
    rem = None
    if vanilla:
        q = np.ones(view.n)
    else:
        rem = soft_outlier_removal(view, removal or removal_params(params, view.d), seed=seed)
        q = rem.q
    out = minimize_weighted_hinge(view, q, params.gamma, opt)
    out.pruned_indices = removed
    out.kept_indices = kept
    out.removal = rem
    return out


def error_rate(w, S_test) -> float:
    """Fraction of ``S_test`` misclassified by sign(w . x), with sign(0) = +1."""
    V = as_learner_view(S_test)
    if V.n == 0:
        raise ValueError("empty test set")
    w = w.w if isinstance(w, Halfspace) else np.asarray(w, dtype=float)
    return float(np.mean(sign(V.X @ w) != V.y))
