"""Runtime certificates for the robustness analysis.

Adversarial quantities (the dirty linear sum norm) are bounded from above
and favorable ones (clean pancake weight) from below, so a reported pass is
conservative even though the sum norm itself is only estimated.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Dataset, Halfspace, LabeledSample, as_learner_view, subgradient
from .learner import LearnerOutput

EXACT_MAX_M = 20
GRAD_SLACK = 1e-6


@dataclass
class CertificateEntry:
    check_id: str
    passed: bool
    lhs: float
    rhs: float
    detail: str = ""
    skipped: bool = False

    def to_dict(self) -> dict:
        return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in asdict(self).items()}


@dataclass
class CertificateReport:
    entries: list = field(default_factory=list)

    def add(self, entry: CertificateEntry) -> None:
        self.entries.append(entry)

    def extend(self, entries) -> None:
        self.entries.extend(entries)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if not e.skipped)

    def failures(self) -> list:
        return [e for e in self.entries if not e.skipped and not e.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "entries": [e.to_dict() for e in self.entries]}

    def summary_table(self) -> str:
        width = max([len(e.check_id) for e in self.entries] + [8])
        lines = [f"{'check':<{width}}  {'status':<7}  {'lhs':>14}  {'rhs':>14}"]
        for e in self.entries:
            status = "skip" if e.skipped else ("pass" if e.passed else "FAIL")
            lines.append(f"{e.check_id:<{width}}  {status:<7}  {e.lhs:>14.6g}  {e.rhs:>14.6g}")
        return "\n".join(lines)


@dataclass
class SumNormEstimate:
    lower: float
    upper: float
    upper_sq: float
    exact: float | None
    witness_a: np.ndarray
    witness_w: np.ndarray


def _points(S) -> np.ndarray:
    if isinstance(S, np.ndarray):
        return np.atleast_2d(S).astype(float)
    return as_learner_view(S).X


def _lambda_max(X: np.ndarray, weights: np.ndarray) -> float:
    if X.shape[0] == 0:
        return 0.0
    return max(float(np.linalg.eigvalsh((X.T * weights) @ X)[-1]), 0.0)


def _exact_sum_norm(V: np.ndarray) -> tuple[float, np.ndarray]:
    """max over a in {-1,1}^m of ||a @ V||, fixing a_0 = +1 by symmetry."""
    m = V.shape[0]
    if m == 1:
        return float(np.linalg.norm(V[0])), np.ones(1)
    total = 1 << (m - 1)
    shifts = np.arange(m - 1)
    best, best_a = -1.0, None
    for start in range(0, total, 1 << 16):
        codes = np.arange(start, min(start + (1 << 16), total))
        signs = 1.0 - 2.0 * ((codes[:, None] >> shifts) & 1)
        norms = np.linalg.norm(V[0] + signs @ V[1:], axis=1)
        j = int(np.argmax(norms))
        if norms[j] > best:
            best, best_a = float(norms[j]), np.concatenate([[1.0], signs[j]])
    return best, best_a


def _alternating(V: np.ndarray, w: np.ndarray, max_rounds: int = 100) -> tuple[float, np.ndarray, np.ndarray]:
    a = None
    value, best_w = 0.0, w
    for _ in range(max_rounds):
        a_new = np.where(V @ w >= 0, 1.0, -1.0)
        if a is not None and np.array_equal(a_new, a):
            break
        a = a_new
        v = a @ V
        value = float(np.linalg.norm(v))
        if value == 0:
            break
        w = v / value
        best_w = w
    return value, a, best_w


def sum_norm(S_sub, q_sub, mode: str = "heuristic", restarts: int = 20, seed: int = 0) -> SumNormEstimate:
    """Estimate sup_{a in [-1,1]^m} ||sum_i a_i q_i x_i||.

    ``lower`` comes from alternating maximization with ``restarts`` starts
    (always attained by the returned witness); ``upper`` is the
    Cauchy-Schwarz bound sqrt(m) * sqrt(lambda_max(sum q_i x_i x_i^T)), and
    ``upper_sq`` the tighter variant with q_i^2. ``mode="exact"`` also
    enumerates sign vectors (m <= 20).
    """
    X = _points(S_sub)
    q = np.asarray(q_sub, dtype=float).reshape(-1)
    m, d = X.shape[0], X.shape[1] if X.ndim == 2 else 0
    if q.shape[0] != m:
        raise ValueError("weight vector length does not match the subset")
    if mode not in ("heuristic", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and m > EXACT_MAX_M:
        raise ValueError(f"exact mode needs m <= {EXACT_MAX_M}, got {m}")
    if m == 0:
        return SumNormEstimate(0.0, 0.0, 0.0, 0.0 if mode == "exact" else None, np.zeros(0), np.zeros(d))

    V = q[:, None] * X
    upper = math.sqrt(m) * math.sqrt(_lambda_max(X, q))
    upper_sq = math.sqrt(m) * math.sqrt(_lambda_max(X, q * q))

    rng = np.random.default_rng(seed)
    starts = []
    if np.any(V):
        starts.append(np.linalg.eigh(V.T @ V)[1][:, -1])
    starts += [rng.standard_normal(d) for _ in range(max(restarts - len(starts), 0))]
    best = (-1.0, None, None)
    for w in starts:
        w = w / np.linalg.norm(w)
        val, a, w_out = _alternating(V, w)
        if val > best[0]:
            best = (val, a, w_out)
    lower, a, w = best

    exact = None
    if mode == "exact":
        exact, _ = _exact_sum_norm(V)
    return SumNormEstimate(lower, upper, upper_sq, exact, a, w)


def _signed_projections(S, w: np.ndarray) -> np.ndarray:
    V = as_learner_view(S)
    return V.y * (V.X @ w)


def pancake_density(center: LabeledSample, w, tau: float, S_C) -> float:
    """Fraction of ``S_C`` inside the pancake of ``center`` along ``w``."""
    w = w.w if isinstance(w, Halfspace) else np.asarray(w, dtype=float)
    if len(S_C) == 0:
        raise ValueError("empty clean set")
    ref = center.y * float(w @ center.x)
    return float(np.mean(np.abs(_signed_projections(S_C, w) - ref) <= tau))


def pancake_densities(centers, w: np.ndarray, tau: float, S_C) -> np.ndarray:
    """Vectorized pancake densities for many centers (sorted-projection counts)."""
    vals = np.sort(_signed_projections(S_C, w))
    refs = _signed_projections(centers, w)
    hi = np.searchsorted(vals, refs + tau, side="right")
    lo = np.searchsorted(vals, refs - tau, side="left")
    return (hi - lo) / vals.shape[0]


def _pancake_weights(centers, w: np.ndarray, tau: float, S_C, q_C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-center (count, total weight) of clean points in the pancake."""
    vals = _signed_projections(S_C, w)
    order = np.argsort(vals)
    vals = vals[order]
    csum = np.concatenate([[0.0], np.cumsum(np.asarray(q_C, dtype=float)[order])])
    refs = _signed_projections(centers, w)
    hi = np.searchsorted(vals, refs + tau, side="right")
    lo = np.searchsorted(vals, refs - tau, side="left")
    return hi - lo, csum[hi] - csum[lo]


def _draw(sampler, n: int) -> Dataset:
    return sampler.draw(n) if hasattr(sampler, "draw") else sampler(n)


def check_dense_pancake_condition(S_C, D_sampler, w, tau: float, rho: float, n_test: int,
                                  seed: int = 0, n_dir: int = 50) -> tuple[float, CertificateReport]:
    """Estimate beta: the fraction of fresh points whose pancake is not rho-dense.

    Checked along every supplied direction plus ``n_dir`` random ones; the
    worst direction is returned.
    """
    if n_test < 100:
        raise ValueError("n_test must be at least 100")
    centers = _draw(D_sampler, n_test)
    d = centers.d
    supplied = w if isinstance(w, (list, tuple)) else [w]
    dirs = [(f"supplied_{i}", (v.w if isinstance(v, Halfspace) else np.asarray(v, dtype=float)))
            for i, v in enumerate(supplied) if v is not None]
    rng = np.random.default_rng(seed)
    for i in range(n_dir):
        v = rng.standard_normal(d)
        dirs.append((f"random_{i}", v / np.linalg.norm(v)))
    report = CertificateReport()
    worst = 0.0
    for name, u in dirs:
        beta = float(np.mean(pancake_densities(centers, u, tau, S_C) < rho))
        worst = max(worst, beta)
        report.add(CertificateEntry(f"dense_pancake[{name}]", True, beta, rho,
                                    f"fraction of centers with density < rho={rho}, tau={tau}"))
    return worst, report


def _check_tau(tau: float, gamma: float) -> None:
    if tau > gamma / 2:
        raise ValueError("tau must not exceed gamma / 2")


def _dirty_sum_norm(S: Dataset, q: np.ndarray, seed: int = 0) -> SumNormEstimate:
    idx = S.dirty_indices()
    return sum_norm(S.X[idx], q[idx], seed=seed)


def pointwise_certificates(points, out: LearnerOutput, S: Dataset, gamma: float, tau: float, eta0: float,
                           rho: float | None = None, dirty_norm: SumNormEstimate | None = None) -> list:
    """Pancake-condition certificate for every point in ``points``.

    A point is certified when its pancake along w_hat holds a clean fraction
    above max(4 eta0, rho) and gamma/4 * (clean pancake weight) exceeds the
    upper bound on the dirty sum norm; a certified point that w_hat
    misclassifies is a violation.
    """
    _check_tau(tau, gamma)
    q = np.asarray(out.q, dtype=float)
    if q.shape[0] != S.n:
        raise ValueError("q does not match the (pruned) dataset")
    dirty_norm = dirty_norm or _dirty_sum_norm(S, q)
    clean = S.clean_indices()
    S_C = S.subset(clean)
    w = out.w_hat.w
    counts, weights = _pancake_weights(points, w, tau, S_C, q[clean])
    density = counts / max(S_C.n, 1)
    lhs = 0.25 * gamma * weights
    rhs = dirty_norm.upper
    dense = density > 4 * eta0
    if rho is not None:
        dense &= density >= rho
    certified = dense & (lhs > rhs)
    V = as_learner_view(points)
    correct = V.y * (V.X @ w) > 0
    entries = []
    for i in range(V.n):
        if certified[i]:
            ok = bool(correct[i])
            detail = "certified, correctly classified" if ok else "VIOLATION: certified point misclassified"
        else:
            ok = True
            detail = "vacuous (condition not met)"
        entries.append(CertificateEntry(
            "pancake_condition", ok, float(lhs[i]), float(rhs),
            f"{detail}; density={density[i]:.4g}, sum_norm in [{dirty_norm.lower:.6g}, {rhs:.6g}]",
            skipped=not certified[i],
        ))
    return entries


def pointwise_certificate(s: LabeledSample, out: LearnerOutput, S: Dataset, gamma: float, tau: float,
                          eta0: float, rho: float | None = None) -> CertificateEntry:
    return pointwise_certificates(Dataset.from_samples([s]), out, S, gamma, tau, eta0, rho)[0]


def gradient_decomposition(out: LearnerOutput, S: Dataset, w_star, s: LabeledSample, gamma: float, tau: float,
                           dirty_norm: SumNormEstimate | None = None) -> CertificateEntry:
    """Check the gradient bounds at v_hat for a point misclassified by w_hat.

    (a) every clean pancake point is strictly active: y_i v_hat . x_i < 1;
    (b) g . w* <= -gamma * (clean pancake weight) + dirty sum norm (upper).
    """
    _check_tau(tau, gamma)
    w_star = w_star.w if isinstance(w_star, Halfspace) else np.asarray(w_star, dtype=float)
    w_hat = out.w_hat.w
    if s.y * float(w_hat @ s.x) > 0:
        return CertificateEntry("gradient_decomposition", True, 0.0, 0.0, "point correctly classified", skipped=True)
    q = np.asarray(out.q, dtype=float)
    dirty_norm = dirty_norm or _dirty_sum_norm(S, q)
    v = out.v_hat
    ref = s.y * float(w_hat @ s.x)
    proj = S.y * (S.X @ w_hat)
    in_p = (~S.dirty) & (np.abs(proj - ref) <= tau)
    margins_v = S.y * (S.X @ v)
    part_a = bool(np.all(margins_v[in_p] < 1.0))

    g = subgradient(v, q, S.learner_view())
    active = margins_v <= 1.0
    contrib = -(q * S.y)[:, None] * S.X * active[:, None]
    split = {
        name: float(contrib[mask].sum(axis=0) @ w_star)
        for name, mask in (("pancake", in_p), ("clean_outside", (~S.dirty) & ~in_p), ("dirty", S.dirty))
    }
    lhs = float(g @ w_star)
    rhs = -gamma * float(q[in_p].sum()) + dirty_norm.upper + GRAD_SLACK
    return CertificateEntry(
        "gradient_decomposition", part_a and lhs <= rhs, lhs, rhs,
        f"active_in_pancake={part_a}; g.w* split: " + ", ".join(f"{k}={v:.6g}" for k, v in split.items()),
    )


def lemma_suite(S_bar: Dataset, out: LearnerOutput, params, centers=None, tau: float | None = None,
                removal=None, seed: int = 0) -> CertificateReport:
    """Aggregate the lemma-level checks for one pipeline run.

    ``S_bar`` is the dataset before pruning (with provenance); ``out`` the
    learner output; ``centers`` are fresh clean points used to measure
    pancake densities.
    """
    from .outlier_removal import verify_feasibility
    from .learner import removal_params

    report = CertificateReport()
    S = S_bar.subset(out.kept_indices)
    q = np.asarray(out.q, dtype=float)
    n = S.n
    xi = params.xi

    pruned_clean = int(np.sum(~S_bar.dirty[out.pruned_indices])) if len(out.pruned_indices) else 0
    report.add(CertificateEntry("pruning_clean_survival", pruned_clean == 0, pruned_clean, 0,
                                f"clean samples pruned out of {int((~S_bar.dirty).sum())}"))

    noise = float(S.dirty.mean()) if n else 0.0
    report.add(CertificateEntry("empirical_noise_rate", noise <= xi, noise, xi, "|S_D| / |S| <= xi"))

    if out.removal is not None:
        rp = removal or removal_params(params, S.d)
        for e in verify_feasibility(S.learner_view(), q, rp, seed=seed + 1):
            e.check_id = f"feasibility_{e.check_id}"
            report.add(e)
        sigma_bar = rp.sigma_bar
    else:
        sigma_bar = params.sigma_bar(S.d)

    dn = _dirty_sum_norm(S, q, seed=seed)
    bound = sigma_bar * math.sqrt(xi) * n
    report.add(CertificateEntry(
        "dirty_sum_norm", dn.lower <= bound + 1e-6 * n, dn.lower, bound + 1e-6 * n,
        f"sum norm of dirty set in [{dn.lower:.6g}, {dn.upper:.6g}] (q^2 variant {dn.upper_sq:.6g}); "
        f"bound sigma_bar sqrt(xi) |S|" + ("" if out.removal is not None else "; vanilla weights, bound not implied"),
        skipped=out.removal is None,
    ))

    if centers is not None and len(centers) and n:
        tau = params.gamma / 2 if tau is None else tau
        clean = S.clean_indices()
        S_C = S.subset(clean)
        if S_C.n:
            counts, weights = _pancake_weights(centers, out.w_hat.w, tau, S_C, q[clean])
            rho_hat = counts / S_C.n
            slack = weights - (rho_hat - 2 * xi) * n
            j = int(np.argmin(slack))
            report.add(CertificateEntry(
                "pancake_weight_lower_bound", bool(np.all(slack >= -1e-9 * n)), float(weights[j]),
                float((rho_hat[j] - 2 * xi) * n),
                f"worst of {len(rho_hat)} centers: clean pancake weight >= (rho_hat - 2 xi)|S|",
                skipped=noise > xi,
            ))
    return report
