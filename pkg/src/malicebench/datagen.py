"""Clean data distributions: uniform mixtures of log-concave components.

Two families are supported, both with covariance (s^2/d) I:
Gaussian N(mu, (s^2/d) I), and the uniform distribution on a ball whose
radius is chosen to give the same covariance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Dataset, Halfspace, sign

NORM_TOL = 1e-12
MAX_REJECTION = 0.99


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM_BALL = "uniform_ball"


@dataclass(frozen=True)
class Component:
    family: Family
    mu: tuple
    cov_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        if not 0 < self.cov_scale <= 1:
            raise ValueError("cov_scale must lie in (0, 1]")


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple
    r: float
    d: int

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Component) else Component(**c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        if self.d < 1:
            raise ValueError("d must be positive")
        for c in comps:
            if len(c.mu) != self.d:
                raise ValueError("component mean has the wrong dimension")
            if np.linalg.norm(c.mu) > self.r + NORM_TOL:
                raise ValueError(f"component mean norm {np.linalg.norm(c.mu)} exceeds r={self.r}")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mu for c in self.components], dtype=float)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "components": [
                {"family": c.family.value, "mu": list(c.mu), "cov_scale": c.cov_scale}
                for c in self.components
            ],
            "r": self.r,
            "d": self.d,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureSpec":
        spec = cls(tuple(Component(**c) for c in data["components"]), data["r"], data["d"])
        if "k" in data and data["k"] != spec.k:
            raise ValueError("k does not match the number of components")
        return spec


@dataclass(frozen=True)
class SeparableMixtureSpec:
    base: MixtureSpec
    zeta: float
    w_star: Halfspace
    strict: bool = False

    def __post_init__(self):
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        proj = np.abs(self.base.means @ self.w_star.w)
        if np.any(proj < self.zeta - NORM_TOL):
            raise ValueError("some component mean is closer than zeta to the hyperplane")
        if self.strict and not (self.zeta <= self.base.r <= 1.5 * self.zeta):
            raise ValueError("strict mode requires zeta <= r <= 1.5 zeta")

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "zeta": self.zeta,
            "w_star": list(map(float, self.w_star.w)),
            "strict": self.strict,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SeparableMixtureSpec":
        return cls(
            MixtureSpec.from_dict(data["base"]),
            data["zeta"],
            Halfspace(np.array(data["w_star"], dtype=float)),
            data.get("strict", False),
        )


def mixture_from_dict(data: dict):
    if "base" in data:
        return SeparableMixtureSpec.from_dict(data)
    return MixtureSpec.from_dict(data)


def _base(spec) -> MixtureSpec:
    return spec.base if isinstance(spec, SeparableMixtureSpec) else spec


def _draw_x(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    d = spec.d
    comp = rng.integers(spec.k, size=n)
    Z = rng.standard_normal((n, d))
    U = rng.random(n)
    X = np.empty((n, d))
    for j, c in enumerate(spec.components):
        m = comp == j
        if not m.any():
            continue
        if c.family is Family.GAUSSIAN:
            noise = Z[m] * (c.cov_scale / math.sqrt(d))
        else:
            # uniform on a ball of radius a has covariance a^2/(d+2) I
            a = c.cov_scale * math.sqrt((d + 2) / d)
            dirs = Z[m] / np.linalg.norm(Z[m], axis=1, keepdims=True)
            noise = dirs * (a * U[m] ** (1.0 / d))[:, None]
        X[m] = np.asarray(c.mu) + noise
    return X


def sample_mixture(spec, w_star: Halfspace, n: int, seed: int) -> Dataset:
    """Draw ``n`` clean samples labeled by ``w_star`` (ties labeled +1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    spec = _base(spec)
    if w_star.d != spec.d:
        raise ValueError("w_star dimension does not match the mixture")
    rng = np.random.default_rng(seed)
    X = _draw_x(spec, n, rng)
    return Dataset(X, sign(X @ w_star.w))


def enforce_margin(D_raw: Dataset, w_star: Halfspace, gamma: float) -> tuple[Dataset, float]:
    """Keep only samples with y (w* . x) >= gamma.

    Returns the filtered dataset and the fraction rejected.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if D_raw.n == 0:
        raise ValueError("empty dataset")
    keep = D_raw.y * (D_raw.X @ w_star.w) >= gamma
    frac = 1.0 - keep.mean()
    if frac > MAX_REJECTION:
        raise ValueError("margin unreachable for this distribution")
    return D_raw.subset(np.flatnonzero(keep)), float(frac)


class MixtureSampler:
    """Stream of clean samples from a mixture, optionally conditioned on margin.

    The stream is deterministic given ``seed``; successive ``draw`` calls
    continue the same stream.
    """

    def __init__(self, spec, w_star: Halfspace, seed: int, gamma: float | None = None, batch: int = 4096):
        self.spec = _base(spec)
        self.w_star = w_star
        self.gamma = gamma
        self.batch = batch
        self.rng = np.random.default_rng(seed)
        self.drawn = 0
        self.rejected = 0

    def draw(self, m: int) -> Dataset:
        if m == 0:
            return Dataset(np.zeros((0, self.spec.d)), [], d=self.spec.d)
        chunks, have = [], 0
        while have < m:
            size = max(self.batch, m - have) if self.gamma else m - have
            X = _draw_x(self.spec, size, self.rng)
            y = sign(X @ self.w_star.w)
            self.drawn += size
            if self.gamma:
                keep = y * (X @ self.w_star.w) >= self.gamma
                self.rejected += int(size - keep.sum())
                if self.drawn >= 10 * self.batch and self.rejected > MAX_REJECTION * self.drawn:
                    raise ValueError("margin unreachable for this distribution")
                X, y = X[keep], y[keep]
            chunks.append((X, y))
            have += X.shape[0]
        X = np.concatenate([c[0] for c in chunks])[:m]
        y = np.concatenate([c[1] for c in chunks])[:m]
        return Dataset(X, y)

    @property
    def rejection_fraction(self) -> float:
        return self.rejected / self.drawn if self.drawn else 0.0


def orthonormal_complement(w: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """A unit vector orthogonal to ``w``; deterministic when ``rng`` is None."""
    w = np.asarray(w, dtype=float)
    if rng is None:
        # basis vector least aligned with w, then Gram-Schmidt
        v = np.zeros_like(w)
        v[int(np.argmin(np.abs(w)))] = 1.0
    else:
        v = rng.standard_normal(w.shape[0])
    v = v - (v @ w) * w
    return v / np.linalg.norm(v)


def make_separable_spec(
    d: int,
    k: int,
    zeta: float,
    r: float,
    w_star: Halfspace,
    seed: int,
    family: Family = Family.GAUSSIAN,
    cov_scale: float = 1.0,
    strict: bool = True,
) -> SeparableMixtureSpec:
    """Place ``k`` means at signed distance +-zeta from the hyperplane.

    Means alternate sides (j even: positive). Each has a random orthogonal
    offset of length uniform in [0, sqrt(r^2 - zeta^2)], so ||mu_j|| <= r.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if zeta > r:
        raise ValueError("infeasible: zeta exceeds r")
    rng = np.random.default_rng(seed)
    max_orth = math.sqrt(max(r * r - zeta * zeta, 0.0))
    comps = []
    for j in range(k):
        side = 1.0 if j % 2 == 0 else -1.0
        mu = side * zeta * w_star.w
        if max_orth > 0 and d > 1:
            v = orthonormal_complement(w_star.w, rng)
            mu = mu + v * (max_orth * rng.random())
        comps.append(Component(family, mu, cov_scale))
    base = MixtureSpec(tuple(comps), r, d)
    return SeparableMixtureSpec(base, zeta, w_star, strict)
