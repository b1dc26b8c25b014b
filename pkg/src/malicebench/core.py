"""Shared domain types and elementary evaluations.

Everything here is immutable after construction. Arrays handed out by the
types are read-only views so that downstream code cannot mutate a dataset
in place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

# Tolerances; reassign at module level to override.
UNIT_NORM_TOL = 1e-10
BOX_TOL = 1e-12
SUBGRADIENT_SLACK = 1e-9
RADIUS_SLACK = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def sign(z):
    """Sign with the tie sign(0) = +1."""
    return np.where(np.asarray(z) >= 0, 1, -1)


class Provenance(str, Enum):
    CLEAN = "clean"
    DIRTY = "dirty"


@dataclass(frozen=True)
class LabeledSample:
    x: np.ndarray
    y: int
    provenance: Provenance = Provenance.CLEAN

    def __post_init__(self):
        x = _frozen(np.atleast_1d(self.x))
        if x.ndim != 1:
            raise ValueError("x must be a vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("x has non-finite coordinates")
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", int(self.y))
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @property
    def d(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class LearnerView:
    """A dataset with provenance stripped; the only thing learners see."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = _frozen(self.X)
        y = np.array(self.y, dtype=int, copy=True)
        y.setflags(write=False)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n, d) and y must be (n,)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "LearnerView":
        idx = np.asarray(idx, dtype=int)
        return LearnerView(self.X[idx], self.y[idx])


class Dataset:
    """Ordered labeled samples with simulation-only provenance.

    Stored column-wise (``X``, ``y``, ``dirty``); ``samples`` materializes
    the per-sample view on demand.
    """

    __slots__ = ("X", "y", "dirty", "_samples")

    def __init__(self, X, y, dirty=None, d: int | None = None):
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            if d is None:
                d = X.shape[1] if X.ndim == 2 else 0
            X = X.reshape(0, d)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        n = X.shape[0]
        y = np.asarray(y, dtype=int).reshape(n)
        if not np.all(np.isfinite(X)):
            raise ValueError("X has non-finite coordinates")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be in {-1, +1}")
        dirty = np.zeros(n, dtype=bool) if dirty is None else np.asarray(dirty, dtype=bool).reshape(n)
        self.X = _frozen(X)
        self.y = y.copy()
        self.y.setflags(write=False)
        self.dirty = dirty.copy()
        self.dirty.setflags(write=False)
        self._samples = None

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample], d: int | None = None) -> "Dataset":
        if not samples:
            if d is None:
                raise ValueError("d is required for an empty dataset")
            return cls(np.zeros((0, d)), np.zeros(0, dtype=int), d=d)
        dims = {s.d for s in samples}
        if len(dims) != 1 or (d is not None and dims != {d}):
            raise ValueError("samples have inconsistent dimensions")
        return cls(
            np.stack([s.x for s in samples]),
            [s.y for s in samples],
            [s.provenance is Provenance.DIRTY for s in samples],
        )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    @property
    def samples(self) -> tuple[LabeledSample, ...]:
        if self._samples is None:
            self._samples = tuple(self[i] for i in range(self.n))
        return self._samples

    def __getitem__(self, i: int) -> LabeledSample:
        prov = Provenance.DIRTY if self.dirty[i] else Provenance.CLEAN
        return LabeledSample(self.X[i], int(self.y[i]), prov)

    def __iter__(self) -> Iterator[LabeledSample]:
        return (self[i] for i in range(self.n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.dirty, other.dirty)
        )

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.d}, dirty={int(self.dirty.sum())})"

    def learner_view(self) -> LearnerView:
        return LearnerView(self.X, self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.dirty[idx], d=self.d)

    def clean_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.dirty)

    def dirty_indices(self) -> np.ndarray:
        return np.flatnonzero(self.dirty)

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        d = parts[0].d
        return Dataset(
            np.concatenate([p.X for p in parts]),
            np.concatenate([p.y for p in parts]),
            np.concatenate([p.dirty for p in parts]),
            d=d,
        )


def as_learner_view(S) -> LearnerView:
    """Strip provenance from anything that carries ``X`` and ``y``."""
    if isinstance(S, LearnerView):
        return S
    if isinstance(S, Dataset):
        return S.learner_view()
    if isinstance(S, LabeledSample):
        return LearnerView(S.x[None, :], [S.y])
    raise TypeError(f"cannot build a learner view from {type(S).__name__}")


def as_weights(q, n: int | None = None, tol: float | None = None) -> np.ndarray:
    """Validate a weight vector in [0, 1]^n (up to ``tol``)."""
    tol = BOX_TOL if tol is None else tol
    q = np.asarray(q, dtype=float).reshape(-1)
    if n is not None and q.shape[0] != n:
        raise ValueError(f"weight vector has length {q.shape[0]}, expected {n}")
    if q.size and (q.min() < -tol or q.max() > 1 + tol):
        raise ValueError("weights must lie in [0, 1]")
    return q


@dataclass(frozen=True, eq=False)
class Halfspace:
    """Unit-norm halfspace x -> sign(w . x)."""

    w: np.ndarray

    def __post_init__(self):
        w = _frozen(np.atleast_1d(self.w))
        norm = np.linalg.norm(w)
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"halfspace normal must be unit norm, got {norm!r}")
        object.__setattr__(self, "w", w)

    @classmethod
    def from_vector(cls, v) -> "Halfspace":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(v / norm)

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Halfspace) and np.array_equal(self.w, other.w)

    def __hash__(self) -> int:
        return hash(self.w.tobytes())

    def predict(self, X) -> np.ndarray:
        return sign(np.asarray(X, dtype=float) @ self.w)


@dataclass(frozen=True)
class PancakeSpec:
    w: np.ndarray
    tau: float
    center: LabeledSample

    def __post_init__(self):
        w = self.w.w if isinstance(self.w, Halfspace) else self.w
        w = _frozen(w)
        if abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
            raise ValueError("pancake direction must be unit norm")
        if not self.tau >= 0:
            raise ValueError("tau must be nonnegative")
        if w.shape[0] != self.center.d:
            raise ValueError("dimension mismatch between w and center")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class AlgorithmParams:
    gamma: float
    r: float
    eta0: float
    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not 0 < self.eta0 < 0.5:
            raise ValueError("eta0 must lie in (0, 1/2)")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def xi(self) -> float:
        return 2.0 * self.eta0

    def sigma_bar(self, d: int) -> float:
        return math.sqrt(2.0 * (1.0 / d + self.r**2))

    def prune_radius(self, n: int) -> float:
        return self.r + math.log(9.0 * n / self.delta)


def _check_dim(w: np.ndarray, d: int) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != d:
        raise ValueError(f"dimension mismatch: w has {w.shape[0]} entries, data has {d}")
    return w


def hinge_loss(w, s: LabeledSample) -> float:
    w = _check_dim(w, s.d)
    return max(0.0, 1.0 - s.y * float(w @ s.x))


def _margins(w, S) -> tuple[np.ndarray, LearnerView]:
    V = as_learner_view(S)
    w = _check_dim(w, V.d)
    return V.y * (V.X @ w), V


def weighted_hinge_loss(w, q, S) -> float:
    z, V = _margins(w, S)
    q = as_weights(q, V.n)
    return float(q @ np.maximum(0.0, 1.0 - z))


def subgradient(w, q, S) -> np.ndarray:
    """Subgradient of the weighted hinge loss.

    At a kink (y w.x == 1) the active branch -1 is selected, so
    g = -sum_{i: y_i w.x_i <= 1} q_i y_i x_i.
    """
    z, V = _margins(w, S)
    q = as_weights(q, V.n)
    active = z <= 1.0
    coef = q[active] * V.y[active]
    return -(coef @ V.X[active]) if active.any() else np.zeros(V.d)


def margin(w_star, S: Dataset, clean_only: bool = True) -> float:
    w = w_star.w if isinstance(w_star, Halfspace) else np.asarray(w_star, dtype=float)
    w = _check_dim(w, S.d)
    idx = S.clean_indices() if clean_only else np.arange(S.n)
    if idx.size == 0:
        raise ValueError("empty selection")
    return float(np.min(S.y[idx] * (S.X[idx] @ w)))


def in_pancake(p: PancakeSpec, s: LabeledSample) -> bool:
    if s.d != p.center.d:
        raise ValueError("dimension mismatch")
    ref = p.center.y * float(p.w @ p.center.x)
    return abs(s.y * float(p.w @ s.x) - ref) <= p.tau
