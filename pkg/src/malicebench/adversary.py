"""Malicious-noise oracle with oblivious dirty-sample strategies."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import AlgorithmParams, Dataset, UNIT_NORM_TOL, sign
from .datagen import orthonormal_complement


class Strategy(str, Enum):
    ALIGNED = "aligned"
    CLEAN_MIMIC = "clean_mimic"
    BOUNDARY_FLIP = "boundary_flip"
    LARGE_NORM = "large_norm"


@dataclass(frozen=True)
class AdversarySpec:
    """Noise rate plus a dirty-sample strategy.

    ``direction`` and ``magnitude`` default (when None) to the strategy's
    built-in choices; ``against_target`` sets the direction to -w*.
    ``flip_label`` negates whatever label the strategy would emit.
    """

    eta: float
    strategy: Strategy
    direction: tuple | None = None
    magnitude: float | None = None
    flip_label: bool = False
    against_target: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not 0 <= self.eta < 0.5:
            raise ValueError("eta must lie in [0, 1/2)")
        if self.direction is not None:
            u = np.asarray(self.direction, dtype=float)
            if abs(np.linalg.norm(u) - 1.0) > UNIT_NORM_TOL:
                raise ValueError("direction must be a unit vector")
            object.__setattr__(self, "direction", tuple(float(v) for v in u))
        if self.magnitude is not None and not self.magnitude > 0:
            raise ValueError("magnitude must be positive")

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "strategy": self.strategy.value,
            "strategy_params": {
                "direction": list(self.direction) if self.direction is not None else None,
                "magnitude": self.magnitude,
                "flip_label": self.flip_label,
                "against_target": self.against_target,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdversarySpec":
        p = data.get("strategy_params", {}) or {}
        return cls(
            data["eta"],
            Strategy(data["strategy"]),
            tuple(p["direction"]) if p.get("direction") is not None else None,
            p.get("magnitude"),
            p.get("flip_label", False),
            p.get("against_target", False),
        )


def attack_direction(spec: AdversarySpec, w_star: np.ndarray) -> np.ndarray:
    if spec.direction is not None:
        return np.asarray(spec.direction, dtype=float)
    if spec.against_target:
        return -np.asarray(w_star, dtype=float)
    return orthonormal_complement(w_star)


def attack_magnitude(spec: AdversarySpec, n: int, params: AlgorithmParams) -> float:
    if spec.magnitude is not None:
        return float(spec.magnitude)
    radius = params.prune_radius(n)
    if spec.strategy is Strategy.LARGE_NORM:
        return 10.0 * radius
    return radius - 0.01


def corrupt(D_clean_sampler, spec: AdversarySpec, n: int, params: AlgorithmParams, seed: int) -> Dataset:
    """Draw ``n`` samples from EX(D, w*, eta).

    Each draw is independently dirty with probability eta. Clean draws come
    from ``D_clean_sampler`` (anything with ``draw(m) -> Dataset`` and a
    ``w_star`` attribute) in order.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    strategy = Strategy(spec.strategy)
    w_star = D_clean_sampler.w_star.w
    rng = np.random.default_rng(seed)
    dirty = rng.random(n) < spec.eta
    m = int(dirty.sum())

    clean = D_clean_sampler.draw(n - m)
    d = clean.d
    X = np.empty((n, d))
    y = np.empty(n, dtype=int)
    X[~dirty] = clean.X
    y[~dirty] = clean.y

    if m:
        if strategy in (Strategy.ALIGNED, Strategy.LARGE_NORM):
            u = attack_direction(spec, w_star)
            R = attack_magnitude(spec, n, params)
            proj = float(u @ w_star)
            label = -int(sign(proj)) if proj != 0 else 1
            Xd = np.tile(R * u, (m, 1))
            yd = np.full(m, label)
        elif strategy is Strategy.CLEAN_MIMIC:
            extra = D_clean_sampler.draw(m)
            Xd, yd = extra.X, extra.y
        elif strategy is Strategy.BOUNDARY_FLIP:
            extra = D_clean_sampler.draw(m)
            Xd, yd = extra.X, -sign(extra.X @ w_star)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        if spec.flip_label:
            yd = -yd
        X[dirty] = Xd
        y[dirty] = yd
    return Dataset(X, y, dirty)


def empirical_noise_rate(S: Dataset) -> float:
    if S.n == 0:
        raise ValueError("empty dataset")
    return float(S.dirty.mean())
