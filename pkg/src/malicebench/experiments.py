"""Seeded experiment sweeps, result persistence, and summary tables.

Per-run randomness is derived from the run seed alone through
:func:`derive_seed`, so rows are reproducible from (config, seed) and
parallel execution matches serial execution exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import statistics
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adversary import AdversarySpec, corrupt
from .core import AlgorithmParams, Halfspace
from .datagen import MixtureSampler, SeparableMixtureSpec, mixture_from_dict
from .diagnostics import gradient_decomposition, lemma_suite, pointwise_certificates, _dirty_sum_norm
from .io import json_default
from .learner import OptimizerConfig, error_rate, learn
from .outlier_removal import InfeasibleError

log = logging.getLogger(__name__)

RESULT_COLUMNS = ["config_hash", "seed", "eta", "strategy", "gamma", "d", "n", "err_reweighted",
                  "err_vanilla", "status", "wall_time_s"]
STREAMS = {"train": 0, "corrupt": 1, "test": 2, "removal": 3, "diagnostics": 4}
PAPER_NOISE_BOUND = 2.0**-32
MAX_GRADIENT_CHECKS = 200


def derive_seed(seed: int, stream: str) -> int:
    """Counter-based split: one independent 64-bit seed per (run seed, stream)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAMS[stream],))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def strict_theorem_n(d: int, epsilon: float, delta: float) -> int:
    return 2**17 * d * math.ceil(math.log(8 * d / (epsilon * delta)) ** 4)


def default_eta0(eta: float) -> float:
    return max(eta, 1 / 8)


@dataclass
class ExperimentConfig:
    mixture: object
    w_star: Halfspace
    adversary_grid: list
    params: dict
    n_train: int
    n_test: int
    seeds: list
    vanilla_hinge: bool = True
    output_dir: str = "results"
    enforce_margin: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    diagnostics: bool = True
    record_timing: bool = True
    certificate_tau: float | None = None

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be positive")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not self.adversary_grid:
            raise ValueError("adversary_grid must be non-empty")
        # validate epsilon/delta and the rest through a representative instance
        self.algorithm_params(self.adversary_grid[0])

    @property
    def d(self) -> int:
        base = self.mixture.base if isinstance(self.mixture, SeparableMixtureSpec) else self.mixture
        return base.d

    def algorithm_params(self, adv: AdversarySpec) -> AlgorithmParams:
        p = dict(self.params)
        if p.get("eta0") is None:
            p["eta0"] = default_eta0(adv.eta)
        return AlgorithmParams(**p)

    def to_dict(self) -> dict:
        return {
            "mixture": self.mixture.to_dict(),
            "w_star": [float(v) for v in self.w_star.w],
            "adversary_grid": [a.to_dict() for a in self.adversary_grid],
            "params": dict(self.params),
            "n_train": self.n_train,
            "n_test": self.n_test,
            "seeds": list(self.seeds),
            "baselines": {"vanilla_hinge": self.vanilla_hinge},
            "output_dir": self.output_dir,
            "enforce_margin": self.enforce_margin,
            "optimizer": self.optimizer.to_dict(),
            "diagnostics": self.diagnostics,
            "record_timing": self.record_timing,
            "certificate_tau": self.certificate_tau,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        mixture = mixture_from_dict(data["mixture"])
        if "w_star" in data:
            w_star = Halfspace(np.array(data["w_star"], dtype=float))
        elif isinstance(mixture, SeparableMixtureSpec):
            w_star = mixture.w_star
        else:
            raise ValueError("w_star is required for a plain mixture")
        return cls(
            mixture=mixture,
            w_star=w_star,
            adversary_grid=[AdversarySpec.from_dict(a) for a in data["adversary_grid"]],
            params=dict(data["params"]),
            n_train=int(data["n_train"]),
            n_test=int(data["n_test"]),
            seeds=[int(s) for s in data["seeds"]],
            vanilla_hinge=data.get("baselines", {}).get("vanilla_hinge", True),
            output_dir=data.get("output_dir", "results"),
            enforce_margin=data.get("enforce_margin", True),
            optimizer=OptimizerConfig.from_dict(data.get("optimizer") or {}),
            diagnostics=data.get("diagnostics", True),
            record_timing=data.get("record_timing", True),
            certificate_tau=data.get("certificate_tau"),
        )

    def config_hash(self) -> str:
        body = self.to_dict()
        body.pop("output_dir")
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class RunResult:
    config_hash: str
    seed: int
    eta: float
    strategy: str
    gamma: float
    d: int
    n: int
    err_reweighted: float | None
    err_vanilla: float | None
    status: str
    wall_time: float | None
    certificates: dict = field(default_factory=dict)

    def row(self) -> dict:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "eta": repr(float(self.eta)),
            "strategy": self.strategy,
            "gamma": repr(float(self.gamma)),
            "d": self.d,
            "n": self.n,
            "err_reweighted": fmt(self.err_reweighted),
            "err_vanilla": fmt(self.err_vanilla),
            "status": self.status,
            "wall_time_s": fmt(self.wall_time),
        }


def _run_diagnostics(cfg: ExperimentConfig, S_bar, test, out, params: AlgorithmParams, seed: int) -> dict:
    S = S_bar.subset(out.kept_indices)
    tau = params.gamma / 2 if cfg.certificate_tau is None else cfg.certificate_tau
    dn = _dirty_sum_norm(S, np.asarray(out.q), seed=seed)
    suite = lemma_suite(S_bar, out, params, centers=test, tau=tau, seed=seed)
    cert = pointwise_certificates(test, out, S, params.gamma, tau, params.eta0, dirty_norm=dn)
    certified = sum(1 for e in cert if not e.skipped)
    violations = sum(1 for e in cert if not e.skipped and not e.passed)
    wrong = np.flatnonzero(test.y * (test.X @ out.w_hat.w) <= 0)[:MAX_GRADIENT_CHECKS]
    grad_fail = 0
    for i in wrong:
        e = gradient_decomposition(out, S, cfg.w_star, test[int(i)], params.gamma, tau, dirty_norm=dn)
        grad_fail += int(not e.skipped and not e.passed)
    return {
        "lemma_suite": suite.to_dict(),
        "pointwise": {"evaluated": len(cert), "certified": certified, "violations": violations},
        "gradient": {"checked": int(len(wrong)), "failures": grad_fail},
        "dirty_sum_norm": {"lower": dn.lower, "upper": dn.upper, "upper_q_squared": dn.upper_sq},
    }


def run_single(cfg: ExperimentConfig, adv: AdversarySpec, seed: int) -> RunResult:
    start = time.perf_counter()
    params = cfg.algorithm_params(adv)
    gamma = params.gamma if cfg.enforce_margin else None
    sampler = MixtureSampler(cfg.mixture, cfg.w_star, derive_seed(seed, "train"), gamma=gamma)
    S_bar = corrupt(sampler, adv, cfg.n_train, params, derive_seed(seed, "corrupt"))
    test = MixtureSampler(cfg.mixture, cfg.w_star, derive_seed(seed, "test"), gamma=gamma).draw(cfg.n_test)

    err_r = err_v = None
    status = "ok"
    certs: dict = {}
    try:
        out = learn(S_bar, params, cfg.optimizer, seed=derive_seed(seed, "removal") % 2**32)
        err_r = error_rate(out.w_hat, test)
        if out.degenerate:
            status = "degenerate"
        if cfg.diagnostics:
            certs = _run_diagnostics(cfg, S_bar, test, out, params, derive_seed(seed, "diagnostics") % 2**32)
        certs["removal"] = {"iterations": out.removal.iterations, "lambda_max": out.removal.lambda_max,
                            "sigma_bar_sq": params.sigma_bar(cfg.d) ** 2}
    except InfeasibleError as exc:
        status = "infeasible"
        certs = {"error": str(exc), "residual": exc.residual}
    except ValueError as exc:
        status = "error"
        certs = {"error": str(exc)}
    if cfg.vanilla_hinge:
        try:
            err_v = error_rate(learn(S_bar, params, cfg.optimizer, vanilla=True).w_hat, test)
        except ValueError as exc:
            certs["vanilla_error"] = str(exc)
    wall = time.perf_counter() - start if cfg.record_timing else None
    return RunResult(cfg.config_hash(), seed, adv.eta, adv.strategy.value, params.gamma, cfg.d, cfg.n_train,
                     err_r, err_v, status, wall, certs)


def _task(args):
    cfg_dict, adv_index, seed = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return run_single(cfg, cfg.adversary_grid[adv_index], seed)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MALICEBENCH_WORKERS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, write: bool = True) -> list:
    """Run every (adversary, seed) pair; failed runs become rows with a status."""
    tasks = [(cfg.to_dict(), a, s) for a in range(len(cfg.adversary_grid)) for s in cfg.seeds]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    if write:
        write_results(cfg, results)
    return results


def write_results(cfg: ExperimentConfig, results: list) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in results:
            writer.writerow(r.row())
    certs = [{"config_hash": r.config_hash, "seed": r.seed, "eta": r.eta, "strategy": r.strategy,
              "status": r.status, "certificates": r.certificates} for r in results]
    with open(out / "certificates.json", "w") as fh:
        json.dump(certs, fh, indent=2, sort_keys=True, default=json_default)
        fh.write("\n")
    p0 = cfg.algorithm_params(cfg.adversary_grid[0])
    meta = {
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "n_train": cfg.n_train,
        "strict_theorem_n": strict_theorem_n(cfg.d, p0.epsilon, p0.delta),
        "paper_noise_bound": PAPER_NOISE_BOUND,
        "eta_grid": [a.eta for a in cfg.adversary_grid],
    }
    with open(out / "run_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _read_results(path) -> list:
    path = Path(path)
    if path.is_dir():
        path = path / "results.csv"
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no results")
    return rows


def _stats(values: list) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def report(results_path, out_dir=None) -> list:
    """Per-(eta, strategy) error tables plus gnuplot data files.

    Returns the summary rows. Rows with a missing error (failed runs) are
    counted but excluded from the means.
    """
    rows = _read_results(results_path)
    out_dir = Path(out_dir) if out_dir is not None else Path(results_path if Path(results_path).is_dir()
                                                              else Path(results_path).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = defaultdict(list)
    for row in rows:
        groups[(float(row["eta"]), row["strategy"])].append(row)

    summary = []
    for (eta, strategy), grp in sorted(groups.items()):
        rec = {"eta": eta, "strategy": strategy, "runs": len(grp),
               "failed": sum(1 for r in grp if r["status"] not in ("ok", "degenerate"))}
        for method in ("reweighted", "vanilla"):
            vals = [float(r[f"err_{method}"]) for r in grp if r.get(f"err_{method}", "") != ""]
            if vals:
                rec[f"mean_{method}"], rec[f"std_{method}"] = _stats(vals)
            else:
                rec[f"mean_{method}"] = rec[f"std_{method}"] = None
        summary.append(rec)

    cols = ["eta", "strategy", "runs", "failed", "mean_reweighted", "std_reweighted", "mean_vanilla", "std_vanilla"]
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for rec in summary:
            writer.writerow({k: ("" if rec[k] is None else rec[k]) for k in cols})

    for strategy in sorted({rec["strategy"] for rec in summary}):
        recs = [r for r in summary if r["strategy"] == strategy]
        blocks = []
        for method in ("reweighted", "vanilla"):
            pts = [(r["eta"], r[f"mean_{method}"], r[f"std_{method}"]) for r in recs if r[f"mean_{method}"] is not None]
            if not pts:
                continue
            lines = [f"# method: {method}", "# eta mean_error std_error"]
            lines += [f"{e!r} {m!r} {s!r}" for e, m, s in pts]
            blocks.append("\n".join(lines))
        with open(out_dir / f"plot_{strategy}.dat", "w") as fh:
            fh.write("\n\n\n".join(blocks) + "\n")
    return summary
