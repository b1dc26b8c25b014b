"""Command-line entry point: ``malicebench <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .adversary import AdversarySpec, corrupt
from .core import AlgorithmParams, Halfspace
from .datagen import MixtureSampler, SeparableMixtureSpec, mixture_from_dict
from .diagnostics import lemma_suite, pointwise_certificates, _dirty_sum_norm
from .experiments import ExperimentConfig, report, run_experiment, strict_theorem_n
from .learner import LearnerOutput, OptimizerConfig, learn
from .outlier_removal import InfeasibleError, RemovalParams, soft_outlier_removal, verify_feasibility

log = logging.getLogger("malicebench")


def _config(args) -> dict:
    return io.load_json(args.config) if getattr(args, "config", None) else {}


def _pick(args, cfg: dict, name: str, default=None):
    v = getattr(args, name, None)
    return v if v is not None else cfg.get(name, default)


def _mixture_and_target(cfg: dict):
    mix_doc = cfg.get("mixture", cfg)
    mixture = mixture_from_dict(mix_doc)
    if "w_star" in cfg:
        w_star = Halfspace(np.array(cfg["w_star"], dtype=float))
    elif isinstance(mixture, SeparableMixtureSpec):
        w_star = mixture.w_star
    else:
        raise SystemExit("error: a plain mixture needs a top-level w_star")
    return mixture, w_star


def _params(args, cfg: dict) -> AlgorithmParams:
    p = dict(cfg.get("params", {}))
    for k in ("gamma", "r", "eta0", "epsilon", "delta"):
        if getattr(args, k, None) is not None:
            p[k] = getattr(args, k)
    missing = [k for k in ("gamma", "r", "eta0", "epsilon", "delta") if p.get(k) is None]
    if missing:
        raise SystemExit(f"error: missing parameters: {', '.join(missing)}")
    return AlgorithmParams(**{k: float(p[k]) for k in ("gamma", "r", "eta0", "epsilon", "delta")})


def cmd_generate(args) -> int:
    cfg = _config(args)
    mixture, w_star = _mixture_and_target(cfg)
    n = int(_pick(args, cfg, "n", 1000))
    gamma = _pick(args, cfg, "gamma")
    sampler = MixtureSampler(mixture, w_star, args.seed, gamma=gamma)
    io.write_dataset_csv(sampler.draw(n), args.out)
    if gamma is not None:
        print(f"rejection fraction {sampler.rejection_fraction:.4f}")
    return 0


def cmd_corrupt(args) -> int:
    cfg = _config(args)
    mixture, w_star = _mixture_and_target(cfg)
    adv = AdversarySpec.from_dict(io.load_json(args.adversary) if args.adversary else cfg["adversary"])
    n = int(_pick(args, cfg, "n", 1000))
    p = dict(cfg.get("params", {}))
    p.setdefault("eta0", max(adv.eta, 1 / 8))
    params = _params(args, {"params": p})
    sampler = MixtureSampler(mixture, w_star, args.seed, gamma=cfg.get("gamma", params.gamma))
    S = corrupt(sampler, adv, n, params, args.seed + 1)
    io.write_dataset_csv(S, args.out)
    print(f"wrote {S.n} samples, {len(S.dirty_indices())} dirty")
    return 0


def cmd_reweight(args) -> int:
    cfg = _config(args)
    S = io.read_dataset(args.data)
    p = RemovalParams.from_dict(cfg.get("removal", cfg))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = soft_outlier_removal(S, p, seed=args.seed)
    except InfeasibleError as exc:
        io.dump_json({"status": "infeasible", "message": str(exc), "residual": exc.residual,
                      "iterations": exc.iterations}, out / "reweight.json")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    io.write_vector_csv(res.q, out / "q.csv")
    checks = verify_feasibility(S, res.q, p)
    io.dump_json({
        "status": "feasible",
        "iterations": res.iterations,
        "lambda_max": res.lambda_max,
        "residual": res.residual,
        "lambda_trace": [float(v) for v in res.lambda_trace],
        "checks": [e.to_dict() for e in checks],
        "params": p.to_dict(),
    }, out / "reweight.json")
    print(f"feasible after {res.iterations} iterations, lambda_max={res.lambda_max:.6g}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    data = args.data or cfg.get("data")
    if data is None:
        raise SystemExit("error: --data is required")
    S_bar = io.read_dataset(data)
    params = _params(args, cfg)
    opt = OptimizerConfig.from_dict(cfg.get("optimizer") or {})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        out = learn(S_bar, params, opt, vanilla=args.vanilla, seed=args.seed)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    io.write_vector_csv(out.q, out_dir / "q.csv")
    io.write_vector_csv(out.objective_trace, out_dir / "objective_trace.csv", name="objective")
    doc = out.to_dict()
    doc["q_path"] = "q.csv"
    io.dump_json(doc, out_dir / "learner.json")
    io.dump_json({"params": {"gamma": params.gamma, "r": params.r, "eta0": params.eta0,
                             "epsilon": params.epsilon, "delta": params.delta},
                  "data": str(Path(data).resolve()), "vanilla": args.vanilla, "seed": args.seed},
                 out_dir / "meta.json")
    print(f"status={out.solver_status.value} objective={out.objective:.6g}")
    return 0


def cmd_verify(args) -> int:
    run = Path(args.run_dir)
    meta = io.load_json(run / "meta.json")
    params = AlgorithmParams(**meta["params"])
    data = run / "train.csv" if (run / "train.csv").exists() else Path(meta["data"])
    S_bar = io.read_dataset(data)
    out = LearnerOutput.from_dict(io.load_json(run / "learner.json"))
    test = io.read_dataset(run / "test.csv") if (run / "test.csv").exists() else None
    tau = params.gamma / 2
    rep = lemma_suite(S_bar, out, params, centers=test, tau=tau, seed=args.seed)
    if test is not None:
        S = S_bar.subset(out.kept_indices)
        dn = _dirty_sum_norm(S, np.asarray(out.q), seed=args.seed)
        rep.extend(e for e in pointwise_certificates(test, out, S, params.gamma, tau, params.eta0, dirty_norm=dn)
                   if not e.skipped)
    io.dump_json(rep.to_dict(), run / "certificates.json")
    print(rep.summary_table())
    return 0 if rep.passed else 1


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_dict(_config(args))
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seeds = [args.seed]
    p0 = cfg.algorithm_params(cfg.adversary_grid[0])
    print(f"n_train={cfg.n_train} strict_theorem_n={strict_theorem_n(cfg.d, p0.epsilon, p0.delta)}")
    results = run_experiment(cfg, workers=args.workers)
    failed = sum(r.status not in ("ok", "degenerate") for r in results)
    print(f"{len(results)} runs written to {cfg.output_dir} ({failed} failed)")
    return 0


def cmd_report(args) -> int:
    summary = report(args.results, args.out)
    for rec in summary:
        mv = rec["mean_vanilla"]
        vanilla = "" if mv is None else f"  vanilla {mv:.4f}"
        print(f"eta={rec['eta']:<6g} {rec['strategy']:<14} reweighted {rec['mean_reweighted'] or 0.0:.4f}{vanilla}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="malicebench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(fn=fn)
        return p

    def add_params(p):
        for k in ("gamma", "r", "eta0", "epsilon", "delta"):
            p.add_argument(f"--{k}", type=float)

    p = add("generate", cmd_generate, "sample a clean dataset")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--out", required=True)

    p = add("corrupt", cmd_corrupt, "sample a corrupted dataset")
    p.add_argument("--adversary", help="adversary JSON (else config['adversary'])")
    p.add_argument("--n", type=int)
    add_params(p)
    p.add_argument("--out", required=True)

    p = add("reweight", cmd_reweight, "run soft outlier removal")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "run the learner")
    p.add_argument("--data")
    add_params(p)
    p.add_argument("--vanilla", action="store_true")
    p.add_argument("--out", required=True)

    p = add("verify", cmd_verify, "certify a run directory")
    p.add_argument("run_dir")

    p = add("run", cmd_run, "run an experiment sweep")
    p.set_defaults(seed=None)
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int)

    p = add("report", cmd_report, "summarize results")
    p.add_argument("results")
    p.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
