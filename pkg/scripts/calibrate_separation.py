"""Pilot run for the separation benchmark; writes configs/separation_calibration.json.

Runs the benchmark configuration on three pilot seeds (disjoint from the
evaluation seeds) and derives thresholds from the observed gap: the
required improvement is capped at half the pilot gap and the error ceiling
at the pilot mean plus 0.05, each never looser than the nominal values.
"""
from __future__ import annotations

import json
import statistics
import sys
from pathlib import Path

from malicebench import ExperimentConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]
PILOT_SEEDS = [100, 101, 102]
NOMINAL_GAP, NOMINAL_CEILING = 0.05, 0.10


def main() -> int:
    doc = json.loads((ROOT / "configs" / "separation.json").read_text())
    doc["seeds"] = PILOT_SEEDS
    cfg = ExperimentConfig.from_dict(doc)
    results = run_experiment(cfg, write=False)
    pilot = {}
    for strategy in sorted({r.strategy for r in results}):
        rows = [r for r in results if r.strategy == strategy]
        pilot[strategy] = {
            "err_reweighted": [r.err_reweighted for r in rows],
            "err_vanilla": [r.err_vanilla for r in rows],
            "mean_reweighted": statistics.fmean(r.err_reweighted for r in rows),
            "mean_vanilla": statistics.fmean(r.err_vanilla for r in rows),
            "lambda_max_at_start": [r.certificates["removal"]["lambda_max"] for r in rows],
            "removal_iterations": [r.certificates["removal"]["iterations"] for r in rows],
        }
    aligned = pilot["aligned"]
    gap = aligned["mean_vanilla"] - aligned["mean_reweighted"]
    out = {
        "pilot_seeds": PILOT_SEEDS,
        "pilot": pilot,
        "pilot_gap_aligned": gap,
        "nominal": {"min_gap": NOMINAL_GAP, "max_err_reweighted": NOMINAL_CEILING},
        "calibrated": {
            "min_gap": min(NOMINAL_GAP, gap / 2) if gap > 0 else NOMINAL_GAP,
            "max_err_reweighted": max(min(NOMINAL_CEILING, aligned["mean_reweighted"] + 0.05), 0.0),
        },
    }
    path = ROOT / "configs" / "separation_calibration.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
