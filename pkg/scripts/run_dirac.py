#!/usr/bin/env python3
"""Adversarial toy game: first-order saturation versus damped subspace runs.

Starts near the equilibrium (the interesting regime: plain gradient play
spirals away from it), compares the baselines against the damped solver, and
sweeps the damping weight to show how it decides between the equilibrium and
the saturation region.
"""

import argparse
from pathlib import Path

from saddlebench.harness import ExperimentConfig, run_experiment, sweep

HERE = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/dirac")
    args = parser.parse_args()
    out = Path(args.out)

    cfg = ExperimentConfig.from_json(HERE / "configs" / "dirac.json")
    print("== solver comparison (started one unit away from the equilibrium)")
    for s in run_experiment(cfg, out_dir=out / "compare"):
        dist = f"{s.final_dist_opt:.3e}" if s.final_dist_opt is not None else "-"
        print(f"  {s.label:<8} {s.status:<10} iters={s.iterations:<6} "
              f"grad={s.final_grad_norm:.3e} dist={dist}")

    print("== damping weight sweep (distance column separates the outcomes)")
    solo = cfg.replace(solvers=[s for s in cfg.solvers if s["id"] == "sesop"])
    path = sweep(solo, "tau", [0.0, 0.1, 1.0], out_dir=out / "tau_sweep")
    print(path.read_text())
    for tau in (0.0, 0.1, 1.0):
        summary_dir = out / "tau_sweep" / f"tau_{tau:g}"
        print(f"  tau={tau}: summary in {summary_dir}/summary.json")


if __name__ == "__main__":
    main()
