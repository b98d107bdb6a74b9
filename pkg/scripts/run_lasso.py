#!/usr/bin/env python3
"""Smoothed-lasso experiment: plain ADMM sweeps versus the boosted solver.

The boosted run injects one ADMM sweep displacement per outer iteration into
the subspace, so iteration counts are directly comparable between the two.
"""

import argparse
from pathlib import Path

from saddlebench.harness import ExperimentConfig, run_experiment

HERE = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/lasso")
    parser.add_argument("--config", default=str(HERE / "configs" / "lasso.json"))
    args = parser.parse_args()

    cfg = ExperimentConfig.from_json(args.config)
    summaries = run_experiment(cfg, out_dir=args.out)
    for s in summaries:
        print(f"{s.label:<16} {s.status:<10} iters={s.iterations:<6} "
              f"grad={s.final_grad_norm:.3e} wall={s.wall_seconds:.2f}s "
              f"oracle v/g/h = {s.oracle_calls['value']}/"
              f"{s.oracle_calls['grad']}/{s.oracle_calls['hvp']}")


if __name__ == "__main__":
    main()
