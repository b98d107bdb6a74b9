#!/usr/bin/env python3
"""Quadratic saddle experiments: solver comparison plus the two sweeps.

Runs the separable and stable desk configurations, then the condition-number
sweep (mean convergence rate against the inverse condition number) and the
subspace-dimension sweep on the separable instance. Pass --bilinear to add
the (slow) bilinear game comparison.
"""

import argparse
from pathlib import Path

from saddlebench.harness import ExperimentConfig, run_experiment, sweep

HERE = Path(__file__).resolve().parent.parent


def show(summaries):
    for s in summaries:
        dist = f"{s.final_dist_opt:.3e}" if s.final_dist_opt is not None else "-"
        print(f"  {s.label:<14} {s.status:<10} iters={s.iterations:<7} "
              f"grad={s.final_grad_norm:.3e} dist={dist} wall={s.wall_seconds:.2f}s")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output root")
    parser.add_argument("--bilinear", action="store_true",
                        help="include the bilinear game (tens of seconds)")
    args = parser.parse_args()
    out = Path(args.out)

    for name in ("separable", "stable"):
        cfg = ExperimentConfig.from_json(HERE / "configs" / f"{name}.json")
        print(f"== {name} quadratic")
        show(run_experiment(cfg, out_dir=out / name))

    sep = ExperimentConfig.from_json(HERE / "configs" / "separable.json")
    solo = sep.replace(solvers=[s for s in sep.solvers if s["id"] == "sesop"])
    print("== condition number sweep (x-axis: inverse condition number)")
    path = sweep(solo, "kappa", [10.0, 100.0, 1000.0], out_dir=out / "kappa_sweep")
    print(path.read_text())
    print("== subspace dimension sweep")
    path = sweep(solo, "subspace_dim", [1, 2, 3, 5],
                 out_dir=out / "dim_sweep")
    print(path.read_text())

    if args.bilinear:
        cfg = ExperimentConfig.from_json(HERE / "configs" / "bilinear.json")
        print("== bilinear game (this one crawls; expect a minute or two)")
        show(run_experiment(cfg, out_dir=out / "bilinear"))


if __name__ == "__main__":
    main()
