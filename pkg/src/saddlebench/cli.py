"""Command-line front end.

    saddle-bench run --config cfg.json [--out DIR] [--seed N]
    saddle-bench sweep --config cfg.json --param kappa --values 10,100,1000
    saddle-bench compare --config cfg.json [--solvers sesop,gda]

Exit codes: 0 on success, 1 on configuration errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, SaddleBenchError
from .harness import ExperimentConfig, run_experiment, sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="saddle-bench",
                                     description="saddle-point solver benchmark harness")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every configured solver once per repetition")
    sweep_p = sub.add_parser("sweep", help="re-run the experiment across parameter values")
    cmp_p = sub.add_parser("compare", help="multi-solver run with a printed comparison table")

    for p in (run_p, sweep_p, cmp_p):
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides the config)")
    for p in (run_p, cmp_p):
        p.add_argument("--seed", type=int, default=None,
                       help="problem seed (overrides the config)")
    sweep_p.add_argument("--param", required=True,
                         choices=["kappa", "subspace_dim", "tau"])
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated sweep values")
    cmp_p.add_argument("--solvers", default=None,
                       help="comma-separated subset of configured solver ids")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    if getattr(args, "seed", None) is not None:
        problem = dict(config.problem)
        problem["seed"] = args.seed
        config = config.replace(problem=problem)
    return config


def _print_summaries(summaries) -> None:
    if not summaries:
        return
    header = f"{'solver':<12} {'rep':>3} {'status':<10} {'iters':>7} " \
             f"{'grad_norm':>12} {'dist_opt':>12} {'wall_s':>9} {'oracle v/g/h':>18}"
    print(header)
    for s in summaries:
        dist = f"{s.final_dist_opt:.3e}" if s.final_dist_opt is not None else "-"
        calls = "/".join(str(s.oracle_calls[k]) for k in ("value", "grad", "hvp"))
        print(f"{s.label:<12} {s.repetition:>3} {s.status:<10} {s.iterations:>7} "
              f"{s.final_grad_norm:>12.3e} {dist:>12} {s.wall_seconds:>9.3f} {calls:>18}")


def _parse_values(raw: str, param: str) -> list[float]:
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse sweep values {raw!r}") from exc
    if not values:
        raise ConfigError("sweep needs at least one value")
    if param == "subspace_dim" and any(v != int(v) for v in values):
        raise ConfigError("subspace_dim values must be integers")
    return values


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _load_config(args)
        if args.command == "run":
            summaries = run_experiment(config, out_dir=args.out)
            if not summaries:
                print("warning: empty solver list, nothing to run", file=sys.stderr)
            _print_summaries(summaries)
        elif args.command == "sweep":
            values = _parse_values(args.values, args.param)
            path = sweep(config, args.param, values, out_dir=args.out)
            print(f"wrote {path}")
        elif args.command == "compare":
            if args.solvers is not None:
                wanted = {s.strip() for s in args.solvers.split(",") if s.strip()}
                unknown = wanted - {s["id"] for s in config.solvers}
                if unknown:
                    raise ConfigError(f"solvers not in config: {sorted(unknown)}")
                solvers = [s for s in config.solvers if s["id"] in wanted]
                config = config.replace(solvers=solvers)
            summaries = run_experiment(config, out_dir=args.out)
            if not summaries:
                print("warning: empty solver list, nothing to run", file=sys.stderr)
            _print_summaries(summaries)
    except (ConfigError, SaddleBenchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


def entrypoint() -> None:  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
