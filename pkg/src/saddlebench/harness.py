"""Experiment harness: configs, seeded runs, metrics, sweeps, trace output.

A configuration couples one problem instance (kind + parameters + seed)
with a list of solver specifications. Every solver in a run sees the same
problem instance and the same starting point per repetition, through a
counting oracle wrapper so oracle workloads are directly comparable.

Trace CSV bodies are deterministic for a fixed config and seed; wall-clock
timings are reported in the JSON summary only.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import admm as admm_mod
from .baselines import FirstOrderConfig, egda_run, gda_run, ogda_run
from .errors import ConfigError, UndefinedMetricError
from .linesearch import LineSearchParams
from .problems import (CountingOracle, PrimalDualPoint, SaddleOracle,
                       make_dirac, make_quadratic, make_smooth_lasso,
                       quadratic_solution, save_matrix)
from .sesop import SesopConfig, sesop_run
from .trace import CONVERGED, TraceRecord, write_trace_csv

log = logging.getLogger(__name__)

SOLVER_IDS = ("sesop", "gda", "ogda", "egda", "admm")
PROBLEM_KINDS = ("quadratic", "dirac", "lasso")
SWEEP_PARAMS = ("kappa", "subspace_dim", "tau")

THREADS_ENV = "SADDLE_BENCH_THREADS"

SWEEP_HEADER = "param,value,plot_x,solver,mean_conv_rate,iters_to_tol,wall_s"


@dataclass
class ExperimentConfig:
    """One problem, several solvers, an output directory, repetitions.

    ``init_radius``, when set, places every starting point on a sphere of
    that radius around the known solution (requires a problem with a
    closed-form solution); by default starts are standard normal.
    """

    problem: dict
    solvers: list[dict] = field(default_factory=list)
    out_dir: str = "results"
    repetitions: int = 1
    target_grad_norm: float = 1e-6
    dump_matrices: bool = False
    init_radius: float | None = None

    def __post_init__(self):
        if not isinstance(self.problem, dict) or "kind" not in self.problem:
            raise ConfigError("problem spec must be a mapping with a 'kind'")
        if self.problem["kind"] not in PROBLEM_KINDS:
            raise ConfigError(f"unknown problem kind {self.problem['kind']!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.init_radius is not None and self.init_radius <= 0:
            raise ConfigError("init_radius must be positive")
        for spec in self.solvers:
            if not isinstance(spec, dict) or spec.get("id") not in SOLVER_IDS:
                raise ConfigError(f"unknown solver spec {spec!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        data = self.to_dict()
        data.update(changes)
        return ExperimentConfig.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"problem", "solvers", "out_dir", "repetitions",
                 "target_grad_norm", "dump_matrices", "init_radius"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config root must be an object")
        return cls.from_dict(data)


@dataclass
class RunSummary:
    solver: str
    label: str
    repetition: int
    status: str
    converged: bool
    iterations: int
    final_grad_norm: float
    final_dist_opt: float | None
    iters_to_tol: int | None
    mean_conv_rate: float | None
    wall_seconds: float
    oracle_calls: dict[str, int]

    def to_dict(self) -> dict:
        return asdict(self)


def mean_convergence_rate(distances, K: int) -> float:
    """Arithmetic mean of consecutive distance ratios over the first K steps.

    The sequence is truncated at the first (numerically) zero distance.
    Traces shorter than two finite entries have no defined rate.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    d = np.asarray(list(distances), dtype=float)
    if d.size < 2:
        raise UndefinedMetricError("need at least two distances")
    floor = 1e-15 * max(d[0], 1.0)
    cut = d.size
    for i, v in enumerate(d):
        if v <= floor:
            cut = i
            break
    d = d[:cut]
    n = min(K, d.size - 1)
    if n < 1:
        raise UndefinedMetricError("no usable consecutive distance pairs")
    return float(np.mean(d[1:n + 1] / d[:n]))


def build_problem(spec: dict):
    """Instantiate a problem spec; returns (oracle, z_star or None)."""
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    seed = int(params.pop("seed", 0))
    try:
        if kind == "quadratic":
            problem = make_quadratic(
                M=int(params.pop("m")), N=int(params.pop("n")),
                kappa_x=params.pop("kappa_x", None),
                kappa_y=params.pop("kappa_y", None),
                kappa_c=params.pop("kappa_c", None),
                bilinear=bool(params.pop("bilinear", False)), seed=seed)
            z_star = quadratic_solution(problem)
        elif kind == "dirac":
            problem = make_dirac(int(params.pop("n")), seed=seed)
            z_star = PrimalDualPoint(problem.c_data.copy(),
                                     np.zeros_like(problem.c_data))
        elif kind == "lasso":
            problem = make_smooth_lasso(
                m_rows=int(params.pop("m_rows", 150)),
                n_feat=int(params.pop("n_feat", 500)),
                s=float(params.pop("s", 1e-3)),
                rho=float(params.pop("rho", 1.0)),
                lam=params.pop("lam", None), seed=seed)
            z_star = None
        else:  # pragma: no cover - guarded by ExperimentConfig
            raise ConfigError(f"unknown problem kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"problem spec is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if params:
        raise ConfigError(f"unknown problem parameters: {sorted(params)}")
    return problem, z_star


def default_tau0(problem_spec: dict) -> float:
    """Zero damping where the curvature blocks are already definite."""
    if problem_spec["kind"] == "quadratic" and not problem_spec.get("bilinear", False):
        return 0.0
    return 1.0


def _ls_params(spec: dict) -> LineSearchParams:
    ls = spec.get("ls", {})
    return LineSearchParams(c=float(ls.get("c", 0.0)), nu=float(ls.get("nu", 0.5)),
                            eta0=float(ls.get("eta0", 1.0)),
                            max_trials=int(ls.get("max_trials", 30)))


def _initial_point(problem: SaddleOracle, seed: int, repetition: int,
                   z_star=None, radius: float | None = None) -> np.ndarray:
    rng = np.random.default_rng((int(seed) << 8) + repetition + 1)
    draw = rng.standard_normal(problem.size)
    if radius is None:
        return draw
    if z_star is None:
        raise ConfigError("init_radius needs a problem with a known solution")
    return z_star.z + radius * draw / np.linalg.norm(draw)


def _admm_trace_to_records(records) -> list[TraceRecord]:
    return [TraceRecord(r.iteration, r.grad_norm, None, r.value, 0.0, 0.0, 0, 0,
                        r.elapsed_s) for r in records]


def run_single(spec: dict, problem: SaddleOracle, problem_spec: dict,
               z0: np.ndarray, z_star):
    """Run one solver spec; returns (trace records, status, counting oracle)."""
    sid = spec["id"]
    oracle = CountingOracle(problem)
    eps = float(spec.get("eps", 1e-8))
    if sid == "sesop":
        cfg = SesopConfig(
            d=int(spec.get("d", 3)),
            max_iters=int(spec.get("max_iters", 1000)),
            eps=eps,
            tau0=float(spec["tau0"]) if "tau0" in spec and spec["tau0"] is not None
            else default_tau0(problem_spec),
            tau_shrink=float(spec.get("tau_shrink", 0.5)),
            shrink_trigger=spec.get("shrink_trigger"),
            ls=_ls_params(spec), max_inner=int(spec.get("max_inner", 10)))
        hook = None
        if spec.get("boost", False):
            if problem_spec["kind"] != "lasso":
                raise ConfigError("the 'boost' flag requires the lasso problem")
            hook = admm_mod.make_boost_hook(problem,
                                            int(spec.get("boost_every_k", 1)))
        zs = z_star.z if z_star is not None else None
        _, records, status = sesop_run(oracle, z0, cfg, z_star=zs,
                                       direction_hook=hook)
        return records, status, oracle
    if sid in ("gda", "ogda", "egda"):
        cfg = FirstOrderConfig(max_iters=int(spec.get("max_iters", 5000)),
                               eps=eps, ls=_ls_params(spec),
                               fixed_eta=spec.get("fixed_eta"))
        runner = {"gda": gda_run, "ogda": ogda_run, "egda": egda_run}[sid]
        zs = z_star.z if z_star is not None else None
        _, records, status = runner(oracle, z0, cfg, z_star=zs)
        return records, status, oracle
    if sid == "admm":
        if problem_spec["kind"] != "lasso":
            raise ConfigError("the admm solver requires the lasso problem")
        n = problem.n_feat
        _, raw = admm_mod.admm_run(problem, int(spec.get("max_iters", 2000)),
                                   x0=z0[:n], w0=z0[n:2 * n], y0=z0[2 * n:],
                                   eps=eps, trace_oracle=oracle)
        records = _admm_trace_to_records(raw)
        status = CONVERGED if records[-1].grad_norm < eps else "max_iters"
        return records, status, oracle
    raise ConfigError(f"unknown solver id {sid!r}")  # pragma: no cover


def _solver_labels(solvers: list[dict]) -> list[str]:
    labels = []
    seen: dict[str, int] = {}
    for spec in solvers:
        label = str(spec.get("label", spec["id"]))
        if label in seen:
            seen[label] += 1
            label = f"{label}{seen[label]}"
        else:
            seen[label] = 0
        labels.append(label)
    return labels


def _iters_to_tol(records: list[TraceRecord], tol: float) -> int | None:
    for r in records:
        if r.grad_norm <= tol:
            return r.iteration
    return None


def _safe_rate(records: list[TraceRecord]) -> float | None:
    dists = [r.dist_opt for r in records if r.dist_opt is not None]
    if len(dists) < 2:
        return None
    try:
        return mean_convergence_rate(dists, K=len(dists) - 1)
    except UndefinedMetricError:
        return None


def _dump_problem_matrices(problem, out: Path) -> None:
    if hasattr(problem, "A_x"):
        save_matrix(out / "A_x.mat", problem.A_x)
        save_matrix(out / "A_y.mat", problem.A_y)
        save_matrix(out / "C.mat", problem.C)
    elif hasattr(problem, "A"):
        save_matrix(out / "A.mat", problem.A)
    elif hasattr(problem, "c_data"):
        save_matrix(out / "c_data.mat", problem.c_data.reshape(1, -1))


def run_experiment(config: ExperimentConfig, out_dir=None) -> list[RunSummary]:
    """Execute every (solver, repetition) cell on the shared instance.

    Writes one trace CSV per cell plus a ``summary.json``; returns the run
    summaries in (repetition, solver) order. Deterministic given the
    problem seed: starting points depend only on (seed, repetition).
    """
    out = Path(out_dir if out_dir is not None else config.out_dir)
    if not config.solvers:
        log.warning("no solvers configured; nothing to run")
        return []
    out.mkdir(parents=True, exist_ok=True)
    problem, z_star = build_problem(config.problem)
    if config.dump_matrices:
        _dump_problem_matrices(problem, out)
    seed = int(config.problem.get("seed", 0))
    labels = _solver_labels(config.solvers)

    cells = []
    for rep in range(config.repetitions):
        z0 = _initial_point(problem, seed, rep, z_star, config.init_radius)
        for spec, label in zip(config.solvers, labels):
            cells.append((spec, label, rep, z0))

    def execute(cell):
        spec, label, rep, z0 = cell
        tic = time.perf_counter()
        records, status, oracle = run_single(spec, problem, config.problem,
                                             z0, z_star)
        wall = time.perf_counter() - tic
        write_trace_csv(out / f"{label}_rep{rep}.csv", records)
        final = records[-1] if records else None
        return RunSummary(
            solver=spec["id"], label=label, repetition=rep, status=status,
            converged=status == CONVERGED,
            iterations=final.iteration if final else 0,
            final_grad_norm=final.grad_norm if final else float("nan"),
            final_dist_opt=final.dist_opt if final else None,
            iters_to_tol=_iters_to_tol(records, config.target_grad_norm),
            mean_conv_rate=_safe_rate(records),
            wall_seconds=wall, oracle_calls=oracle.counts)

    workers = max(1, int(os.environ.get(THREADS_ENV, "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(execute, cells))
    else:
        summaries = [execute(cell) for cell in cells]

    payload = {
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": config.to_dict(),
        "runs": [s.to_dict() for s in summaries],
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    return summaries


def _apply_sweep_value(config: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    problem = dict(config.problem)
    solvers = [dict(s) for s in config.solvers]
    if param == "kappa":
        if problem["kind"] != "quadratic":
            raise ConfigError("kappa sweeps require a quadratic problem")
        if problem.get("bilinear", False):
            problem["kappa_c"] = float(value)
        else:
            problem["kappa_x"] = float(value)
            problem["kappa_y"] = float(value)
            if problem.get("kappa_c") is not None:
                problem["kappa_c"] = float(value)
    elif param == "subspace_dim":
        targets = [s for s in solvers if s["id"] == "sesop"]
        if not targets:
            raise ConfigError("subspace_dim sweeps require a sesop solver")
        for s in targets:
            s["d"] = int(value)
    elif param == "tau":
        targets = [s for s in solvers if s["id"] == "sesop"]
        if not targets:
            raise ConfigError("tau sweeps require a sesop solver")
        for s in targets:
            s["tau0"] = float(value)
    else:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    return config.replace(problem=problem, solvers=solvers)


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep(config: ExperimentConfig, param: str, values, out_dir=None) -> Path:
    """Re-run the experiment across parameter values; aggregate one CSV.

    Each value gets its own subdirectory of trace files. The aggregated
    table has one row per (value, solver): the mean convergence rate and
    iterations-to-tolerance averaged over repetitions. For condition-number
    sweeps ``plot_x`` is the inverse condition number; otherwise it repeats
    the value.
    """
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        cell_cfg = _apply_sweep_value(config, param, value)
        tag = f"{value:g}" if isinstance(value, float) else str(value)
        summaries = run_experiment(cell_cfg, out_dir=out / f"{param}_{tag}")
        by_label: dict[str, list[RunSummary]] = {}
        for s in summaries:
            by_label.setdefault(s.label, []).append(s)
        plot_x = 1.0 / float(value) if param == "kappa" else float(value)
        for label, runs in by_label.items():
            rates = [r.mean_conv_rate for r in runs if r.mean_conv_rate is not None]
            iters = [r.iters_to_tol if r.iters_to_tol is not None else r.iterations
                     for r in runs]
            rows.append(",".join([
                param, _fmt_cell(float(value)), _fmt_cell(plot_x), label,
                _fmt_cell(float(np.mean(rates)) if rates else None),
                _fmt_cell(float(np.mean(iters))),
                _fmt_cell(float(np.mean([r.wall_seconds for r in runs]))),
            ]))
    path = out / f"sweep_{param}.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join([SWEEP_HEADER] + rows) + "\n")
    return path
