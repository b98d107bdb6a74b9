"""First-order comparison methods sharing the oracle and line search.

All three methods step against the descent-ascent field
F(z) = [grad_x f; -grad_y f], use the gradient-norm backtracking search for
the step size (unless a fixed step is forced), share the trace schema and
the stopping rule with the subspace solver, and take the smallest trial
step when the search exhausts so divergence shows up in the trace instead
of raising.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .linesearch import LineSearchParams, saddle_backtrack
from .problems import PrimalDualPoint, SaddleOracle
from .sesop import as_vector
from .trace import CONVERGED, DIVERGED, MAX_ITERS, TraceRecord, distance

Array = np.ndarray


class VectorField:
    """Descent-ascent field F(z) = [grad_x f; -grad_y f] of a saddle oracle.

    -F(z) is the simultaneous gradient update direction; F vanishes exactly
    at stationary points.
    """

    def __init__(self, oracle: SaddleOracle):
        self.oracle = oracle

    def from_grad(self, g: Array) -> Array:
        m, _ = self.oracle.dims
        return np.concatenate([g[:m], -g[m:]])

    def __call__(self, z: Array) -> Array:
        return self.from_grad(self.oracle.grad(z))


@dataclass
class FirstOrderConfig:
    max_iters: int = 1000
    eps: float = 1e-8
    ls: LineSearchParams = field(default_factory=LineSearchParams)
    fixed_eta: float | None = None  # bypass the line search entirely

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.fixed_eta is not None and self.fixed_eta <= 0:
            raise ValueError("fixed_eta must be positive")


class _Loop:
    """Shared skeleton: convergence checks, trace records, statuses."""

    def __init__(self, oracle, z0, config, z_star=None, record_sink=None):
        self.oracle = oracle
        self.config = config
        self.z = as_vector(z0, oracle)
        self.zs = as_vector(z_star, oracle) if z_star is not None else None
        self.records: list[TraceRecord] = []
        self.sink = record_sink
        self.status = MAX_ITERS

    def emit(self, rec: TraceRecord) -> None:
        self.records.append(rec)
        if self.sink is not None:
            self.sink(rec)

    def run(self, step_fn):
        cfg = self.config
        for k in range(cfg.max_iters + 1):
            tic = time.perf_counter()
            value = self.oracle.value(self.z)
            g = self.oracle.grad(self.z)
            if not (np.isfinite(value) and np.isfinite(g).all()):
                self.status = DIVERGED
                break
            grad_norm = float(np.linalg.norm(g))
            dist = distance(self.z, self.zs)
            if grad_norm < cfg.eps:
                self.emit(TraceRecord(k, grad_norm, dist, value, 0.0, 0.0, 0, 0,
                                      time.perf_counter() - tic))
                self.status = CONVERGED
                break
            if k == cfg.max_iters:
                self.emit(TraceRecord(k, grad_norm, dist, value, 0.0, 0.0, 0, 0,
                                      time.perf_counter() - tic))
                self.status = MAX_ITERS
                break
            z_new, eta, evals = step_fn(k, self.z, g)
            self.emit(TraceRecord(k, grad_norm, dist, value, eta, 0.0, 0, evals,
                                  time.perf_counter() - tic))
            self.z = z_new
        m, _ = self.oracle.dims
        point = PrimalDualPoint(self.z[:m].copy(), self.z[m:].copy())
        return point, self.records, self.status


def gda_run(oracle: SaddleOracle, z0, config: FirstOrderConfig,
            z_star=None, record_sink=None):
    """Simultaneous gradient descent-ascent."""
    field_ = VectorField(oracle)
    loop = _Loop(oracle, z0, config, z_star, record_sink)

    def step(k, z, g):
        d = -field_.from_grad(g)
        if config.fixed_eta is not None:
            return z + config.fixed_eta * d, config.fixed_eta, 0
        res = saddle_backtrack(oracle.grad, oracle.hvp, z, d, config.ls, base_grad=g)
        return z + res.eta * d, res.eta, res.evals

    return loop.run(step)


def ogda_run(oracle: SaddleOracle, z0, config: FirstOrderConfig,
             z_star=None, record_sink=None):
    """Optimistic variant: extrapolates with the previous field value."""
    field_ = VectorField(oracle)
    loop = _Loop(oracle, z0, config, z_star, record_sink)
    prev_field: list[Array | None] = [None]

    def step(k, z, g):
        F = field_.from_grad(g)
        F_prev = F if prev_field[0] is None else prev_field[0]
        prev_field[0] = F
        d = -(2.0 * F - F_prev)
        if config.fixed_eta is not None:
            return z + config.fixed_eta * d, config.fixed_eta, 0
        res = saddle_backtrack(oracle.grad, oracle.hvp, z, d, config.ls, base_grad=g)
        return z + res.eta * d, res.eta, res.evals

    return loop.run(step)


def egda_run(oracle: SaddleOracle, z0, config: FirstOrderConfig,
             z_star=None, record_sink=None):
    """Extragradient: probe half-step, then step with the probe's field.

    The backtracking test is applied to the composite map. When no trial
    step passes, the trial minimizing the resulting gradient norm is used
    instead (a fixed-step grid search over the same trial values).
    """
    field_ = VectorField(oracle)
    loop = _Loop(oracle, z0, config, z_star, record_sink)
    m, _ = oracle.dims

    def candidate(z, F0, eta):
        z_half = z - eta * F0
        g_half = oracle.grad(z_half)
        z_try = z - eta * field_.from_grad(g_half)
        g_try = oracle.grad(z_try)
        return z_try, float(g_try @ g_try)

    def step(k, z, g):
        F0 = field_.from_grad(g)
        if config.fixed_eta is not None:
            z_try, _ = candidate(z, F0, config.fixed_eta)
            return z_try, config.fixed_eta, 2
        base = float(g @ g)
        slope = 0.0
        if config.ls.c > 0.0:
            slope = config.ls.c * float(g @ oracle.hvp(z, -F0))
        eta = config.ls.eta0
        evals = 0
        best = None  # (norm2, eta, z_try)
        for trial in range(config.ls.max_trials + 1):
            z_try, nn = candidate(z, F0, eta)
            evals += 2
            if best is None or nn < best[0]:
                best = (nn, eta, z_try)
            if nn < base + eta * slope:
                return z_try, eta, evals
            if trial < config.ls.max_trials:
                eta *= config.ls.nu
        _, eta_best, z_best = best
        return z_best, eta_best, evals

    return loop.run(step)
