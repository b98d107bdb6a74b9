"""Outer loop of the subspace saddle-point solver.

Each iteration: convergence test on the raw gradient, optional shrink of the
proximal weight, gradient refresh of the direction basis, sanitation, the
damped Newton inner solve in subspace coordinates, a gradient-norm line
search on the raw objective along the lifted direction, the update, step
bookkeeping, and recentering of the proximal context at the pre-step point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DegenerateDirectionError
from .inner import inner_solve
from .linesearch import EXHAUSTED, LineSearchParams, saddle_backtrack
from .problems import PrimalDualPoint, SaddleOracle
from .prox import ProxContext, prox_grad, recenter, shrink_tau
from .subspace import SubspaceBasis, block_operator, push_step, refresh_gradient, sanitize
from .trace import CONVERGED, DIVERGED, MAX_ITERS, TraceRecord, distance

Array = np.ndarray

# consecutive exhausted outer searches tolerated before the recovery reset
EXHAUST_RESET_STREAK = 5


@dataclass
class SesopConfig:
    """Configuration of the subspace solver.

    ``d`` is the maximum subspace dimension per variable side,
    ``shrink_trigger`` the regularized-gradient threshold below which the
    proximal weight is shrunk (defaults to ``eps``).
    """

    d: int = 3
    max_iters: int = 1000
    eps: float = 1e-8
    tau0: float = 1.0
    tau_shrink: float = 0.5
    shrink_trigger: float | None = None
    ls: LineSearchParams = field(default_factory=LineSearchParams)
    max_inner: int = 10

    def __post_init__(self):
        if not 1 <= self.d <= 10:
            raise ValueError("subspace dimension d must lie in [1, 10]")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.tau0 < 0:
            raise ValueError("tau0 must be nonnegative")
        if not 0.0 < self.tau_shrink < 1.0:
            raise ValueError("tau_shrink must lie in (0, 1)")
        if self.max_inner < 1:
            raise ValueError("max_inner must be >= 1")


def as_vector(z0, oracle: SaddleOracle) -> Array:
    if isinstance(z0, PrimalDualPoint):
        z = z0.z
    else:
        z = np.asarray(z0, dtype=float)
    if z.shape != (oracle.size,):
        raise ValueError(f"point has length {z.size}, expected {oracle.size}")
    return z.astype(float, copy=True)


def sesop_run(oracle: SaddleOracle, z0, config: SesopConfig,
              z_star=None, direction_hook: Callable | None = None,
              record_sink: Callable[[TraceRecord], None] | None = None):
    """Run the solver from ``z0``.

    ``direction_hook(k, z, basis)``, when given, may push extra direction
    pairs into the basis right after the gradient refresh (this is the
    subspace-boosting interface). Returns ``(point, trace, status)`` where
    status is one of converged/max_iters/diverged.
    """
    m, _ = oracle.dims
    z = as_vector(z0, oracle)
    zs = as_vector(z_star, oracle) if z_star is not None else None
    basis = SubspaceBasis(dim_x=m, dim_y=oracle.size - m, max_dim=config.d)
    ctx = ProxContext(config.tau0, z[:m].copy(), z[m:].copy(), config.tau_shrink)
    trigger = config.eps if config.shrink_trigger is None else config.shrink_trigger

    records: list[TraceRecord] = []
    status = MAX_ITERS
    exhaust_streak = 0

    def emit(rec: TraceRecord) -> None:
        records.append(rec)
        if record_sink is not None:
            record_sink(rec)

    for k in range(config.max_iters + 1):
        tic = time.perf_counter()
        value = oracle.value(z)
        g = oracle.grad(z)
        if not (np.isfinite(value) and np.isfinite(g).all()):
            status = DIVERGED
            break
        grad_norm = float(np.linalg.norm(g))
        dist = distance(z, zs)
        if grad_norm < config.eps:
            emit(TraceRecord(k, grad_norm, dist, value, 0.0, ctx.tau, 0, 0,
                             time.perf_counter() - tic))
            status = CONVERGED
            break
        if k == config.max_iters:
            emit(TraceRecord(k, grad_norm, dist, value, 0.0, ctx.tau, 0, 0,
                             time.perf_counter() - tic))
            status = MAX_ITERS
            break

        if np.linalg.norm(prox_grad(ctx, oracle, z)) < trigger:
            ctx = shrink_tau(ctx)
        tau_used = ctx.tau

        refresh_gradient(basis, g[:m], g[m:])
        if direction_hook is not None:
            direction_hook(k, z, basis)
        sanitize(basis)
        op = block_operator(basis)

        result = inner_solve(oracle, ctx, op, z, ls_params=config.ls,
                             eps=config.eps, max_inner=config.max_inner)
        d_full = op.lift(result.gamma)
        ls_evals = result.ls_evals
        if np.linalg.norm(d_full) == 0.0:
            eta, ls_status = 0.0, EXHAUSTED
        else:
            ls = saddle_backtrack(oracle.grad, oracle.hvp, z, d_full, config.ls,
                                  base_grad=g)
            eta, ls_status = ls.eta, ls.status
            ls_evals += ls.evals
        z_new = z + eta * d_full

        exhaust_streak = exhaust_streak + 1 if ls_status == EXHAUSTED else 0
        if exhaust_streak > EXHAUST_RESET_STREAK:
            # degenerate span recovery: restart history, restore damping
            basis.reset_to_gradient()
            ctx = replace(ctx, tau=max(ctx.tau, 1.0))
            exhaust_streak = 0

        push_step(basis, z_new[:m] - z[:m], z_new[m:] - z[m:],
                  z_norm=float(np.linalg.norm(z)))
        ctx = recenter(ctx, z)
        emit(TraceRecord(k, grad_norm, dist, value, eta, tau_used,
                         result.iterations, ls_evals,
                         time.perf_counter() - tic))
        z = z_new

    point = PrimalDualPoint(z[:m].copy(), z[m:].copy())
    return point, records, status


def onedim_joint_subspace_step(C: Array, z, eta: float) -> PrimalDualPoint:
    """Reference one-dimensional joint subspace update for f(x, y) = x'Cy.

    Both sides use their own gradient as the single direction; the subspace
    coefficients have the closed form

        alpha = -(Q'C'P)^{-1} Q'C'x,    beta = -(P'CQ)^{-1} P'Cy

    with P = grad_x f and Q = grad_y f. Used only by convergence tests.
    """
    C = np.asarray(C, dtype=float)
    if isinstance(z, PrimalDualPoint):
        x, y = z.x.copy(), z.y.copy()
    else:
        x, y = (np.atleast_1d(np.asarray(part, dtype=float)) for part in z)
    P = C @ y
    Q = C.T @ x
    denom_a = float(Q @ (C.T @ P))
    denom_b = float(P @ (C @ Q))
    if denom_a == 0.0 or denom_b == 0.0:
        raise DegenerateDirectionError("zero coupling: joint subspace step undefined")
    alpha = -float(Q @ (C.T @ x)) / denom_a
    beta = -float(P @ (C @ y)) / denom_b
    return PrimalDualPoint(x + eta * alpha * P, y + eta * beta * Q)
