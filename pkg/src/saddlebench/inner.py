"""Damped Newton iterations on the regularized objective in subspace coordinates.

The subspace Hessian is assembled column by column from Hessian-vector
products against the lifted basis directions (one product per column), plus
the analytic signed-diagonal damping block; no full-space Hessian is ever
materialized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSubspaceError
from .linesearch import EXHAUSTED, LineSearchParams, saddle_backtrack
from .prox import ProxContext, prox_grad, prox_hvp
from .problems import SaddleOracle
from .subspace import BlockOperator

Array = np.ndarray

PIVOT_REL_TOL = 1e-12
DAMPING_SEED = 1e-10
MAX_DOUBLINGS = 40


@dataclass
class SubspaceSystem:
    """Newton system at fixed subspace coordinates gamma."""

    H_gamma: Array   # (m+n) x (m+n), symmetric
    g_gamma: Array   # regularized gradient projected into the subspace
    gamma: Array
    m: int
    n: int


def build_system(oracle: SaddleOracle, ctx: ProxContext, op: BlockOperator,
                 z: Array, gamma: Array, grad_full: Array | None = None) -> SubspaceSystem:
    """Assemble the subspace Hessian and gradient at z + lift(gamma).

    Costs exactly m + n oracle Hessian-vector products (one per basis
    column); the damping contribution tau * diag(P'P, -Q'Q) is analytic.
    ``grad_full`` may carry a precomputed regularized gradient at the
    evaluation point.
    """
    m, n = op.m, op.n
    k = m + n
    z_eval = z + op.lift(gamma)
    if grad_full is None:
        grad_full = prox_grad(ctx, oracle, z_eval)
    g_gamma = op.project(grad_full)
    dx = op.P.shape[0]
    dy = op.Q.shape[0]
    H = np.empty((k, k))
    for j in range(m):
        col = np.concatenate([op.P[:, j], np.zeros(dy)])
        H[:, j] = op.project(oracle.hvp(z_eval, col))
    for j in range(n):
        col = np.concatenate([np.zeros(dx), op.Q[:, j]])
        H[:, m + j] = op.project(oracle.hvp(z_eval, col))
    if ctx.tau > 0.0:
        H[:m, :m] += ctx.tau * (op.P.T @ op.P)
        H[m:, m:] -= ctx.tau * (op.Q.T @ op.Q)
    H = 0.5 * (H + H.T)  # kill hvp round-off asymmetry
    return SubspaceSystem(H, g_gamma, np.asarray(gamma, dtype=float).copy(), m, n)


def _solve_checked(H: Array, g: Array):
    with warnings.catch_warnings():
        # singular factorizations are an expected probe outcome here
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(H, check_finite=False)
    scale = max(float(np.abs(H).max()), 1e-300)
    if float(np.abs(np.diag(lu)).min()) < PIVOT_REL_TOL * scale:
        return None
    return scipy.linalg.lu_solve((lu, piv), -g, check_finite=False)


def newton_step(system: SubspaceSystem) -> Array:
    """Solve H_gamma * step = -g_gamma with a signed Tikhonov fallback.

    On near-singular pivots the system is retried with +mu added to the
    primal diagonal block and -mu to the dual block, doubling mu until the
    factorization is acceptable.
    """
    H, g = system.H_gamma, system.g_gamma
    m, n = system.m, system.n
    if np.abs(H).max() > 0.0:
        sol = _solve_checked(H, g)
        if sol is not None:
            return sol
    trace_scale = float(np.abs(np.diag(H)).mean())
    if trace_scale == 0.0:
        trace_scale = max(float(np.abs(H).max()), 1.0)
    signs = np.concatenate([np.ones(m), -np.ones(n)])
    mu = DAMPING_SEED * trace_scale
    for _ in range(MAX_DOUBLINGS):
        sol = _solve_checked(H + mu * np.diag(signs), g)
        if sol is not None:
            return sol
        mu *= 2.0
    raise SingularSubspaceError("subspace system unsolvable after damping retries")


@dataclass
class InnerResult:
    gamma: Array
    iterations: int
    ls_evals: int


def inner_solve(oracle: SaddleOracle, ctx: ProxContext, op: BlockOperator,
                z: Array, ls_params: LineSearchParams, eps: float = 1e-8,
                max_inner: int = 10) -> InnerResult:
    """Minimize-maximize the regularized objective inside the subspace.

    Starting from gamma = 0, iterates damped Newton steps with the
    gradient-norm line search applied in subspace coordinates. Stops when
    the subspace gradient of the regularized objective drops below ``eps``,
    after ``max_inner`` iterations, or after two consecutive exhausted
    line searches.
    """
    k = op.m + op.n

    def gamma_grad(gm: Array) -> Array:
        return op.project(prox_grad(ctx, oracle, z + op.lift(gm)))

    def gamma_hvp(gm: Array, v: Array) -> Array:
        return op.project(prox_hvp(ctx, oracle, z + op.lift(gm), op.lift(v)))

    gamma = np.zeros(k)
    iters = 0
    evals = 0
    exhausted_streak = 0
    for _ in range(max_inner):
        grad_full = prox_grad(ctx, oracle, z + op.lift(gamma))
        g_gamma = op.project(grad_full)
        if np.linalg.norm(g_gamma) <= eps:
            break
        system = build_system(oracle, ctx, op, z, gamma, grad_full=grad_full)
        step = newton_step(system)
        result = saddle_backtrack(gamma_grad, gamma_hvp, gamma, step, ls_params,
                                  base_grad=g_gamma)
        gamma = gamma + result.eta * step
        iters += 1
        evals += result.evals
        exhausted_streak = exhausted_streak + 1 if result.status == EXHAUSTED else 0
        if exhausted_streak >= 2:
            break
    return InnerResult(gamma, iters, evals)
