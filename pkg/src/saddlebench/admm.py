"""Alternating direction method of multipliers for the smoothed lasso split.

One sweep is: closed-form x-update against the cached factorization of
(A'A + rho*I), a per-coordinate scalar root solve for w, and dual ascent
y <- y + rho*(x - w). The sweep displacement doubles as a direction
generator for boosting the subspace solver.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .problems import SmoothLassoSaddle, phi_s_prime, phi_s_second
from .subspace import SubspaceBasis, push_step

Array = np.ndarray

W_ROOT_TOL = 1e-12
W_ROOT_MAX_ITERS = 60


@dataclass
class AdmmState:
    """Split-variable triple plus the cached x-update factorization."""

    x: Array
    w: Array
    y: Array
    rho: float
    chol: tuple  # cho_factor of (A'A + rho*I)
    w_residual: float = 0.0  # max |root residual| of the last w-update

    def copy_variables(self) -> tuple[Array, Array, Array]:
        return self.x.copy(), self.w.copy(), self.y.copy()

    def with_rho(self, rho: float, A: Array) -> "AdmmState":
        """New state with a different penalty; the factorization is rebuilt."""
        return AdmmState(self.x.copy(), self.w.copy(), self.y.copy(), rho,
                         _factorize(A, rho))


def _factorize(A: Array, rho: float) -> tuple:
    n = A.shape[1]
    return scipy.linalg.cho_factor(A.T @ A + rho * np.eye(n))


def make_admm_state(problem: SmoothLassoSaddle, x0: Array | None = None,
                    w0: Array | None = None, y0: Array | None = None) -> AdmmState:
    n = problem.n_feat
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    w = np.zeros(n) if w0 is None else np.asarray(w0, dtype=float).copy()
    y = np.zeros(n) if y0 is None else np.asarray(y0, dtype=float).copy()
    return AdmmState(x, w, y, problem.rho, _factorize(problem.A, problem.rho))


def admm_x_update(state: AdmmState, A: Array, b: Array) -> Array:
    """x solving (A'A + rho*I) x = A'b - y + rho*w via the cached factor."""
    rhs = A.T @ b - state.y + state.rho * state.w
    state.x = scipy.linalg.cho_solve(state.chol, rhs)
    return state.x


def _soft_threshold(t: Array, thr: float) -> Array:
    return np.sign(t) * np.maximum(np.abs(t) - thr, 0.0)


def _w_root(t: Array, lam: float, s: float, rho: float) -> tuple[Array, float]:
    """Per-coordinate root of lam*w/(s+|w|) + rho*w = t.

    The left side is strictly increasing, so the root is unique and lies in
    [min(0, t/rho), max(0, t/rho)]. Newton from the soft-threshold guess,
    with bisection whenever an iterate leaves the shrinking bracket.
    """
    target = t / rho
    if lam == 0.0:
        return target.copy(), 0.0
    lo = np.minimum(0.0, target)
    hi = np.maximum(0.0, target)
    w = _soft_threshold(target, lam / rho)

    def residual(w_):
        return lam * phi_s_prime(w_, s) + rho * w_ - t

    resid = residual(w)
    for _ in range(W_ROOT_MAX_ITERS):
        if float(np.abs(resid).max()) <= W_ROOT_TOL:
            break
        hi = np.where(resid > 0, np.minimum(hi, w), hi)
        lo = np.where(resid < 0, np.maximum(lo, w), lo)
        deriv = lam * phi_s_second(w, s) + rho
        w_new = w - resid / deriv
        outside = (w_new < lo) | (w_new > hi)
        w = np.where(outside, 0.5 * (lo + hi), w_new)
        resid = residual(w)
    return w, float(np.abs(resid).max())


def admm_w_update(state: AdmmState, lam: float, s: float) -> Array:
    """Exact per-coordinate shrinkage for the smooth absolute value."""
    t = state.rho * state.x + state.y
    state.w, state.w_residual = _w_root(t, lam, s, state.rho)
    return state.w


def admm_sweep(state: AdmmState, problem: SmoothLassoSaddle) -> AdmmState:
    """One full x, w, dual-ascent sweep (in place)."""
    admm_x_update(state, problem.A, problem.b)
    admm_w_update(state, problem.lam, problem.s)
    state.y = state.y + state.rho * (state.x - state.w)
    return state


@dataclass
class AdmmRecord:
    iteration: int
    grad_norm: float       # augmented-Lagrangian gradient at ([x; w], y)
    primal_residual: float
    value: float
    w_residual: float
    elapsed_s: float


def _stacked(state: AdmmState) -> Array:
    return np.concatenate([state.x, state.w, state.y])


def admm_run(problem: SmoothLassoSaddle, iters: int,
             x0: Array | None = None, w0: Array | None = None,
             y0: Array | None = None, eps: float | None = None,
             trace_oracle=None):
    """Run ADMM sweeps, tracing gradient norm and primal residual.

    With ``eps`` given, stops early once the augmented-Lagrangian gradient
    norm at the stacked iterate drops below it. ``trace_oracle`` may supply
    an instrumented wrapper used for the per-sweep gradient and value
    evaluations. Returns ``(state, trace)``.
    """
    oracle = problem if trace_oracle is None else trace_oracle
    state = make_admm_state(problem, x0, w0, y0)
    records: list[AdmmRecord] = []
    for k in range(iters + 1):
        tic = time.perf_counter()
        z = _stacked(state)
        grad_norm = float(np.linalg.norm(oracle.grad(z)))
        records.append(AdmmRecord(k, grad_norm,
                                  float(np.linalg.norm(state.x - state.w)),
                                  oracle.value(z), state.w_residual,
                                  time.perf_counter() - tic))
        if eps is not None and grad_norm < eps:
            break
        if k == iters:
            break
        admm_sweep(state, problem)
    return state, records


def admm_direction(state_before: AdmmState, state_after: AdmmState):
    """Displacement of one sweep, shaped for the subspace basis.

    Returns ``(p_primal, p_dual)`` with the primal part stacked as
    [dx; dw], or None as the skip signal when the displacement is zero.
    """
    dx = state_after.x - state_before.x
    dw = state_after.w - state_before.w
    dy = state_after.y - state_before.y
    p_primal = np.concatenate([dx, dw])
    if np.linalg.norm(p_primal) == 0.0 and np.linalg.norm(dy) == 0.0:
        return None
    return p_primal, dy


def make_boost_hook(problem: SmoothLassoSaddle, boost_every_k: int = 1):
    """Direction hook running one ADMM sweep from the current iterate.

    The sweep displacement is pushed into the basis as an extra
    previous-step pair, counted against the subspace capacity. The x-update
    factorization is built once and shared across calls. The root residuals
    of every sweep's w-update accumulate on ``hook.w_residuals``.
    """
    if boost_every_k < 1:
        raise ValueError("boost_every_k must be >= 1")
    chol = _factorize(problem.A, problem.rho)
    n = problem.n_feat
    residuals: list[float] = []

    def hook(k: int, z: Array, basis: SubspaceBasis) -> None:
        if k % boost_every_k != 0:
            return
        state = AdmmState(z[:n].copy(), z[n:2 * n].copy(), z[2 * n:].copy(),
                          problem.rho, chol)
        before = AdmmState(*state.copy_variables(), problem.rho, chol)
        admm_sweep(state, problem)
        residuals.append(state.w_residual)
        direction = admm_direction(before, state)
        if direction is None:
            return
        push_step(basis, direction[0], direction[1],
                  z_norm=float(np.linalg.norm(z)))

    hook.w_residuals = residuals
    return hook


def lasso_stationarity_residual(problem: SmoothLassoSaddle, state: AdmmState) -> float:
    """Norm of the augmented-Lagrangian gradient at the state's triple."""
    return float(np.linalg.norm(problem.grad(_stacked(state))))


__all__ = [
    "AdmmState", "AdmmRecord", "make_admm_state", "admm_x_update",
    "admm_w_update", "admm_sweep", "admm_run", "admm_direction",
    "make_boost_hook", "lasso_stationarity_residual",
]
