"""Proximal regularization wrapper around a saddle oracle.

The regularized objective adds a quadratic pull toward the primal center
and subtracts one toward the dual center:

    f_reg(x, y) = f(x, y) + (tau/2)||x - cx||^2 - (tau/2)||y - cy||^2

With tau = 0 everything reduces to the raw oracle. The Hessian contribution
is the signed diagonal tau * diag(I, -I), which is what stabilizes the
subspace Newton system on degenerate games.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .problems import SaddleOracle

Array = np.ndarray


@dataclass(frozen=True)
class ProxContext:
    """Proximal weight, centers and the shrink factor applied to tau."""

    tau: float
    center_x: Array
    center_y: Array
    shrink: float = 0.5

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")


def prox_value(ctx: ProxContext, oracle: SaddleOracle, z: Array) -> float:
    val = oracle.value(z)
    if ctx.tau == 0.0:
        return val
    x, y = oracle.split(z)
    dx = x - ctx.center_x
    dy = y - ctx.center_y
    return val + 0.5 * ctx.tau * (dx @ dx - dy @ dy)


def prox_grad(ctx: ProxContext, oracle: SaddleOracle, z: Array) -> Array:
    g = oracle.grad(z)
    if ctx.tau == 0.0:
        return g
    m, _ = oracle.dims
    g = g.copy()
    g[:m] += ctx.tau * (z[:m] - ctx.center_x)
    g[m:] -= ctx.tau * (z[m:] - ctx.center_y)
    return g


def prox_hvp(ctx: ProxContext, oracle: SaddleOracle, z: Array, v: Array) -> Array:
    h = oracle.hvp(z, v)
    if ctx.tau == 0.0:
        return h
    m, _ = oracle.dims
    h = h.copy()
    h[:m] += ctx.tau * v[:m]
    h[m:] -= ctx.tau * v[m:]
    return h


def shrink_tau(ctx: ProxContext) -> ProxContext:
    """Multiply tau by the shrink factor."""
    return replace(ctx, tau=ctx.tau * ctx.shrink)


def recenter(ctx: ProxContext, z: Array) -> ProxContext:
    """Move both centers to the given point (split by the center lengths)."""
    m = ctx.center_x.size
    return replace(ctx, center_x=z[:m].copy(), center_y=z[m:].copy())
