"""Backtracking line search on the squared gradient norm.

Value-based backtracking can diverge on saddle problems (the bilinear game
being the canonical failure), so acceptance is tested on the gradient norm
instead: a trial step eta is accepted when

    ||g(z + eta*d)||^2 < ||g(z)||^2 + eta * c * <g(z), h(z, d)>

with the curvature term evaluated once (it does not depend on eta). The
same routine serves the inner search in subspace coordinates and the outer
step correction, as long as both sides of the test use the same objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateDirectionError

Array = np.ndarray

ACCEPTED = "accepted"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class LineSearchParams:
    """Sufficient-decrease constant, halving factor, initial step, budget."""

    c: float = 0.0
    nu: float = 0.5
    eta0: float = 1.0
    max_trials: int = 30

    def __post_init__(self):
        if not 0.0 <= self.c < 1.0:
            raise ValueError("c must lie in [0, 1)")
        if not 0.0 < self.nu < 1.0:
            raise ValueError("nu must lie in (0, 1)")
        if not 0.0 < self.eta0 <= 1.0:
            raise ValueError("eta0 must lie in (0, 1]")
        if self.max_trials < 0:
            raise ValueError("max_trials must be nonnegative")


@dataclass
class LineSearchResult:
    eta: float
    status: str  # ACCEPTED or EXHAUSTED
    evals: int   # gradient evaluations beyond the baseline


def saddle_backtrack(grad_fn: Callable[[Array], Array],
                     hvp_fn: Callable[[Array, Array], Array],
                     z: Array, d: Array, params: LineSearchParams,
                     base_grad: Array | None = None) -> LineSearchResult:
    """Largest step eta0 * nu^i passing the gradient-norm decrease test.

    ``grad_fn`` and ``hvp_fn`` must evaluate the same objective. The
    precomputed gradient at ``z`` may be passed to avoid a redundant
    evaluation. When no trial passes, the smallest trial step is returned
    with status ``EXHAUSTED`` and the caller decides what to do with it.
    """
    d = np.asarray(d, dtype=float)
    if np.linalg.norm(d) == 0.0:
        raise DegenerateDirectionError("line search needs a nonzero direction")
    g0 = grad_fn(z) if base_grad is None else base_grad
    base = float(g0 @ g0)
    slope = 0.0
    if params.c > 0.0:
        slope = params.c * float(g0 @ hvp_fn(z, d))
    eta = params.eta0
    evals = 0
    for trial in range(params.max_trials + 1):
        g = grad_fn(z + eta * d)
        evals += 1
        if float(g @ g) < base + eta * slope:
            return LineSearchResult(eta, ACCEPTED, evals)
        if trial < params.max_trials:
            eta *= params.nu
    return LineSearchResult(eta, EXHAUSTED, evals)
