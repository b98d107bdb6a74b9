"""Paired primal/dual direction bookkeeping for the subspace solver.

Directions are stored as epochs: one primal column and one dual column
appended together and evicted together, so the two sides always hold the
same number of columns. Tags record what each epoch is (current gradient,
previous gradient, or a previous accepted step).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDirectionError

log = logging.getLogger(__name__)

Array = np.ndarray

CURRENT_GRAD = "current_grad"
PREV_GRAD = "prev_grad"
PREV_STEP = "prev_step"

DEPENDENCE_TOL = 1e-8
STEP_SKIP_REL = 1e-14


@dataclass
class DirectionPair:
    p: Array  # primal column, unit norm (or zero placeholder)
    q: Array  # dual column
    tag: str


@dataclass
class SubspaceBasis:
    """Paired direction history with a hard per-side capacity ``max_dim``."""

    dim_x: int
    dim_y: int
    max_dim: int
    pairs: list[DirectionPair] = field(default_factory=list)
    degenerate: bool = False  # set when a zero placeholder column was stored

    def __post_init__(self):
        if self.max_dim < 1:
            raise ValueError("max_dim must be >= 1")

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    def tags(self) -> list[str]:
        return [pair.tag for pair in self.pairs]

    def reset_to_gradient(self) -> None:
        """Drop everything but the current-gradient pair."""
        self.pairs = [p for p in self.pairs if p.tag == CURRENT_GRAD]


def _unit(v: Array) -> tuple[Array, bool]:
    n = np.linalg.norm(v)
    if n == 0.0:
        return np.zeros_like(v, dtype=float), False
    return np.asarray(v, dtype=float) / n, True


def refresh_gradient(basis: SubspaceBasis, g_x: Array, g_y: Array) -> SubspaceBasis:
    """Install (g_x, g_y) as the current-gradient pair.

    The previous current-gradient pair is retagged as the previous gradient,
    replacing any older one. A zero side is stored as a zero placeholder and
    the basis is flagged for sanitation. A fully zero gradient means the
    caller should already have declared convergence.
    """
    if np.linalg.norm(g_x) == 0.0 and np.linalg.norm(g_y) == 0.0:
        raise DegenerateDirectionError("cannot refresh with a zero gradient")
    basis.pairs = [p for p in basis.pairs if p.tag != PREV_GRAD]
    for pair in basis.pairs:
        if pair.tag == CURRENT_GRAD:
            pair.tag = PREV_GRAD
    p, ok_p = _unit(g_x)
    q, ok_q = _unit(g_y)
    if not (ok_p and ok_q):
        basis.degenerate = True
    basis.pairs.append(DirectionPair(p, q, CURRENT_GRAD))
    # enforce the per-side capacity; the fresh gradient pair is never evicted
    while len(basis.pairs) > basis.max_dim:
        del basis.pairs[0]
    return basis


def push_step(basis: SubspaceBasis, p_x: Array, p_y: Array,
              z_norm: float = 0.0) -> SubspaceBasis:
    """Append an accepted outer step as a previous-step pair.

    If adding the pair would not leave room for the next gradient refresh,
    the oldest previous-step pair is evicted first (FIFO); with nothing to
    evict the push is skipped. Steps that are negligible relative to
    ``z_norm`` are skipped as well.
    """
    step_norm = float(np.hypot(np.linalg.norm(p_x), np.linalg.norm(p_y)))
    if step_norm == 0.0 or step_norm < STEP_SKIP_REL * z_norm:
        log.debug("skipping negligible step push (norm %.3e)", step_norm)
        return basis
    while len(basis.pairs) >= basis.max_dim:
        steps = [i for i, pair in enumerate(basis.pairs) if pair.tag == PREV_STEP]
        if not steps:
            return basis
        del basis.pairs[steps[0]]
    p, _ = _unit(p_x)
    q, _ = _unit(p_y)
    basis.pairs.append(DirectionPair(p, q, PREV_STEP))
    return basis


def _mgs_residual(v: Array, ortho: list[Array]) -> Array:
    # two-pass modified Gram-Schmidt for a trustworthy smallness test
    r = v.copy()
    for _ in range(2):
        for u in ortho:
            r = r - (u @ r) * u
    return r


def sanitize(basis: SubspaceBasis, tol: float = DEPENDENCE_TOL) -> SubspaceBasis:
    """Normalize columns and drop linearly dependent epochs.

    An epoch is dropped (on both sides) when either its primal or its dual
    column has residual norm below ``tol`` after orthogonalization against
    the retained columns. The current-gradient pair is always retained; it
    is processed first so everything else is measured against it.
    """
    current = [p for p in basis.pairs if p.tag == CURRENT_GRAD]
    others = [p for p in basis.pairs if p.tag != CURRENT_GRAD]
    kept_p: list[Array] = []
    kept_q: list[Array] = []
    keep: set[int] = set()

    def admit(pair: DirectionPair, forced: bool) -> None:
        pn, _ = _unit(pair.p)
        qn, _ = _unit(pair.q)
        rp = _mgs_residual(pn, kept_p)
        rq = _mgs_residual(qn, kept_q)
        rp_norm = np.linalg.norm(rp)
        rq_norm = np.linalg.norm(rq)
        if not forced and (rp_norm < tol or rq_norm < tol):
            return
        pair.p, pair.q = pn, qn
        keep.add(id(pair))
        if rp_norm >= tol:
            kept_p.append(rp / rp_norm)
        if rq_norm >= tol:
            kept_q.append(rq / rq_norm)

    for pair in current:
        admit(pair, forced=True)
    for pair in reversed(others):  # prefer the most recent history
        admit(pair, forced=False)
    basis.pairs = [p for p in basis.pairs if id(p) in keep]
    basis.degenerate = False
    return basis


@dataclass
class BlockOperator:
    """Block-diagonal action of the direction matrices P and Q.

    ``lift`` maps subspace coordinates gamma = [alpha; beta] to the stacked
    full-space direction [P alpha; Q beta]; ``project`` is its adjoint.
    """

    P: Array  # dim_x x m
    Q: Array  # dim_y x n

    @property
    def m(self) -> int:
        return self.P.shape[1]

    @property
    def n(self) -> int:
        return self.Q.shape[1]

    def lift(self, gamma: Array) -> Array:
        return np.concatenate([self.P @ gamma[: self.m], self.Q @ gamma[self.m:]])

    def project(self, v: Array) -> Array:
        dx = self.P.shape[0]
        return np.concatenate([self.P.T @ v[:dx], self.Q.T @ v[dx:]])


def block_operator(basis: SubspaceBasis) -> BlockOperator:
    if not basis.pairs:
        raise DegenerateDirectionError("basis holds no directions")
    P = np.column_stack([pair.p for pair in basis.pairs])
    Q = np.column_stack([pair.q for pair in basis.pairs])
    return BlockOperator(P, Q)
