"""Deterministic saddle-point test problems.

Every problem exposes the same oracle contract: scalar value, full gradient
over the stacked variable z = [x; y], and an exact Hessian-vector product.
All instances are generated from an explicit seed and are immutable after
construction, so they can be shared read-only between solver runs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NoUniqueSolutionError

Array = np.ndarray

GENERAL = "general"
SYM_POS_DEF = "sym_pos_def"
SYM_NEG_DEF = "sym_neg_def"

_MATRIX_MAGIC = b"SBMATRIX"  # 8 bytes; header is magic + u32 rows + u32 cols


@dataclass
class PrimalDualPoint:
    """Stacked iterate with an explicit primal/dual split.

    Parameters
    ----------
    x : ndarray
        Primal variable, length M >= 1.
    y : ndarray
        Dual variable, length N >= 1.
    """

    x: Array
    y: Array

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if self.x.ndim != 1 or self.y.ndim != 1:
            raise ValueError("x and y must be one-dimensional")
        if self.x.size < 1 or self.y.size < 1:
            raise ValueError("x and y must have length >= 1")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("point entries must be finite")

    @property
    def z(self) -> Array:
        """Concatenation [x; y] of length M + N."""
        return np.concatenate([self.x, self.y])

    @property
    def dims(self) -> tuple[int, int]:
        return self.x.size, self.y.size

    @classmethod
    def from_concat(cls, z: Array, dims: tuple[int, int]) -> "PrimalDualPoint":
        m, n = dims
        z = np.asarray(z, dtype=float)
        if z.size != m + n:
            raise ValueError(f"expected length {m + n}, got {z.size}")
        return cls(z[:m].copy(), z[m:].copy())


class SaddleOracle:
    """Evaluation contract shared by all problems.

    Subclasses implement ``value``, ``grad`` and ``hvp`` on the stacked
    variable. ``grad`` and ``hvp`` must be deterministic, side-effect free,
    and return freshly allocated arrays.
    """

    @property
    def dims(self) -> tuple[int, int]:
        raise NotImplementedError

    @property
    def size(self) -> int:
        m, n = self.dims
        return m + n

    def split(self, z: Array) -> tuple[Array, Array]:
        m, _ = self.dims
        return z[:m], z[m:]

    def join(self, x: Array, y: Array) -> Array:
        return np.concatenate([x, y])

    def value(self, z: Array) -> float:
        raise NotImplementedError

    def grad(self, z: Array) -> Array:
        raise NotImplementedError

    def hvp(self, z: Array, v: Array) -> Array:
        raise NotImplementedError


class QuadraticSaddle(SaddleOracle):
    """min-max quadratic 0.5(x'A_x x + y'A_y y) + x'C y + b_x'x + b_y'y.

    ``A_x`` is symmetric positive definite and ``A_y`` symmetric negative
    definite, except in the bilinear setting where both are exactly zero.
    """

    def __init__(self, A_x: Array, A_y: Array, C: Array, b_x: Array, b_y: Array):
        self.A_x = np.asarray(A_x, dtype=float)
        self.A_y = np.asarray(A_y, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.b_x = np.asarray(b_x, dtype=float)
        self.b_y = np.asarray(b_y, dtype=float)
        m, n = self.b_x.size, self.b_y.size
        if self.A_x.shape != (m, m) or self.A_y.shape != (n, n):
            raise ValueError("block shapes are inconsistent")
        if self.C.shape != (m, n):
            raise ValueError(f"interaction matrix must be {m}x{n}")
        # skip multiplies against structurally zero blocks (bilinear setting)
        self._ax_zero = not self.A_x.any()
        self._ay_zero = not self.A_y.any()
        self._c_zero = not self.C.any()

    @property
    def dims(self) -> tuple[int, int]:
        return self.b_x.size, self.b_y.size

    def value(self, z: Array) -> float:
        x, y = self.split(z)
        val = self.b_x @ x + self.b_y @ y
        if not self._ax_zero:
            val += 0.5 * (x @ (self.A_x @ x))
        if not self._ay_zero:
            val += 0.5 * (y @ (self.A_y @ y))
        if not self._c_zero:
            val += x @ (self.C @ y)
        return float(val)

    def grad(self, z: Array) -> Array:
        x, y = self.split(z)
        gx = self.b_x.copy() if self._ax_zero else self.A_x @ x + self.b_x
        gy = self.b_y.copy() if self._ay_zero else self.A_y @ y + self.b_y
        if not self._c_zero:
            gx += self.C @ y
            gy += self.C.T @ x
        return np.concatenate([gx, gy])

    def hvp(self, z: Array, v: Array) -> Array:
        vx, vy = self.split(v)
        m, n = self.dims
        hx = np.zeros(m) if self._ax_zero else self.A_x @ vx
        hy = np.zeros(n) if self._ay_zero else self.A_y @ vy
        if not self._c_zero:
            hx = hx + self.C @ vy
            hy = hy + self.C.T @ vx
        return np.concatenate([hx, hy])


def phi_s(t, s: float):
    """Smooth absolute-value surrogate |t| - s*ln(1 + |t|/s), s > 0."""
    if s <= 0:
        raise ValueError("smoothing constant s must be positive")
    a = np.abs(t)
    return a - s * np.log1p(a / s)


def phi_s_prime(t, s: float):
    """First derivative t / (s + |t|) of the smooth absolute value."""
    if s <= 0:
        raise ValueError("smoothing constant s must be positive")
    return t / (s + np.abs(t))


def phi_s_second(t, s: float):
    """Second derivative s / (s + |t|)^2 of the smooth absolute value."""
    if s <= 0:
        raise ValueError("smoothing constant s must be positive")
    return s / (s + np.abs(t)) ** 2


class SmoothLassoSaddle(SaddleOracle):
    """Augmented-Lagrangian saddle of the smoothed lasso split problem.

    Primal variable is u = [x; w] (length 2*n_feat), dual variable is y
    (length n_feat):

        0.5||Ax - b||^2 + lam * sum_j phi_s(w_j) + y'(x - w)
        + 0.5*rho*||x - w||^2
    """

    def __init__(self, A: Array, b: Array, lam: float, s: float, rho: float):
        if s <= 0:
            raise ValueError("smoothing constant s must be positive")
        if rho <= 0:
            raise ValueError("penalty rho must be positive")
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.lam = float(lam)
        self.s = float(s)
        self.rho = float(rho)
        if self.A.ndim != 2 or self.b.size != self.A.shape[0]:
            raise ValueError("A and b shapes are inconsistent")

    @property
    def n_feat(self) -> int:
        return self.A.shape[1]

    @property
    def dims(self) -> tuple[int, int]:
        return 2 * self.n_feat, self.n_feat

    def split_primal(self, u: Array) -> tuple[Array, Array]:
        n = self.n_feat
        return u[:n], u[n:]

    def value(self, z: Array) -> float:
        u, y = self.split(z)
        x, w = self.split_primal(u)
        r = self.A @ x - self.b
        gap = x - w
        val = 0.5 * (r @ r) + self.lam * phi_s(w, self.s).sum()
        return float(val + y @ gap + 0.5 * self.rho * (gap @ gap))

    def grad(self, z: Array) -> Array:
        u, y = self.split(z)
        x, w = self.split_primal(u)
        r = self.A @ x - self.b
        gap = x - w
        gx = self.A.T @ r + y + self.rho * gap
        gw = self.lam * phi_s_prime(w, self.s) - y - self.rho * gap
        return np.concatenate([gx, gw, gap])

    def hvp(self, z: Array, v: Array) -> Array:
        u, _ = self.split(z)
        _, w = self.split_primal(u)
        vu, vy = self.split(v)
        vx, vw = self.split_primal(vu)
        gap = vx - vw
        hx = self.A.T @ (self.A @ vx) + self.rho * gap + vy
        hw = self.lam * phi_s_second(w, self.s) * vw - self.rho * gap - vy
        return np.concatenate([hx, hw, gap])


def _log_sigmoid(t):
    # -ln(1 + exp(-t)), stable for large |t|
    return -np.logaddexp(0.0, -t)


class DiracGan(SaddleOracle):
    """Minimal adversarial game phi(-x'y) + phi(y'c) with logistic phi.

    ``c_data`` is the target vector; (c_data, 0) is the unique stationary
    point. The problem is concave-concave, so plain gradient play drifts to
    the saturation region of phi instead of converging.
    """

    def __init__(self, c_data: Array):
        self.c_data = np.atleast_1d(np.asarray(c_data, dtype=float))
        if self.c_data.ndim != 1 or self.c_data.size < 1:
            raise ValueError("c_data must be a nonempty vector")

    @property
    def dims(self) -> tuple[int, int]:
        n = self.c_data.size
        return n, n

    def value(self, z: Array) -> float:
        x, y = self.split(z)
        return float(_log_sigmoid(-(x @ y)) + _log_sigmoid(y @ self.c_data))

    def grad(self, z: Array) -> Array:
        x, y = self.split(z)
        u = -(x @ y)
        w = y @ self.c_data
        du = expit(-u)  # phi'(u)
        dw = expit(-w)
        gx = -du * y
        gy = -du * x + dw * self.c_data
        return np.concatenate([gx, gy])

    def hvp(self, z: Array, v: Array) -> Array:
        x, y = self.split(z)
        vx, vy = self.split(v)
        c = self.c_data
        u = -(x @ y)
        w = y @ c
        du = expit(-u)
        su = -expit(u) * expit(-u)  # phi''(u)
        sw = -expit(w) * expit(-w)
        a = y @ vx + x @ vy
        hx = su * a * y - du * vy
        hy = su * a * x - du * vx + sw * (c @ vy) * c
        return np.concatenate([hx, hy])


class CountingOracle(SaddleOracle):
    """Transparent wrapper counting value/grad/hvp calls on an oracle."""

    def __init__(self, inner: SaddleOracle):
        self.inner = inner
        self.n_value = 0
        self.n_grad = 0
        self.n_hvp = 0

    @property
    def dims(self) -> tuple[int, int]:
        return self.inner.dims

    def value(self, z: Array) -> float:
        self.n_value += 1
        return self.inner.value(z)

    def grad(self, z: Array) -> Array:
        self.n_grad += 1
        return self.inner.grad(z)

    def hvp(self, z: Array, v: Array) -> Array:
        self.n_hvp += 1
        return self.inner.hvp(z, v)

    @property
    def counts(self) -> dict[str, int]:
        return {"value": self.n_value, "grad": self.n_grad, "hvp": self.n_hvp}


def _pinned_log_uniform(k: int, kappa: float, rng: np.random.Generator) -> Array:
    """k spectrum values, log-uniform in [1, kappa], extremes pinned."""
    if k == 1:
        if kappa != 1.0:
            raise ValueError("a single-value spectrum cannot realize kappa > 1")
        return np.ones(1)
    vals = np.exp(rng.uniform(0.0, np.log(kappa), size=k))
    vals = np.sort(vals)[::-1]
    vals[0] = kappa
    vals[-1] = 1.0
    return vals


def _general_conditioned(rows: int, cols: int, kappa: float, rng) -> Array:
    g = rng.standard_normal((rows, cols))
    u, _, vt = np.linalg.svd(g, full_matrices=False)
    vals = _pinned_log_uniform(min(rows, cols), kappa, rng)
    return (u * vals) @ vt


def _symmetric_conditioned(n: int, kappa: float, sign: float, rng) -> Array:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = sign * _pinned_log_uniform(n, kappa, rng)
    a = (q * vals) @ q.T
    return 0.5 * (a + a.T)


def conditioned_matrix(rows: int, cols: int, kappa: float, seed: int,
                       mode: str = GENERAL) -> Array:
    """Random matrix with an exactly realized condition number.

    The spectrum is drawn log-uniformly in [1, kappa] with the extreme
    values pinned to 1 and kappa, so the realized condition number equals
    ``kappa`` exactly. ``general`` rebuilds U diag(sigma) V' from the SVD of
    an i.i.d. Gaussian matrix; the symmetric modes rebuild Q diag(lam) Q'
    from the QR factor of a Gaussian matrix (eigenvalues negated for
    ``sym_neg_def``).
    """
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    if kappa < 1.0:
        raise ValueError("condition number must be >= 1")
    rng = np.random.default_rng(seed)
    if mode == GENERAL:
        return _general_conditioned(rows, cols, kappa, rng)
    if mode in (SYM_POS_DEF, SYM_NEG_DEF):
        if rows != cols:
            raise ValueError("symmetric modes require a square matrix")
        sign = 1.0 if mode == SYM_POS_DEF else -1.0
        return _symmetric_conditioned(rows, kappa, sign, rng)
    raise ValueError(f"unknown mode {mode!r}")


def make_quadratic(M: int, N: int, kappa_x: float | None = None,
                   kappa_y: float | None = None, kappa_c: float | None = None,
                   bilinear: bool = False, seed: int = 0) -> QuadraticSaddle:
    """Generate a quadratic saddle instance with prescribed conditioning.

    With ``bilinear=False`` the diagonal blocks are definite with the
    requested condition numbers and C is a general conditioned matrix (zero
    when ``kappa_c`` is None, the separable setting); linear terms are
    standard normal. With ``bilinear=True`` both diagonal blocks are zero,
    C is full rank, M must equal N so the solution is unique, and the
    linear terms vanish (the optimum is the origin).
    """
    if M < 1 or N < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    if bilinear:
        if M != N:
            raise ValueError("the bilinear setting requires M == N")
        kc = 1.0 if kappa_c is None else float(kappa_c)
        C = _general_conditioned(M, N, kc, rng)
        zero_x = np.zeros((M, M))
        zero_y = np.zeros((N, N))
        return QuadraticSaddle(zero_x, zero_y, C, np.zeros(M), np.zeros(N))
    if kappa_x is None or kappa_y is None:
        raise ValueError("kappa_x and kappa_y are required unless bilinear")
    A_x = _symmetric_conditioned(M, float(kappa_x), 1.0, rng)
    A_y = _symmetric_conditioned(N, float(kappa_y), -1.0, rng)
    if kappa_c is None:
        C = np.zeros((M, N))
    else:
        C = _general_conditioned(M, N, float(kappa_c), rng)
    b_x = rng.standard_normal(M)
    b_y = rng.standard_normal(N)
    return QuadraticSaddle(A_x, A_y, C, b_x, b_y)


def quadratic_solution(p: QuadraticSaddle) -> PrimalDualPoint:
    """Unique stationary point of a quadratic saddle via the stacked system.

    Solves [[A_x, C], [C', A_y]] z = -[b_x; b_y]. Raises
    ``NoUniqueSolutionError`` when the stacked matrix is singular.
    """
    m, n = p.dims
    K = np.block([[p.A_x, p.C], [p.C.T, p.A_y]])
    rhs = -np.concatenate([p.b_x, p.b_y])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolutionError("stacked stationarity system is singular") from exc
    scale = 1.0 + float(np.linalg.norm(rhs))
    if not np.isfinite(sol).all() or np.linalg.norm(K @ sol - rhs) > 1e-8 * scale:
        raise NoUniqueSolutionError("stacked stationarity system is numerically singular")
    return PrimalDualPoint(sol[:m], sol[m:])


def make_dirac(N: int, seed: int = 0) -> DiracGan:
    """Adversarial toy instance with a standard-normal target vector."""
    rng = np.random.default_rng(seed)
    return DiracGan(rng.standard_normal(N))


def make_smooth_lasso(m_rows: int = 150, n_feat: int = 500, s: float = 1e-3,
                      rho: float = 1.0, lam: float | None = None,
                      seed: int = 0) -> SmoothLassoSaddle:
    """Smoothed-lasso instance: normalized Gaussian design, sparse truth.

    ``lam`` defaults to 0.1 * ||A'b||_inf.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m_rows, n_feat))
    A /= np.linalg.norm(A, axis=0)
    nnz = max(1, n_feat // 50)
    support = rng.choice(n_feat, size=nnz, replace=False)
    x_true = np.zeros(n_feat)
    x_true[support] = rng.standard_normal(nnz)
    b = A @ x_true + np.sqrt(1e-3) * rng.standard_normal(m_rows)
    if lam is None:
        lam = 0.1 * float(np.abs(A.T @ b).max())
    return SmoothLassoSaddle(A, b, lam, s, rho)


def eval_oracle(problem: SaddleOracle, z) -> tuple[float, Array, callable]:
    """Evaluate a problem at a point, with dimension checks.

    Returns ``(value, grad, hvp)`` where ``hvp(v)`` maps a direction of
    length M + N to the exact Hessian-vector product at ``z``.
    """
    zv = z.z if isinstance(z, PrimalDualPoint) else np.asarray(z, dtype=float)
    if zv.shape != (problem.size,):
        raise ValueError(f"point has length {zv.size}, expected {problem.size}")

    def hvp(v: Array) -> Array:
        v = np.asarray(v, dtype=float)
        if v.shape != (problem.size,):
            raise ValueError(f"direction has length {v.size}, expected {problem.size}")
        return problem.hvp(zv, v)

    return problem.value(zv), problem.grad(zv), hvp


def save_matrix(path, a: Array) -> None:
    """Dump a 2-D matrix as little-endian float64 with a 16-byte header."""
    a = np.ascontiguousarray(a, dtype="<f8")
    if a.ndim != 2:
        raise ValueError("only 2-D matrices are supported")
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<8sII", _MATRIX_MAGIC, rows, cols))
        fh.write(a.tobytes())


def load_matrix(path) -> Array:
    """Read a matrix written by ``save_matrix``."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        magic, rows, cols = struct.unpack("<8sII", header)
        if magic != _MATRIX_MAGIC:
            raise ValueError(f"{path}: not a saddlebench matrix file")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: truncated matrix payload")
    return data.reshape(rows, cols).copy()
