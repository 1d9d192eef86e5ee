"""Dense linear-algebra kernels.

Symmetric-definite generalized eigensolver (Cholesky reduction), nearest
Kronecker-product factorization through the SVD, and greedy pivoted
incomplete Cholesky decomposition of kernel matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import linalg


class SingularPencilError(np.linalg.LinAlgError):
    """Raised when the B-side of a pencil cannot be factorized, even with jitter."""


class NotPSDError(np.linalg.LinAlgError):
    """Raised when an incomplete Cholesky pivot is clearly negative."""


@dataclass(frozen=True)
class GevProblem:
    """Symmetric pencil ``a v = rho b v`` with an eigenvalue selection policy.

    Parameters
    ----------
    a : ndarray, shape (n, n)
        Symmetric matrix.
    b : ndarray, shape (n, n)
        Symmetric positive (semi)definite matrix.
    select : {"largest", "smallest"}
        Which end of the spectrum to return.
    """

    a: np.ndarray
    b: np.ndarray
    select: Literal["largest", "smallest"] = "largest"

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"a must be square, got shape {a.shape}")
        if b.shape != a.shape:
            raise ValueError(f"dimension mismatch: a is {a.shape}, b is {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("pencil has non-finite entries")
        if self.select not in ("largest", "smallest"):
            raise ValueError(f"select must be 'largest' or 'smallest', got {self.select!r}")
        for name, m in (("a", a), ("b", b)):
            scale = max(np.abs(m).max(), np.finfo(float).tiny)
            if np.abs(m - m.T).max() > 1e-12 * scale:
                raise ValueError(f"{name} is not symmetric")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class GevSolution:
    eigenvalue: float
    eigenvector: np.ndarray


def _leading_sign(v: np.ndarray, rel_tol: float = 1e-12) -> float:
    big = np.abs(v).max() if v.size else 0.0
    if big == 0.0:
        return 1.0
    k = np.flatnonzero(np.abs(v) > rel_tol * big)[0]
    return -1.0 if v[k] < 0 else 1.0


def sign_normalize(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that its first non-negligible component is positive."""
    v = np.asarray(v, dtype=float)
    return _leading_sign(v) * v


def _cholesky_with_jitter(b: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(b, lower=True)
    except linalg.LinAlgError:
        pass
    n = b.shape[0]
    eps = 1e-12 * np.trace(b) / n
    if not eps > 0:
        raise SingularPencilError("singular pencil: b has non-positive trace")
    try:
        return linalg.cholesky(b + eps * np.eye(n), lower=True)
    except linalg.LinAlgError as exc:
        raise SingularPencilError("singular pencil: b is not positive definite") from exc


def solve_gev(problem: GevProblem) -> GevSolution:
    """Return the extreme eigenpair of a symmetric-definite pencil.

    The pencil is reduced to the standard symmetric problem
    ``C u = rho u`` with ``C = L^-1 a L^-T`` and ``b = L L^T``. A jitter of
    ``1e-12 * trace(b) / n`` is added to ``b`` only when its plain Cholesky
    factorization fails.

    The eigenvector is returned with unit Euclidean norm and its first
    nonzero component positive.
    """
    lower = _cholesky_with_jitter(problem.b)
    tmp = linalg.solve_triangular(lower, problem.a, lower=True)
    c = linalg.solve_triangular(lower, tmp.T, lower=True)
    c = 0.5 * (c + c.T)
    n = c.shape[0]
    idx = n - 1 if problem.select == "largest" else 0
    w, u = linalg.eigh(c, subset_by_index=[idx, idx])
    v = linalg.solve_triangular(lower.T, u[:, 0], lower=False)
    v = sign_normalize(v / np.linalg.norm(v))
    return GevSolution(eigenvalue=float(w[0]), eigenvector=v)


def nearest_kronecker_rank1(v: np.ndarray, rows_l: int, cols_m: int) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``v`` into the Frobenius-nearest Kronecker product ``h ⊗ alpha``.

    ``v[l * cols_m + m]`` is read as entry ``(l, m)`` of an ``rows_l x cols_m``
    matrix, i.e. consecutive blocks of ``cols_m`` entries are its rows (the
    columns of the transposed ``M x L`` arrangement). The leading singular
    pair of that matrix gives ``h`` (unit norm, first nonzero entry positive)
    and ``alpha`` (carrying the singular value).
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.size != rows_l * cols_m:
        raise ValueError(f"length mismatch: {v.size} != {rows_l} * {cols_m}")
    if not np.any(v):
        raise ValueError("degenerate rank-1 factorization: zero input")
    u, s, vt = np.linalg.svd(v.reshape(rows_l, cols_m), full_matrices=False)
    sign = _leading_sign(u[:, 0])
    return sign * u[:, 0], sign * s[0] * vt[0]


@dataclass(frozen=True)
class IncompleteCholesky:
    """Result of :func:`incomplete_cholesky`.

    ``g`` approximates the kernel matrix as ``g @ g.T``; ``pivots`` lists the
    selected indices in order, so ``g[pivots]`` is lower triangular.
    """

    g: np.ndarray
    pivots: np.ndarray
    residual_trace: float


def incomplete_cholesky(
    kernel_eval: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    precision: float,
    max_rank: int | None = None,
) -> IncompleteCholesky:
    """Greedy pivoted incomplete Cholesky decomposition ``K ~= G G^T``.

    Parameters
    ----------
    kernel_eval : callable
        ``kernel_eval(i, j)`` returns ``K[i, j]``. It is called with integer
        index arrays and must broadcast like a numpy ufunc.
    n : int
        Number of points.
    precision : float
        Stop once the trace of the residual ``K - G G^T`` is at most this.
    max_rank : int, optional
        Hard cap on the number of columns.

    Returns
    -------
    IncompleteCholesky
    """
    if precision <= 0:
        raise ValueError("precision must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    max_rank = n if max_rank is None else min(max_rank, n)
    idx = np.arange(n)
    diag = np.asarray(kernel_eval(idx, idx), dtype=float).copy()
    trace0 = float(diag.sum())
    neg_tol = 1e-10 * abs(trace0)
    if np.any(diag < -neg_tol):
        raise NotPSDError("kernel matrix is not PSD: negative diagonal")
    g = np.zeros((n, max_rank))
    pivots = []
    residual = float(np.clip(diag, 0.0, None).sum())
    k = 0
    while k < max_rank and residual > precision:
        p = int(np.argmax(diag))
        pivot = diag[p]
        if pivot <= 0.0:
            break
        root = np.sqrt(pivot)
        col = np.asarray(kernel_eval(idx, np.full(n, p)), dtype=float)
        col = (col - g[:, :k] @ g[p, :k]) / root
        col[pivots] = 0.0
        col[p] = root
        g[:, k] = col
        pivots.append(p)
        diag = diag - col**2
        diag[pivots] = 0.0
        if np.any(diag < -neg_tol):
            raise NotPSDError(f"kernel matrix is not PSD: residual diagonal {diag.min():.3e}")
        residual = float(np.clip(diag, 0.0, None).sum())
        k += 1
    return IncompleteCholesky(g=g[:, :k].copy(), pivots=np.array(pivots, dtype=int), residual_trace=residual)
