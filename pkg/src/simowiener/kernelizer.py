"""Gaussian-kernel machinery for the inverse-nonlinearity estimates.

Bandwidth selection, centered low-rank kernel factors ``K ~= G G^T`` and
evaluation of kernel expansions ``g(t) = sum_m alpha[m] G-coordinate_m(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .numerics import incomplete_cholesky


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``exp(-(x - x')^2 / (2 width^2))``."""

    width: float

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise ValueError(f"kernel width must be finite and positive, got {self.width}")


def _silverman(std: float, iqr: float, n: int) -> float:
    return min(std, iqr / 1.34) * n ** (-0.2)


def silverman_bandwidth(data) -> KernelSpec:
    """Silverman's rule ``min(std, IQR / 1.34) * N^(-1/5)``.

    ``std`` uses the ``N - 1`` normalization; quartiles are linearly
    interpolated.
    """
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 2:
        raise ValueError("need at least two samples for a bandwidth")
    q1, q3 = np.percentile(data, [25, 75])
    width = _silverman(np.std(data, ddof=1), q3 - q1, data.size)
    if not width > 0:
        raise ValueError("degenerate bandwidth: data has no spread")
    return KernelSpec(width)


def gaussian_kernel(x, x_prime, spec: KernelSpec):
    d = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    return np.exp(-(d**2) / (2 * spec.width**2))


@dataclass(frozen=True)
class LowRankFactor:
    """Low-rank factor ``g`` (N x M) of the kernel matrix over ``base_points``.

    ``pivots`` and ``pivot_rows`` (the uncentered rows ``G[pivots]``, lower
    triangular) are kept so that new points can be mapped into the same
    coordinates. ``col_means`` holds the means removed by centering.
    """

    g: np.ndarray
    base_points: np.ndarray
    spec: KernelSpec
    pivots: np.ndarray
    pivot_rows: np.ndarray
    col_means: np.ndarray
    centered: bool = False

    @property
    def rank(self) -> int:
        return self.g.shape[1]

    def coordinates(self, query) -> np.ndarray:
        """Centered (if applicable) low-rank coordinates of query points, shape (Q, M)."""
        t = np.atleast_1d(np.asarray(query, dtype=float))
        k = gaussian_kernel(t[:, None], self.base_points[self.pivots][None, :], self.spec)
        # Same recursion that produced the factor rows: G[n] L^T = K[n, pivots].
        coords = linalg.solve_triangular(self.pivot_rows, k.T, lower=True).T
        return coords - self.col_means


def build_lowrank_factor(data, spec: KernelSpec, precision: float = 1e-8) -> LowRankFactor:
    """Incomplete Cholesky factor of the Gaussian kernel matrix of ``data`` (uncentered)."""
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 2:
        raise ValueError("need at least two data points")

    def kernel_eval(i, j):
        return gaussian_kernel(data[i], data[j], spec)

    icd = incomplete_cholesky(kernel_eval, data.size, precision)
    return LowRankFactor(
        g=icd.g,
        base_points=data,
        spec=spec,
        pivots=icd.pivots,
        pivot_rows=icd.g[icd.pivots],
        col_means=np.zeros(icd.g.shape[1]),
    )


def center_factor(factor: LowRankFactor) -> LowRankFactor:
    """Center the factor in feature space by removing its column means."""
    if factor.centered:
        raise ValueError("factor is already centered")
    means = factor.g.mean(axis=0)
    return replace(factor, g=factor.g - means, col_means=means, centered=True)


@dataclass(frozen=True)
class KernelExpansion:
    coefficients: np.ndarray
    factor: LowRankFactor

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).ravel()
        if coef.size != self.factor.rank:
            raise ValueError(f"expected {self.factor.rank} coefficients, got {coef.size}")
        object.__setattr__(self, "coefficients", coef)

    def __call__(self, query):
        return eval_expansion(self, query)


def eval_expansion(expansion: KernelExpansion, query):
    """Evaluate the estimated nonlinearity at ``query`` (scalar or array).

    At a base point ``x[n]`` this reproduces ``(G @ alpha)[n]`` because the
    query is mapped through the same pivot recursion that built row ``n``.
    """
    values = expansion.factor.coordinates(query) @ expansion.coefficients
    return float(values[0]) if np.ndim(query) == 0 else values
