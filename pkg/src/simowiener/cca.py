"""Linear blind SIMO channel identification.

Delay-embedded data matrices and the two generalized eigenproblems that
estimate FIR channels from output cross-relations: the CCA form (energy
constraint on the filtered outputs, largest eigenvalue) and the LS form
(norm constraint on the filters, smallest eigenvalue).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .numerics import GevProblem, solve_gev


@dataclass(frozen=True)
class DelayEmbedding:
    """Rows ``[v[t+L-1], ..., v[t]]`` for ``t = 0 .. N-L``."""

    source: np.ndarray
    order: int
    matrix: np.ndarray

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ChannelEstimate:
    h_hat: np.ndarray  # (P, L); the stacked vector has unit norm
    rho: float


def embed(v, order: int) -> DelayEmbedding:
    v = np.asarray(v, dtype=float).ravel()
    if order < 1:
        raise ValueError("order must be at least 1")
    if v.size < 2 * order - 1:
        raise ValueError(f"need at least {2 * order - 1} samples for order {order}, got {v.size}")
    matrix = sliding_window_view(v, order)[:, ::-1].copy()
    return DelayEmbedding(source=v, order=order, matrix=matrix)


def _centered(embeddings) -> list[np.ndarray]:
    rows = {e.rows for e in embeddings}
    orders = {e.order for e in embeddings}
    if len(rows) != 1 or len(orders) != 1:
        raise ValueError("all embeddings must share the same order and row count")
    return [e.matrix - e.matrix.mean(axis=0) for e in embeddings]


def cross_relation_pencil(blocks: list[np.ndarray], ridge: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the P-channel CCA pencil from per-branch data matrices.

    Block ``(i, j)`` of the first matrix is ``X_j^T X_i`` (zero on the
    diagonal); diagonal block ``i`` of the second is ``sum_{j != i} X_j^T X_j``,
    plus ``ridge * I``.
    """
    p = len(blocks)
    if p < 2:
        raise ValueError("need at least two branches")
    order = blocks[0].shape[1]
    grams = [[blocks[j].T @ blocks[i] for j in range(p)] for i in range(p)]
    r = np.zeros((p * order, p * order))
    d = np.zeros_like(r)
    total = sum(grams[j][j] for j in range(p))
    for i in range(p):
        si = slice(i * order, (i + 1) * order)
        for j in range(i + 1, p):
            sj = slice(j * order, (j + 1) * order)
            r[si, sj] = grams[i][j]
            r[sj, si] = grams[i][j].T
        d[si, si] = total - grams[i][i] + ridge * np.eye(order)
    return r, d


def cca_channels(embeddings, ridge: float = 0.0) -> ChannelEstimate:
    """Estimate P channels from the principal eigenvector of the CCA pencil.

    Embedded columns are centered first. ``ridge`` adds ``ridge * I`` to the
    energy side; the plain CCA solution is ``ridge = 0``.
    """
    blocks = _centered(embeddings)
    r, d = cross_relation_pencil(blocks, ridge)
    sol = solve_gev(GevProblem(r, d, "largest"))
    return ChannelEstimate(sol.eigenvector.reshape(len(blocks), -1), sol.eigenvalue)


def ls_channels(embeddings) -> ChannelEstimate:
    """Two-channel LS estimate under ``||h1||^2 + ||h2||^2 = 1``.

    ``rho`` is the attained smallest eigenvalue, i.e. the residual energy
    ``||X1 h2 - X2 h1||^2``.
    """
    if len(embeddings) != 2:
        raise ValueError(f"the LS method needs exactly two branches, got {len(embeddings)}")
    x1, x2 = _centered(embeddings)
    a = np.block([[x2.T @ x2, -(x2.T @ x1)], [-(x1.T @ x2), x1.T @ x1]])
    a = 0.5 * (a + a.T)
    sol = solve_gev(GevProblem(a, np.eye(a.shape[0]), "smallest"))
    return ChannelEstimate(sol.eigenvector.reshape(2, -1), sol.eigenvalue)
