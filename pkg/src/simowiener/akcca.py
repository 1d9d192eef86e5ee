"""Alternating CCA / kernel-CCA blind identification of SIMO Wiener systems.

Each branch output ``x_i`` is mapped through an estimated inverse
nonlinearity ``g_i`` (a kernel expansion over a centered low-rank factor
``G_i``), giving ``y_hat_i = G_i alpha_i``. The channels ``h_i`` and the
coefficients ``alpha_i`` are then fitted so that the cross-filtered signals
``z_ij = h_j * y_hat_i`` agree for every pair of branches. The loop alternates
two generalized eigenproblems: plain CCA over ``h`` with ``alpha`` fixed, and
regularized kernel CCA over ``alpha`` with ``h`` fixed.

All time-indexed matrices use the rows ``t = L-1 .. N-1`` (0-based), where
every lag is defined, and their columns are centered over those rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cca import ChannelEstimate, cca_channels, embed
from .kernelizer import (
    KernelExpansion,
    LowRankFactor,
    build_lowrank_factor,
    center_factor,
    silverman_bandwidth,
)
from .numerics import GevProblem, nearest_kronecker_rank1, solve_gev

logger = logging.getLogger(__name__)

INITS = ("identity", "kronecker_svd")


@dataclass(frozen=True)
class AkccaConfig:
    order: int
    c: float = 1e-5
    icd_precision: float = 1e-8
    conv_tol: float = 1e-10
    max_iters: int = 200
    init: str = "identity"
    shared_nonlinearity: bool = False

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("channel order must be at least 2")
        if self.c < 0:
            raise ValueError("regularization c must be non-negative")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init!r}")


@dataclass(frozen=True)
class WStack:
    """Matrices ``W_ij`` (T x M_i), ``z_ij = W_ij @ alpha_i``, for all ordered pairs."""

    w: dict
    n_branches: int

    def z(self, alphas) -> dict:
        return {(i, j): w @ alphas[i] for (i, j), w in self.w.items()}


@dataclass
class AkccaEstimate:
    h_hat: np.ndarray  # (P, L), stacked unit norm
    alphas: list  # KernelExpansion per branch (one shared when shared_nonlinearity)
    y_hat: np.ndarray  # (P, N)
    cost_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    initial_cost: float = np.nan  # cost of the initial y_hat under its CCA-optimal channels
    factors: list = field(default_factory=list)

    @property
    def ranks(self) -> list[int]:
        return [f.rank for f in self.factors]

    def expansion(self, branch: int) -> KernelExpansion:
        return self.alphas[0] if len(self.alphas) == 1 else self.alphas[branch]


class KccaSolution(NamedTuple):
    alphas: list
    rho: float


def build_w(g: np.ndarray | LowRankFactor, h: np.ndarray) -> np.ndarray:
    """``W[t, m] = sum_l h[l] G[t + L - 1 - l, m]`` over the valid rows."""
    g = g.g if isinstance(g, LowRankFactor) else np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float).ravel()
    order = h.size
    n = g.shape[0]
    if n < 2 * order - 1:
        raise ValueError(f"need at least {2 * order - 1} rows, got {n}")
    rows = n - order + 1
    w = np.zeros((rows, g.shape[1]))
    for lag, tap in enumerate(h):
        w += tap * g[order - 1 - lag : order - 1 - lag + rows]
    return w


def build_wstack(gs, h_hat) -> WStack:
    """All ``W_ij`` from branch factors ``gs[i]`` and channels ``h_hat[j]``, column-centered.

    Centering matches the column centering the CCA stage applies to the
    embedded ``y_hat``, so both stages see the same ``z_ij``.
    """
    p = len(gs)
    w = {}
    for i in range(p):
        for j in range(p):
            if i != j:
                wij = build_w(gs[i], h_hat[j])
                w[(i, j)] = wij - wij.mean(axis=0)
    return WStack(w=w, n_branches=p)


def kcca_pencil(wstack: WStack, c: float, shared: bool = False) -> tuple[np.ndarray, np.ndarray]:
    p = wstack.n_branches
    w = wstack.w
    if shared:
        r = sum(w[(i, j)].T @ w[(j, i)] for (i, j) in w)
        d = sum(w[(i, j)].T @ w[(i, j)] for (i, j) in w)
        r = 0.5 * (r + r.T)
        return r, d + c * np.eye(d.shape[0])
    ranks = [w[(i, (i + 1) % p)].shape[1] for i in range(p)]
    offsets = np.concatenate([[0], np.cumsum(ranks)])
    size = offsets[-1]
    r = np.zeros((size, size))
    d = np.zeros((size, size))
    for i in range(p):
        si = slice(offsets[i], offsets[i + 1])
        d[si, si] = sum(w[(i, j)].T @ w[(i, j)] for j in range(p) if j != i)
        for j in range(i + 1, p):
            sj = slice(offsets[j], offsets[j + 1])
            block = w[(i, j)].T @ w[(j, i)]
            r[si, sj] = block
            r[sj, si] = block.T
    return r, d + c * np.eye(size)


def kcca_step(wstack: WStack, config: AkccaConfig) -> KccaSolution:
    """Regularized kernel CCA over the expansion coefficients with channels fixed.

    The principal eigenvector is scaled so that
    ``sum ||W_ij alpha_i||^2 + c sum ||alpha_i||^2 = 1``.
    """
    shared = config.shared_nonlinearity
    r, d = kcca_pencil(wstack, config.c, shared)
    sol = solve_gev(GevProblem(r, d, "largest"))
    v = sol.eigenvector / np.sqrt(sol.eigenvector @ d @ sol.eigenvector)
    if shared:
        return KccaSolution([v], sol.eigenvalue)
    p = wstack.n_branches
    ranks = [wstack.w[(i, (i + 1) % p)].shape[1] for i in range(p)]
    return KccaSolution(np.split(v, np.cumsum(ranks)[:-1]), sol.eigenvalue)


def cca_step(y_hats, order: int) -> ChannelEstimate:
    return cca_channels([embed(y, order) for y in y_hats])


def cost(z_pairs: dict) -> float:
    """Pairwise disagreement ``sum_{i<j} ||z_ij - z_ji||^2`` at unit total energy.

    The stacked ``z`` is rescaled so that ``sum_{i != j} ||z_ij||^2 = 1``
    first; for two branches this is ``||z_1 - z_2||^2`` with
    ``||z_1||^2 + ||z_2||^2 = 1``.
    """
    energy = sum(float(z @ z) for z in z_pairs.values())
    if not energy > 0:
        raise ValueError("degenerate cost: all z are zero")
    total = 0.0
    for (i, j), z in z_pairs.items():
        if i < j:
            diff = z - z_pairs[(j, i)]
            total += float(diff @ diff)
    return total / energy


def _z_from_signals(y_hats, h_hat) -> dict:
    order = h_hat.shape[1]
    blocks = [embed(y, order).matrix for y in y_hats]
    blocks = [b - b.mean(axis=0) for b in blocks]
    p = len(blocks)
    return {(i, j): blocks[i] @ h_hat[j] for i in range(p) for j in range(p) if i != j}


def prepare_factors(x: np.ndarray, config: AkccaConfig) -> list[LowRankFactor]:
    """Centered low-rank kernel factors: one per branch, or one over all data when shared."""
    if config.shared_nonlinearity:
        data = x.ravel()
        return [center_factor(build_lowrank_factor(data, silverman_bandwidth(data), config.icd_precision))]
    return [
        center_factor(build_lowrank_factor(xi, silverman_bandwidth(xi), config.icd_precision))
        for xi in x
    ]


def _branch_blocks(factors, p: int, n: int) -> list[np.ndarray]:
    if len(factors) == 1 and p > 1:
        return [factors[0].g[i * n : (i + 1) * n] for i in range(p)]
    return [f.g for f in factors]


def init_kronecker_svd(gs, config: AkccaConfig) -> tuple[np.ndarray, list]:
    """Two-branch initializer from the unstructured problem over ``r_j = h_j ⊗ alpha_i``.

    ``z_1 = Wbar_1 r_2`` and ``z_2 = Wbar_2 r_1`` with
    ``Wbar_i[t, l M + m] = G_i[t + L - 1 - l, m]``. The regularized CCA
    solution for ``(r_1, r_2)`` is projected onto Kronecker structure with a
    rank-1 SVD of each ``r``.

    Returns the channels, shape (2, L), and the coefficients ``[alpha_1, alpha_2]``.
    """
    if len(gs) != 2:
        raise ValueError("the Kronecker/SVD initializer is defined for two branches")
    order = config.order
    wbar = []
    for g in gs:
        cols = [build_w(g, np.eye(order)[lag]) for lag in range(order)]
        wb = np.hstack(cols)
        wbar.append(wb - wb.mean(axis=0))
    w1, w2 = wbar
    n1, n2 = w1.shape[1], w2.shape[1]
    # unknown vector [r_1; r_2]; r_1 feeds z_2 = Wbar_2 r_1, r_2 feeds z_1 = Wbar_1 r_2
    r = np.zeros((n2 + n1, n2 + n1))
    d = np.zeros_like(r)
    r[:n2, n2:] = w2.T @ w1
    r[n2:, :n2] = r[:n2, n2:].T
    d[:n2, :n2] = w2.T @ w2 + config.c * np.eye(n2)
    d[n2:, n2:] = w1.T @ w1 + config.c * np.eye(n1)
    sol = solve_gev(GevProblem(r, d, "largest"))
    r1, r2 = sol.eigenvector[:n2], sol.eigenvector[n2:]
    h1, alpha2 = nearest_kronecker_rank1(r1, order, gs[1].shape[1])
    h2, alpha1 = nearest_kronecker_rank1(r2, order, gs[0].shape[1])
    h = np.vstack([h1, h2])
    return h / np.linalg.norm(h), [alpha1, alpha2]


def run_akcca(x, config: AkccaConfig) -> AkccaEstimate:
    """Blind identification of a SIMO Wiener system from its outputs.

    Parameters
    ----------
    x : array_like, shape (P, N)
        Branch outputs.
    config : AkccaConfig

    Returns
    -------
    AkccaEstimate
        ``cost_history[k]`` is the cost after the k-th CCA + KCCA sweep.
        Iteration stops when two consecutive costs differ by less than
        ``conv_tol``; hitting ``max_iters`` returns with ``converged=False``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p, n = x.shape
    order = config.order
    if p < 2:
        raise ValueError("need at least two branches")
    if n < 2 * order - 1:
        raise ValueError(f"need at least {2 * order - 1} samples for order {order}, got {n}")

    factors = prepare_factors(x, config)
    gs = _branch_blocks(factors, p, n)

    init = config.init
    if init == "kronecker_svd" and p != 2:
        logger.warning("Kronecker/SVD initialization is only defined for P=2; using identity init")
        init = "identity"
    if init == "kronecker_svd" and config.shared_nonlinearity:
        logger.warning("Kronecker/SVD initialization does not support a shared nonlinearity; using identity init")
        init = "identity"
    if init == "identity":
        y_hat = x.copy()
    else:
        _, alphas0 = init_kronecker_svd(gs, config)
        y_hat = np.vstack([g @ a for g, a in zip(gs, alphas0)])
    # The loop state is y_hat alone (its first step re-fits the channels), so
    # every initializer is scored with the CCA-optimal channels for its y_hat.
    h_init = cca_step(y_hat, order).h_hat
    initial_cost = cost(_z_from_signals(y_hat, h_init))

    history: list[float] = []
    converged = False
    h_hat = h_init
    alphas = None
    for _ in range(config.max_iters):
        h_hat = cca_step(y_hat, order).h_hat
        wstack = build_wstack(gs, h_hat)
        alphas = kcca_step(wstack, config).alphas
        coef = alphas * p if config.shared_nonlinearity else alphas
        y_hat = np.vstack([g @ a for g, a in zip(gs, coef)])
        history.append(cost(wstack.z(coef)))
        if len(history) >= 2 and abs(history[-1] - history[-2]) < config.conv_tol:
            converged = True
            break

    expansions = [KernelExpansion(a, f) for a, f in zip(alphas, factors)]
    return AkccaEstimate(
        h_hat=h_hat,
        alphas=expansions,
        y_hat=y_hat,
        cost_history=history,
        iterations=len(history),
        converged=converged,
        initial_cost=initial_cost,
        factors=factors,
    )
