"""Source recovery from an identified linear SIMO subsystem, and metrics.

Blind estimates carry an unknown gain (and sign), so every metric first
fits the scalar ``gamma`` minimizing ``||truth - gamma * estimate||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg


class UnequalizableError(np.linalg.LinAlgError):
    """The stacked convolution operator does not have full column rank."""


@dataclass(frozen=True)
class EqualizerResult:
    s_hat: np.ndarray
    method: str
    delay: int = 0


@dataclass(frozen=True)
class MetricReport:
    mse: float
    ber: float
    channel_nmse: tuple
    nonlinearity_rmse: tuple = ()


def convolution_matrix(h, n: int) -> np.ndarray:
    """``n x n`` lower-triangular Toeplitz operator of ``h`` (zero prehistory)."""
    h = np.asarray(h, dtype=float).ravel()
    col = np.zeros(n)
    col[: min(n, h.size)] = h[:n]
    row = np.zeros(n)
    row[0] = col[0]
    return linalg.toeplitz(col, row)


def equalize(h_hats, y_hats, method: str = "zf", noise_var: float | None = None) -> EqualizerResult:
    """Jointly invert ``y_i = h_i * s`` over all branches.

    ZF is the least-squares solution of the stacked system; MMSE adds
    ``noise_var * I`` to its normal equations.
    """
    y_hats = np.atleast_2d(np.asarray(y_hats, dtype=float))
    h_hats = np.atleast_2d(np.asarray(h_hats, dtype=float))
    if h_hats.shape[0] != y_hats.shape[0]:
        raise ValueError("need one channel per branch signal")
    n = y_hats.shape[1]
    big = np.vstack([convolution_matrix(h, n) for h in h_hats])
    rhs = y_hats.ravel()
    u, sv, vt = linalg.svd(big, full_matrices=False)
    if sv[-1] <= sv[0] * max(big.shape) * np.finfo(float).eps:
        raise UnequalizableError("stacked channel operator is rank deficient")
    if method == "zf":
        s_hat = vt.T @ ((u.T @ rhs) / sv)
    elif method == "mmse":
        if noise_var is None or noise_var < 0:
            raise ValueError("mmse needs a non-negative noise_var")
        s_hat = vt.T @ (sv * (u.T @ rhs) / (sv**2 + noise_var))
    else:
        raise ValueError(f"unknown method {method!r}; expected 'zf' or 'mmse'")
    return EqualizerResult(s_hat=s_hat, method=method)


def _gain(truth: np.ndarray, estimate: np.ndarray) -> float:
    energy = float(estimate @ estimate)
    if not energy > 0:
        raise ValueError("estimate is identically zero")
    return float(truth @ estimate) / energy


def aligned_mse(s_true, s_hat) -> float:
    """``||s - gamma* s_hat||^2 / ||s||^2`` with the optimal scalar ``gamma*``."""
    s_true = np.asarray(s_true, dtype=float).ravel()
    s_hat = np.asarray(s_hat, dtype=float).ravel()
    if s_true.shape != s_hat.shape:
        raise ValueError("length mismatch")
    err = s_true - _gain(s_true, s_hat) * s_hat
    return float(err @ err) / float(s_true @ s_true)


def ber(s_true_binary, s_hat) -> float:
    s_true = np.asarray(s_true_binary, dtype=float).ravel()
    s_hat = np.asarray(s_hat, dtype=float).ravel()
    if not np.all(np.isin(s_true, (-1.0, 1.0))):
        raise ValueError("reference must be a +-1 sequence")
    decided = np.where(_gain(s_true, s_hat) * s_hat >= 0, 1.0, -1.0)
    return float(np.mean(decided != s_true))


def channel_nmse(h_true, h_hat) -> float:
    return aligned_mse(h_true, h_hat)


def align(truth, estimate) -> np.ndarray:
    """``estimate`` rescaled by the least-squares gain onto ``truth``."""
    estimate = np.asarray(estimate, dtype=float)
    return _gain(np.asarray(truth, dtype=float).ravel(), estimate.ravel()) * estimate
