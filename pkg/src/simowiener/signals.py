"""Ground-truth SIMO Wiener system simulation.

A SIMO Wiener system drives ``P`` branches with one source ``s[n]``; branch
``i`` filters it with an FIR channel ``h_i`` and passes the result through a
memoryless monotone nonlinearity ``f_i``::

    y_i[n] = sum_l h_i[l] s[n - l]          (s[k] = 0 for k < 0)
    x_i[n] = f_i(y_i[n]) + noise_std_i * w_i[n]
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import signal

SOURCE_KINDS = ("gaussian_iid", "colored", "binary")

# Impulse responses h_i[0..4] of the five reference channels.
CHANNELS = {
    1: (0.4115, 0.4165, 0.2249, -0.0233, -2.1971),
    2: (-0.5734, 0.1021, -0.1259, -0.4176, 0.6657),
    3: (1.4255, 0.6457, -0.9509, -0.1657, -0.2512),
    4: (0.2846, -0.3880, 0.5373, 0.7983, 0.4093),
    5: (-0.8769, -0.3056, -0.1160, 0.8130, -0.8007),
}

LOWPASS_TAPS = 20
LOWPASS_EDGE = 0.7  # stopband edge, in units of pi rad/sample
LOWPASS_ATTEN_DB = 60.0


@dataclass(frozen=True)
class SourceSignal:
    samples: np.ndarray
    kind: str


@dataclass(frozen=True)
class FirChannel:
    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float).ravel()
        if taps.size < 2:
            raise ValueError("channel length must be at least 2")
        if not np.any(taps):
            raise ValueError("channel has no nonzero tap")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return self.taps.size

    @classmethod
    def reference(cls, channel_id: int) -> "FirChannel":
        try:
            return cls(np.array(CHANNELS[channel_id]))
        except KeyError:
            raise ValueError(f"unknown channel id {channel_id!r}; expected one of {sorted(CHANNELS)}") from None


def _f1(y):
    return np.tanh(0.8 * y) + 0.1 * y


def _f2(y):
    return -0.1 * np.sin(3 * y) - 0.33 * y


def _f3(y):
    return 1.5 * y - 2.5 * (1 - np.exp(-y)) / (1 + np.exp(-y))


def _identity(y):
    return np.asarray(y, dtype=float) * 1.0


_BUILTIN = {"f1": _f1, "f2": _f2, "f3": _f3, "identity": _identity}


@dataclass(frozen=True)
class Nonlinearity:
    """Memoryless map ``f``; builtins are ``f1``, ``f2``, ``f3`` and ``identity``."""

    id: str
    forward: Callable[[np.ndarray], np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.forward is None:
            if self.id not in _BUILTIN:
                raise ValueError(f"unknown nonlinearity {self.id!r}; expected one of {sorted(_BUILTIN)}")
            object.__setattr__(self, "forward", _BUILTIN[self.id])

    def __call__(self, y):
        return self.forward(np.asarray(y, dtype=float))


def eval_nonlinearity(nl: Nonlinearity, y):
    return nl(y)


def invert_nonlinearity(nl: Nonlinearity, x, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Invert a strictly monotone ``nl`` by vectorized bisection."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    increasing = nl(1.0) > nl(-1.0)
    lo = np.full_like(x, -1.0)
    hi = np.full_like(x, 1.0)

    def below(y):
        fy = nl(y)
        return fy < x if increasing else fy > x

    # grow the bracket until f(lo) <= x <= f(hi) in the monotone sense
    for _ in range(200):
        bad_lo = ~below(lo)
        bad_hi = below(hi)
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo = np.where(bad_lo, 2 * lo, lo)
        hi = np.where(bad_hi, 2 * hi, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        go_up = below(mid)
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
        if np.max(hi - lo) <= tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class WienerSimoSystem:
    """P parallel Wiener branches sharing one source.

    Channels shorter than the longest one are zero-padded. ``noise_std`` is
    broadcast to one value per branch.
    """

    channels: Sequence[FirChannel]
    nonlinearities: Sequence[Nonlinearity]
    noise_std: np.ndarray | float = 0.0

    def __post_init__(self):
        if len(self.channels) != len(self.nonlinearities):
            raise ValueError("need one nonlinearity per channel")
        if len(self.channels) < 2:
            raise ValueError("a SIMO system needs at least two branches")
        length = max(ch.length for ch in self.channels)
        padded = tuple(
            FirChannel(np.pad(ch.taps, (0, length - ch.length))) for ch in self.channels
        )
        for a, b in itertools.combinations(padded, 2):
            if np.linalg.matrix_rank(np.vstack([a.taps, b.taps]), tol=1e-12) < 2:
                raise ValueError("channels must not be proportional")
        noise = np.broadcast_to(np.asarray(self.noise_std, dtype=float), (len(padded),)).copy()
        if np.any(noise < 0):
            raise ValueError("noise_std must be non-negative")
        object.__setattr__(self, "channels", padded)
        object.__setattr__(self, "nonlinearities", tuple(self.nonlinearities))
        object.__setattr__(self, "noise_std", noise)

    @property
    def n_branches(self) -> int:
        return len(self.channels)

    @property
    def order(self) -> int:
        return self.channels[0].length

    @property
    def taps(self) -> np.ndarray:
        return np.vstack([ch.taps for ch in self.channels])

    @classmethod
    def reference(cls, channel_ids, nonlinearity_ids, noise_std=0.0) -> "WienerSimoSystem":
        return cls(
            [FirChannel.reference(i) for i in channel_ids],
            [Nonlinearity(n) for n in nonlinearity_ids],
            noise_std,
        )

    def coprimality_margin(self) -> float:
        """Smallest distance between zeros of two different channels.

        Diagnostic only: a value near zero means two channels (nearly) share
        a zero and blind identification is ill-posed.
        """
        zeros = [np.roots(np.trim_zeros(ch.taps, "f")) for ch in self.channels]
        best = np.inf
        for za, zb in itertools.combinations(zeros, 2):
            if za.size and zb.size:
                best = min(best, np.abs(za[:, None] - zb[None, :]).min())
        return float(best)


def design_lowpass(
    num_taps: int = LOWPASS_TAPS,
    stop_edge: float = LOWPASS_EDGE,
    atten_db: float = LOWPASS_ATTEN_DB,
) -> np.ndarray:
    """Kaiser-window linear-phase low-pass FIR with unit DC gain.

    ``stop_edge`` (in units of pi) is where the stopband begins. The
    transition width follows Kaiser's order formula for ``atten_db`` and the
    -6 dB point sits half a transition width below the edge.
    """
    width = (atten_db - 7.95) / (2.285 * (num_taps - 1)) / np.pi
    cutoff = stop_edge - width / 2
    taps = signal.firwin(num_taps, cutoff, window=("kaiser", signal.kaiser_beta(atten_db)))
    return taps / taps.sum()


def generate_source(kind: str, n: int, seed=None) -> SourceSignal:
    """Draw ``n`` source samples.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    ``colored`` is i.i.d. N(0, 1) passed through :func:`design_lowpass`; the
    filter is run over ``n + 19`` draws and only fully-overlapped outputs are
    kept, so the result is stationary.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if kind == "gaussian_iid":
        s = rng.standard_normal(n)
    elif kind == "binary":
        s = rng.choice(np.array([-1.0, 1.0]), size=n)
    elif kind == "colored":
        taps = design_lowpass()
        w = rng.standard_normal(n + taps.size - 1)
        s = np.convolve(w, taps, mode="valid")
    else:
        raise ValueError(f"unknown source kind {kind!r}; expected one of {SOURCE_KINDS}")
    return SourceSignal(samples=s, kind=kind)


def filter_branches(system: WienerSimoSystem, s: np.ndarray) -> np.ndarray:
    """Noiseless intermediate signals ``y_i`` with zero prehistory, shape (P, N)."""
    s = np.asarray(s, dtype=float)
    return np.vstack([signal.lfilter(ch.taps, [1.0], s) for ch in system.channels])


def noise_std_for_snr(system: WienerSimoSystem, source: SourceSignal, snr_db: float) -> np.ndarray:
    """Per-branch noise level ``RMS(f_i(y_i)) * 10^(-snr/20)``; zero for infinite SNR."""
    if np.isinf(snr_db) and snr_db > 0:
        return np.zeros(system.n_branches)
    y = filter_branches(system, source.samples)
    clean = np.vstack([f(yi) for f, yi in zip(system.nonlinearities, y)])
    return np.sqrt(np.mean(clean**2, axis=1)) * 10 ** (-snr_db / 20)


def with_snr(system: WienerSimoSystem, source: SourceSignal, snr_db: float) -> WienerSimoSystem:
    return replace(system, noise_std=noise_std_for_snr(system, source, snr_db))


def simulate(system: WienerSimoSystem, source: SourceSignal, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Run the source through the system.

    Returns
    -------
    x : ndarray, shape (P, N)
        Noisy outputs.
    y : ndarray, shape (P, N)
        Noiseless intermediate (pre-nonlinearity) signals, for testing.
    """
    s = np.asarray(source.samples, dtype=float)
    if s.size < system.order:
        raise ValueError(f"need at least {system.order} samples, got {s.size}")
    y = filter_branches(system, s)
    x = np.vstack([f(yi) for f, yi in zip(system.nonlinearities, y)])
    if np.any(system.noise_std > 0):
        w = np.random.default_rng(seed).standard_normal(x.shape)
        x = x + system.noise_std[:, None] * w
    return x, y


def write_outputs_csv(path, x: np.ndarray) -> None:
    """Write branch outputs as CSV, one column per branch, header ``x1,...,xP``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(x.shape[0])])
        for row in x.T:
            writer.writerow([repr(float(v)) for v in row])


def read_outputs_csv(path) -> np.ndarray:
    """Inverse of :func:`write_outputs_csv`; returns shape (P, N)."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [f"x{i + 1}" for i in range(len(header))]
        if header != expected:
            raise ValueError(f"bad header {header!r}; expected {expected!r}")
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows, dtype=float).T.reshape(len(header), -1)
