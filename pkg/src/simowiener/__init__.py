"""Blind identification and equalization of SIMO Wiener systems.

The identification core alternates linear CCA over the FIR channels with
regularized kernel CCA over the inverse nonlinearities (:func:`run_akcca`).
"""

from .akcca import AkccaConfig, AkccaEstimate, run_akcca
from .cca import cca_channels, embed, ls_channels
from .equalizer import aligned_mse, ber, channel_nmse, equalize
from .kernelizer import KernelSpec, build_lowrank_factor, silverman_bandwidth
from .numerics import GevProblem, incomplete_cholesky, solve_gev
from .signals import (
    FirChannel,
    Nonlinearity,
    WienerSimoSystem,
    generate_source,
    simulate,
)

__all__ = [
    "AkccaConfig",
    "AkccaEstimate",
    "FirChannel",
    "GevProblem",
    "KernelSpec",
    "Nonlinearity",
    "WienerSimoSystem",
    "aligned_mse",
    "ber",
    "build_lowrank_factor",
    "cca_channels",
    "channel_nmse",
    "embed",
    "equalize",
    "generate_source",
    "incomplete_cholesky",
    "ls_channels",
    "run_akcca",
    "silverman_bandwidth",
    "simulate",
    "solve_gev",
]

__version__ = "0.1.0"
