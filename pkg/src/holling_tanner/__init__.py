"""Diffusive ratio-dependent Holling-Tanner system on (0, l*pi) with Neumann boundaries.

Submodules:

- ``kinetics``: parameters, equilibrium, linearization, Taylor coefficients
- ``spectrum``: per-mode eigenvalues, Hopf/Turing curves, stability of (u0, v0)
- ``critical_sets``: critical lengths, mode counts, codimension-two sets, regimes
- ``bifurcation``: bifurcation point classification and the (r, l) diagram
- ``normal_form``: Turing-Hopf normal form, planar amplitude system, regions
- ``rdsim``: pseudo-spectral PDE solver and attractor classifier
- ``cli``: command-line interface
"""

from .errors import (
    Blowup,
    DenominatorZero,
    Degenerate,
    HollingTannerError,
    InsufficientData,
    NearResonance,
    NoTuringHopf,
    NotABifurcation,
    NotApplicable,
    NumericalError,
    RegimeError,
    Singularity,
    ValidationError,
    WindowEmpty,
)
from .kinetics import ModelParams, SystemParams, equilibrium, linear_coefficients

__version__ = "0.1.0"

__all__ = [
    "Blowup",
    "DenominatorZero",
    "Degenerate",
    "HollingTannerError",
    "InsufficientData",
    "NearResonance",
    "NoTuringHopf",
    "NotABifurcation",
    "NotApplicable",
    "NumericalError",
    "RegimeError",
    "Singularity",
    "ValidationError",
    "WindowEmpty",
    "ModelParams",
    "SystemParams",
    "equilibrium",
    "linear_coefficients",
]
