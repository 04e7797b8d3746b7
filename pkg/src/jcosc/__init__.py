"""Driven Jaynes-Cummings oscillator toolkit.

Semiclassical bistability analysis (amplitude roots, critical points, step
gain), quantum-trajectory simulation of the decoupled cavity master equation,
and dressed transition ladders for JC / two-qubit / transmon systems, plus a
sweep CLI (``jc-osc``).
"""
from .params import (
    DeviceParams,
    DerivedScales,
    QubitSign,
    chi_of_amplitude,
    derive_scales,
)
from .errors import (
    BranchFollowingError,
    ConfigError,
    ConvergenceError,
    DomainError,
    GridResolutionError,
    JcOscError,
    NoRootError,
    StepUnderflowError,
    TruncationError,
)

__version__ = "0.1.0"

__all__ = [
    "DeviceParams",
    "DerivedScales",
    "QubitSign",
    "chi_of_amplitude",
    "derive_scales",
    "JcOscError",
    "ConfigError",
    "DomainError",
    "NoRootError",
    "GridResolutionError",
    "ConvergenceError",
    "BranchFollowingError",
    "StepUnderflowError",
    "TruncationError",
    "__version__",
]
