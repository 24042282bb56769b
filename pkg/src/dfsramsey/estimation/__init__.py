"""Fitting routines turning parity data into frequencies, and frequencies into a moment.

`fit_damped_sinusoid` handles single parity-oscillation datasets; `fit_linear_weighted`,
`fit_power_law` and `fit_angular` work on scan tables; `extract_moment` converts the
gradient-scan slope.
"""

from __future__ import annotations

from ..utils import replicate_pulls
from .angular import AngularFit, fit_angular
from .base import FitError, InsufficientDataError, wrap_phase
from .moment import (
    MomentResult,
    StatePairResult,
    combine_state_fits,
    decompose_offset,
    extract_moment,
)
from .regression import LinearFit, fit_linear_weighted, fit_power_law
from .sinusoid import (
    PARAM_NAMES,
    DampedSinusoidFit,
    FitConfig,
    damped_sinusoid,
    damped_sinusoid_jacobian,
    fit_damped_sinusoid,
)

__all__ = [
    "PARAM_NAMES",
    "AngularFit",
    "DampedSinusoidFit",
    "FitConfig",
    "FitError",
    "InsufficientDataError",
    "LinearFit",
    "MomentResult",
    "StatePairResult",
    "combine_state_fits",
    "damped_sinusoid",
    "damped_sinusoid_jacobian",
    "decompose_offset",
    "extract_moment",
    "fit_angular",
    "fit_damped_sinusoid",
    "fit_linear_weighted",
    "fit_power_law",
    "replicate_pulls",
    "wrap_phase",
]
