"""Quadrupole moment from the slope of the gradient scan, and offset bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..constants import DEFAULT_CONSTANTS, V_PER_MM2, PhysicalConstants
from ..states import decompose_average_difference

#: theta = MOMENT_PER_SLOPE * h * a for the field-insensitive probe states
MOMENT_PER_SLOPE = 5 / 12


@dataclass(frozen=True)
class MomentResult:
    """
    Quadrupole moment in units of e a0^2.

    :param theta: moment
    :param stat_sigma: statistical error from the slope
    :param syst_sigma: misalignment systematic
    :param slope_used: slope a (Hz mm^2/V)
    :param delta_beta_assumed: assumed field-orientation error (rad)
    :param theta_si: moment in C m^2
    """

    theta: float
    stat_sigma: float
    syst_sigma: float
    slope_used: float
    delta_beta_assumed: float
    theta_si: float

    @property
    def total_sigma(self) -> float:
        return math.hypot(self.stat_sigma, self.syst_sigma)

    def to_dict(self) -> dict:
        return {
            "theta_ea02": self.theta,
            "stat_sigma_ea02": self.stat_sigma,
            "syst_sigma_ea02": self.syst_sigma,
            "total_sigma_ea02": self.total_sigma,
            "theta_si": self.theta_si,
            "slope_hz_mm2_per_v": self.slope_used,
            "delta_beta_rad": self.delta_beta_assumed,
        }


def extract_moment(
    slope: float,
    delta_beta: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    slope_sigma: float = 0.0,
) -> MomentResult:
    """
    Convert the slope of frequency against external gradient into the moment.

    theta = (5/12) h a with a in Hz per V/m^2. A field misaligned by delta_beta scales
    the measured slope by (3cos^2(delta_beta) - 1)/2, which is quoted as a symmetric
    systematic theta * (1 - (3cos^2(delta_beta) - 1)/2).

    :param float slope: a in Hz mm^2/V
    :param float delta_beta: orientation uncertainty in rad, >= 0
    :param constants: physical constants
    :param float slope_sigma: 1-sigma statistical error of a (Hz mm^2/V)
    :return: MomentResult

    Example::

        extract_moment(2.975, math.radians(3), slope_sigma=0.002).theta  # 1.83
    """
    if not math.isfinite(slope):
        raise ValueError(f"Slope must be finite, got {slope}.")
    if not delta_beta >= 0:
        raise ValueError(f"delta_beta must be >= 0, got {delta_beta}.")
    if not slope_sigma >= 0:
        raise ValueError(f"slope_sigma must be >= 0, got {slope_sigma}.")
    per_unit = MOMENT_PER_SLOPE * constants.planck_h / V_PER_MM2
    theta_si = per_unit * slope
    theta = theta_si / constants.quadrupole_unit
    alignment = (3 * math.cos(delta_beta) ** 2 - 1) / 2
    return MomentResult(
        theta=theta,
        stat_sigma=per_unit * slope_sigma / constants.quadrupole_unit,
        syst_sigma=abs(theta) * (1 - alignment),
        slope_used=slope,
        delta_beta_assumed=delta_beta,
        theta_si=theta_si,
    )


def decompose_offset(delta0: float, bias_field: float, second_order_coeff: float):
    """
    Split the zero-gradient offset into second-order Zeeman and stray-field parts.

    :param float delta0: offset Delta_0 / 2 pi (Hz)
    :param float bias_field: B0 (T)
    :param float second_order_coeff: c2 (Hz/T^2)
    :return: (c2 B0^2, delta0 - c2 B0^2) in Hz
    """
    second_order = second_order_coeff * bias_field**2
    return second_order, delta0 - second_order


@dataclass(frozen=True)
class StatePairResult:
    """Average and half-difference of the fitted frequencies of a state and its swap."""

    delta: float
    delta_sigma: float
    gradient_part: float
    gradient_part_sigma: float

    def to_dict(self) -> dict:
        return {
            "delta_hz": self.delta,
            "delta_sigma_hz": self.delta_sigma,
            "delta_gradient_hz": self.gradient_part,
            "delta_gradient_sigma_hz": self.gradient_part_sigma,
        }


def combine_state_fits(fit1, fit2) -> StatePairResult:
    """
    Delta = (f1 + f2)/2 and Delta_B' = |f1 - f2|/2 from two independent fits.

    Both carry the error 0.5 sqrt(sigma1^2 + sigma2^2). Fitted frequencies are
    non-negative, so both states are assumed to precess with the same sign.
    """
    delta, gradient_part = decompose_average_difference(fit1.frequency, fit2.frequency)
    sigma = 0.5 * math.hypot(fit1.frequency_err, fit2.frequency_err)
    return StatePairResult(
        delta=delta,
        delta_sigma=sigma,
        gradient_part=gradient_part,
        gradient_part_sigma=sigma,
    )
