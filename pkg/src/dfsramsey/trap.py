"""Linear-trap model: tip voltage -> axial frequency -> field gradient and ion spacing.

The voltage-to-frequency map is a calibrated law omega_z^2 = k U rather than a field
solver. Scans are better specified by gradient, since the calibration constant is
only known from a reference point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants


class ZeroFrequencyError(ValueError):
    """Raised when a quantity diverges at vanishing trap frequency."""


def axial_frequency(voltage, cal_constant: float):
    """
    Axial centre-of-mass frequency sqrt(k U).

    :param voltage: tip voltage(s) U in V, >= 0
    :param float cal_constant: k in (rad/s)^2 / V
    :return: omega_z in rad/s

    Example::

        k = (2 * np.pi * 850e3) ** 2 / 500
        axial_frequency(2000, k) / (2 * np.pi)  # 1.7e6
    """
    u = np.asarray(voltage, dtype=float)
    if np.any(u < 0):
        raise ValueError("Tip voltage must be >= 0.")
    if not cal_constant > 0:
        raise ValueError(f"Calibration constant must be > 0, got {cal_constant}.")
    return np.sqrt(cal_constant * u)


def field_gradient(omega_z, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Signed axial gradient dE_z/dz = -m omega_z^2 / e in V/m^2."""
    omega = np.asarray(omega_z, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega_z must be >= 0.")
    return -constants.ion_mass * omega**2 / constants.elementary_charge


def omega_from_gradient(gradient, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Axial frequency implied by a (trap-produced) gradient; inverse of field_gradient."""
    g = np.asarray(gradient, dtype=float)
    return np.sqrt(np.abs(g) * constants.elementary_charge / constants.ion_mass)


def ion_separation(omega_z, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """
    Equilibrium distance of two ions, d = (e^2 / (2 pi eps0 m omega_z^2))^(1/3).

    :param omega_z: axial frequency in rad/s, > 0
    :return: distance in m
    :raises ZeroFrequencyError: for omega_z <= 0
    """
    omega = np.asarray(omega_z, dtype=float)
    if np.any(omega <= 0):
        raise ZeroFrequencyError("Ion separation diverges for omega_z <= 0.")
    # e^2/(2 pi eps0) = 2 * e^2/(4 pi eps0)
    return np.cbrt(
        2 * constants.vacuum_permittivity_factor / (constants.ion_mass * omega**2)
    )


def gradient_at_ion(gradient):
    """Gradient at one ion of a two-ion crystal: the neighbour doubles it."""
    return 2 * np.asarray(gradient, dtype=float) if np.ndim(gradient) else 2 * gradient


@dataclass(frozen=True)
class TrapEnvironment:
    """
    Trap operating point.

    :param float tip_voltage: U in V
    :param float cal_constant: k in (rad/s)^2/V with omega_z^2 = k U
    :param float stray_gradient: residual gradient g_s from stray charges (V/m^2),
        added to the tip gradient
    :param constants: physical constants
    """

    tip_voltage: float
    cal_constant: float
    stray_gradient: float = 0.0
    constants: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if not self.cal_constant > 0:
            raise ValueError(f"Calibration constant must be > 0, got {self.cal_constant}.")
        if not self.tip_voltage >= 0:
            raise ValueError(f"Tip voltage must be >= 0, got {self.tip_voltage}.")
        if not math.isfinite(self.stray_gradient):
            raise ValueError("stray_gradient must be finite.")

    @classmethod
    def from_reference(
        cls,
        tip_voltage: float,
        reference_voltage: float,
        reference_frequency: float,
        stray_gradient: float = 0.0,
        constants: PhysicalConstants = DEFAULT_CONSTANTS,
    ) -> "TrapEnvironment":
        """Calibrate k from one measured point (``reference_frequency`` in Hz)."""
        if not reference_voltage > 0:
            raise ValueError("Reference voltage must be > 0.")
        k = (2 * math.pi * reference_frequency) ** 2 / reference_voltage
        return cls(tip_voltage, k, stray_gradient, constants)

    @classmethod
    def from_gradient(
        cls,
        gradient: float,
        stray_gradient: float = 0.0,
        constants: PhysicalConstants = DEFAULT_CONSTANTS,
        cal_constant: float = 1.0,
    ) -> "TrapEnvironment":
        """
        Operating point producing a given tip gradient (V/m^2, sign ignored).

        The voltage is back-computed from ``cal_constant``; only the gradient and the
        implied axial frequency matter downstream.
        """
        omega = float(omega_from_gradient(gradient, constants))
        return cls(omega**2 / cal_constant, cal_constant, stray_gradient, constants)

    @property
    def omega_z(self) -> float:
        return float(axial_frequency(self.tip_voltage, self.cal_constant))

    @property
    def gradient(self) -> float:
        """Tip-produced external gradient (signed, V/m^2)."""
        return float(field_gradient(self.omega_z, self.constants))

    @property
    def total_gradient(self) -> float:
        """Tip gradient plus the stray contribution."""
        return self.gradient + self.stray_gradient

    @property
    def separation(self) -> float:
        return float(ion_separation(self.omega_z, self.constants))
