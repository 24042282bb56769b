"""Level structure and the elementary shift formulas.

Half-integer quantum numbers are stored doubled (``j2 = 2j``, ``m2 = 2m``) so that
membership tests and dictionary keys stay exact. Floats only appear inside the
formulas. All shifts are angular frequencies in rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .constants import DEFAULT_CONSTANTS, HZ_PER_G2, PhysicalConstants

#: state-level second-order Zeeman coefficient giving -2.9 Hz at 2.9 G (Hz/T^2)
DEFAULT_SECOND_ORDER_COEFF = -0.3448 * HZ_PER_G2


class DegenerateManifoldError(ValueError):
    """Raised for manifolds without a quadrupole shift (j = 0 or j = 1/2)."""


@dataclass(frozen=True, order=True)
class ZeemanLevel:
    """Sublevel |j, m> of a fine-structure manifold, stored as (2j, 2m)."""

    j2: int
    m2: int

    def __post_init__(self):
        if self.j2 < 0:
            raise ValueError(f"2j must be non-negative, got {self.j2}.")
        if abs(self.m2) > self.j2:
            raise ValueError(f"|m| > j for level (2j={self.j2}, 2m={self.m2}).")
        if (self.j2 - self.m2) % 2:
            raise ValueError(f"2j={self.j2} and 2m={self.m2} must have the same parity.")

    @classmethod
    def from_halves(cls, j: float, m: float) -> "ZeemanLevel":
        """Build a level from ordinary (half-integer) values, e.g. ``(2.5, -1.5)``."""
        j2, m2 = 2 * j, 2 * m
        if j2 != round(j2) or m2 != round(m2):
            raise ValueError(f"j={j} and m={m} must be half-integers.")
        return cls(int(round(j2)), int(round(m2)))

    @property
    def j(self) -> float:
        return self.j2 / 2

    @property
    def m(self) -> float:
        return self.m2 / 2

    def manifold(self) -> list["ZeemanLevel"]:
        """All sublevels m = -j..j of this level's manifold."""
        return [ZeemanLevel(self.j2, m2) for m2 in range(-self.j2, self.j2 + 1, 2)]

    def __str__(self) -> str:
        return f"|{Fraction(self.j2, 2)}, {Fraction(self.m2, 2)}>"


@dataclass(frozen=True)
class FieldGeometry:
    """
    Orientation of the magnetic quantization axis relative to the quadrupole field.

    :param float beta: angle between quantization axis and the quadrupole symmetry axis (rad)
    :param float epsilon: asymmetry of the quadrupole potential (>= 0)
    :param float alpha: direction of the asymmetry (rad)
    """

    beta: float = 0.0
    epsilon: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and math.isfinite(self.alpha)):
            raise ValueError("beta and alpha must be finite.")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}.")

    def rotated(self, beta: float) -> "FieldGeometry":
        """Same asymmetry, different field orientation."""
        return FieldGeometry(beta=beta, epsilon=self.epsilon, alpha=self.alpha)


@dataclass(frozen=True)
class MagneticEnvironment:
    """
    Magnetic field seen by the two-ion crystal.

    :param float bias_field: B0 at ion 1 (T)
    :param float axial_gradient: B' along the crystal, ion 1 -> ion 2 (T/m)
    :param float second_order_coeff: state-level second-order coefficient c2 (Hz/T^2)
    :param float quasi_static_noise_rms: rms of shot-to-shot field fluctuations (T)
    """

    bias_field: float
    axial_gradient: float = 0.0
    second_order_coeff: float = DEFAULT_SECOND_ORDER_COEFF
    quasi_static_noise_rms: float = 0.0

    def __post_init__(self):
        if not self.bias_field >= 0:
            raise ValueError(f"bias_field must be >= 0, got {self.bias_field}.")
        if not self.quasi_static_noise_rms >= 0:
            raise ValueError(
                f"quasi_static_noise_rms must be >= 0, got {self.quasi_static_noise_rms}."
            )
        if not (
            math.isfinite(self.axial_gradient) and math.isfinite(self.second_order_coeff)
        ):
            raise ValueError("axial_gradient and second_order_coeff must be finite.")


def quadrupole_geometric_factor(level: ZeemanLevel) -> float:
    """
    Sublevel factor [j(j+1) - 3m^2] / [j(2j-1)] of the quadrupole shift.

    In doubled quantum numbers this is (j2(j2+2) - 3 m2^2) / (2 j2 (j2-1)), which is
    evaluated exactly before conversion to float.

    :param level: Zeeman sublevel with j >= 1
    :return: dimensionless factor, even in m
    :raises DegenerateManifoldError: for j in {0, 1/2}

    Example::

        quadrupole_geometric_factor(ZeemanLevel(5, -5))  # -1.0
    """
    if level.j2 < 2:
        raise DegenerateManifoldError(
            f"No quadrupole shift in a j = {Fraction(level.j2, 2)} manifold."
        )
    j2, m2 = level.j2, level.m2
    return float(Fraction(j2 * (j2 + 2) - 3 * m2 * m2, 2 * j2 * (j2 - 1)))


def angular_factor(geometry: FieldGeometry):
    """(3cos^2 beta - 1) - epsilon sin^2 beta cos(2 alpha); 2 at beta = 0."""
    cos2 = np.cos(geometry.beta) ** 2
    sin2 = np.sin(geometry.beta) ** 2
    return (3 * cos2 - 1) - geometry.epsilon * sin2 * np.cos(2 * geometry.alpha)


def quadrupole_shift(
    level: ZeemanLevel,
    gradient: float,
    geometry: FieldGeometry,
    theta: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """
    Quadrupole shift of a sublevel, g theta F(j, m) A(beta) / (4 hbar).

    hbar times the returned angular frequency is the energy shift.

    :param level: sublevel
    :param float gradient: electric field gradient dE_z/dz at the ion (V/m^2)
    :param geometry: field orientation
    :param float theta: quadrupole moment (C m^2)
    :param constants: physical constants
    :return: angular frequency (rad/s)
    """
    factor = quadrupole_geometric_factor(level)
    return gradient * theta * factor * angular_factor(geometry) / (4 * constants.hbar)


def zeeman_shift_first_order(
    level: ZeemanLevel,
    field: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    g_j: float | None = None,
) -> float:
    """
    Linear Zeeman shift m g_J mu_B B / hbar in rad/s.

    ``g_j`` defaults to the D5/2 value held by ``constants``.
    """
    if not math.isfinite(field):
        raise ValueError(f"Magnetic field must be finite, got {field}.")
    g = constants.lande_g_D52 if g_j is None else g_j
    return level.m * g * constants.bohr_magneton * field / constants.hbar


def zeeman_shift_second_order(second_order_coeff: float, field: float) -> float:
    """State-level quadratic Zeeman contribution 2 pi c2 B^2 in rad/s."""
    return 2 * math.pi * second_order_coeff * field**2
