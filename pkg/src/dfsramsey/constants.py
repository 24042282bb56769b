"""Physical constants and the unit conversions used at module boundaries.

Everything inside the package is SI (rad/s, T, V/m^2, C m^2). Conversions to the
laboratory units used in configs and reports (Hz, G, V/mm^2, e a0^2) live here so
there is a single place where a factor of 2 pi or 1e4 can go wrong.

Values default to the CODATA set shipped with :mod:`scipy.constants`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import scipy.constants as const

GAUSS = 1e-4  # T
V_PER_MM2 = 1e6  # V/m^2
HZ_PER_G2 = 1e8  # Hz/T^2 per Hz/G^2

#: atomic mass of 40Ca in u
CA40_ATOMIC_MASS_U = 39.962590863


def lande_g(l2: int, s2: int, j2: int, g_s: float | Fraction = 2) -> Fraction | float:
    """
    Landé g-factor of a fine-structure level in LS coupling.

    Quantum numbers are passed doubled (``l2 = 2L`` etc.) like everywhere else in the
    package. With the default ``g_s = 2`` the result is an exact :class:`Fraction`.

    :param int l2: twice the orbital angular momentum L
    :param int s2: twice the spin S
    :param int j2: twice the total angular momentum J
    :param g_s: electron spin g-factor
    :return: g_J

    Example::

        lande_g(4, 1, 5)  # D5/2 -> Fraction(6, 5)
    """
    if j2 <= 0:
        raise ValueError(f"g_J undefined for J = {j2}/2.")
    j = Fraction(j2, 2)
    s = Fraction(s2, 2)
    l_ = Fraction(l2, 2)
    jj = j * (j + 1)
    g_l = 1
    return g_l * (jj - s * (s + 1) + l_ * (l_ + 1)) / (2 * jj) + g_s * (
        jj + s * (s + 1) - l_ * (l_ + 1)
    ) / (2 * jj)


@dataclass(frozen=True)
class PhysicalConstants:
    """
    Constants injected into every formula. Construct once (defaults are CODATA via
    scipy) and pass around; nothing in the package reads module-level globals for
    these.

    ``vacuum_permittivity_factor`` is e^2/(4 pi eps0) in J m.
    """

    planck_h: float = const.h
    hbar: float = const.hbar
    bohr_magneton: float = const.physical_constants["Bohr magneton"][0]
    elementary_charge: float = const.e
    bohr_radius: float = const.physical_constants["Bohr radius"][0]
    vacuum_permittivity_factor: float = const.e**2 / (4 * math.pi * const.epsilon_0)
    ion_mass: float = CA40_ATOMIC_MASS_U * const.atomic_mass - const.m_e
    lande_g_D52: float = float(lande_g(4, 1, 5))

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"Constant {name} must be finite and positive, got {value}.")
        if not math.isclose(self.hbar, self.planck_h / (2 * math.pi), rel_tol=1e-12):
            raise ValueError("hbar must equal planck_h / (2 pi).")

    @property
    def quadrupole_unit(self) -> float:
        """e a0^2 in C m^2, the unit moments are reported in."""
        return self.elementary_charge * self.bohr_radius**2


DEFAULT_CONSTANTS = PhysicalConstants()


def hz_to_angular(f: float) -> float:
    return 2 * math.pi * f


def angular_to_hz(omega: float) -> float:
    return omega / (2 * math.pi)


def gauss_to_tesla(b_gauss: float) -> float:
    return b_gauss * GAUSS


def tesla_to_gauss(b_tesla: float) -> float:
    return b_tesla / GAUSS


def vmm2_to_si(g: float) -> float:
    """V/mm^2 -> V/m^2"""
    return g * V_PER_MM2


def si_to_vmm2(g: float) -> float:
    """V/m^2 -> V/mm^2"""
    return g / V_PER_MM2


def moment_to_si(theta_ea02: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Quadrupole moment in e a0^2 -> C m^2."""
    return theta_ea02 * constants.quadrupole_unit


def moment_from_si(theta_si: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Quadrupole moment in C m^2 -> e a0^2."""
    return theta_si / constants.quadrupole_unit
