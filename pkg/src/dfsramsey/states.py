"""Designed two-ion Bell states and their phase evolution rate.

A state (|m1>|m2> + e^{i phi0} |m3>|m4>)/sqrt(2), first index on ion 1, precesses at

    lambda = [(E_m1 + E_m2) - (E_m3 + E_m4)] / hbar

and is insensitive to a uniform magnetic field to first order iff m1 + m2 = m3 + m4.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import pandas as pd

from .constants import DEFAULT_CONSTANTS, PhysicalConstants, angular_to_hz
from .physics import (
    FieldGeometry,
    MagneticEnvironment,
    ZeemanLevel,
    quadrupole_geometric_factor,
    quadrupole_shift,
    zeeman_shift_second_order,
)
from .trap import TrapEnvironment, gradient_at_ion

D52 = 5  # 2j of D5/2
S12 = 1  # 2j of S1/2
MANIFOLD_J2 = {"D": D52, "S": S12}


@dataclass(frozen=True)
class BellStateSpec:
    """
    Two-ion Bell state with preparation contrast.

    :param twice_m: doubled magnetic quantum numbers (2m1, 2m2, 2m3, 2m4)
    :param float phi0: initial relative phase (rad)
    :param float contrast: preparation contrast C0 in [0, 1]
    :param int manifold_j2: 2j of the manifold all D kets live in
    :param manifolds: manifold tag per ket, "D" (default) or "S"
    """

    twice_m: tuple[int, int, int, int]
    phi0: float = 0.0
    contrast: float = 1.0
    manifold_j2: int = D52
    manifolds: tuple[str, str, str, str] = ("D", "D", "D", "D")
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "twice_m", tuple(int(m) for m in self.twice_m))
        object.__setattr__(self, "manifolds", tuple(self.manifolds))
        if len(self.twice_m) != 4 or len(self.manifolds) != 4:
            raise ValueError("A Bell state needs exactly four magnetic quantum numbers.")
        if not 0 <= self.contrast <= 1:
            raise ValueError(f"Contrast must be in [0, 1], got {self.contrast}.")
        if not math.isfinite(self.phi0):
            raise ValueError("phi0 must be finite.")
        for tag, m2 in zip(self.manifolds, self.twice_m):
            if tag not in MANIFOLD_J2:
                raise ValueError(f"Unknown manifold tag {tag!r}, use 'D' or 'S'.")
            # raises on |m| > j or parity mismatch
            ZeemanLevel(self._j2(tag), m2)

    def _j2(self, tag: str) -> int:
        return self.manifold_j2 if tag == "D" else S12

    @property
    def levels(self) -> tuple[ZeemanLevel, ZeemanLevel, ZeemanLevel, ZeemanLevel]:
        return tuple(
            ZeemanLevel(self._j2(tag), m2) for tag, m2 in zip(self.manifolds, self.twice_m)
        )

    @property
    def in_d_manifold(self) -> bool:
        return all(tag == "D" for tag in self.manifolds)

    def swapped(self) -> "BellStateSpec":
        """Same state with the two ions exchanged (m1<->m2, m3<->m4)."""
        m1, m2, m3, m4 = self.twice_m
        t1, t2, t3, t4 = self.manifolds
        return BellStateSpec(
            (m2, m1, m4, m3),
            phi0=self.phi0,
            contrast=self.contrast,
            manifold_j2=self.manifold_j2,
            manifolds=(t2, t1, t4, t3),
            name=f"{self.name} swapped" if self.name else "",
        )

    def quadrupole_factor_sum(self) -> float:
        """F(m1) + F(m2) - F(m3) - F(m4) of the sublevel quadrupole factors."""
        f = [quadrupole_geometric_factor(level) for level in self.levels]
        return f[0] + f[1] - f[2] - f[3]

    def __str__(self) -> str:
        m1, m2, m3, m4 = (f"{m / 2:+g}" for m in self.twice_m)
        label = f"{self.name}: " if self.name else ""
        return f"{label}(|{m1}>|{m2}> + |{m3}>|{m4}>)/sqrt(2)"


def psi1(contrast: float = 0.9, phi0: float = 0.0) -> BellStateSpec:
    """(|-5/2>|+3/2> + |-1/2>|-1/2>)/sqrt(2), the field-insensitive probe state."""
    return BellStateSpec((-5, 3, -1, -1), phi0=phi0, contrast=contrast, name="psi1")


def psi2(contrast: float = 0.9, phi0: float = 0.0) -> BellStateSpec:
    """Psi1 with the ion order exchanged; flips the sign of the gradient term."""
    return BellStateSpec((3, -5, -1, -1), phi0=phi0, contrast=contrast, name="psi2")


@dataclass(frozen=True)
class StateShiftBudget:
    """Decomposition of a phase evolution rate (all rad/s)."""

    quadrupole: float
    zeeman_gradient: float
    zeeman_second_order: float
    zeeman_uniform: float = 0.0

    @property
    def total(self) -> float:
        return (
            self.quadrupole
            + self.zeeman_gradient
            + self.zeeman_second_order
            + self.zeeman_uniform
        )

    def to_dict(self) -> dict:
        """Components and total in Hz (lambda / 2 pi)."""
        return {
            "quadrupole_hz": angular_to_hz(self.quadrupole),
            "zeeman_gradient_hz": angular_to_hz(self.zeeman_gradient),
            "zeeman_second_order_hz": angular_to_hz(self.zeeman_second_order),
            "zeeman_uniform_hz": angular_to_hz(self.zeeman_uniform),
            "total_hz": angular_to_hz(self.total),
        }


def is_decoherence_free(spec: BellStateSpec) -> bool:
    """True iff m1 + m2 = m3 + m4 (exact, doubled-integer arithmetic)."""
    m1, m2, m3, m4 = spec.twice_m
    return m1 + m2 == m3 + m4


def field_sensitivity(
    spec: BellStateSpec, constants: PhysicalConstants = DEFAULT_CONSTANTS
) -> float:
    """
    First-order sensitivity d lambda / d B0 of the phase rate to a uniform field
    (rad/s per T); exactly 0 for decoherence-free states.
    """
    m1, m2, m3, m4 = spec.twice_m
    dm2 = m1 + m2 - m3 - m4
    if dm2 == 0:
        return 0.0
    return dm2 / 2 * constants.lande_g_D52 * constants.bohr_magneton / constants.hbar


def phase_rate(
    spec: BellStateSpec,
    trap: TrapEnvironment,
    env: MagneticEnvironment,
    geometry: FieldGeometry,
    theta: float,
    ion_sep: float | None = None,
) -> StateShiftBudget:
    """
    Phase evolution rate of a Bell state, split by mechanism.

    Both ions see twice the external gradient (tip plus stray). Ion 1 sits at B0 and
    ion 2 at B0 + B' d, so only ion 2 contributes to the gradient term.

    :param spec: Bell state with all kets in the D manifold
    :param trap: trap operating point (gradient, ion spacing, constants)
    :param env: magnetic environment
    :param geometry: field orientation
    :param float theta: quadrupole moment (C m^2)
    :param float ion_sep: ion distance d in m, defaults to the trap's equilibrium spacing
    :return: StateShiftBudget in rad/s

    Example::

        budget = phase_rate(psi1(), trap, MagneticEnvironment(2.9e-4), FieldGeometry(), theta)
        budget.total / (2 * np.pi)
    """
    if not spec.in_d_manifold:
        raise ValueError(f"Only D-manifold states have a shift budget, got {spec}.")
    constants = trap.constants
    d = trap.separation if ion_sep is None else ion_sep
    if not d > 0:
        raise ValueError(f"Ion separation must be > 0, got {d}.")

    g_ion = gradient_at_ion(trap.total_gradient)
    q = [quadrupole_shift(level, g_ion, geometry, theta, constants) for level in spec.levels]
    quadrupole = q[0] + q[1] - q[2] - q[3]

    m1, m2, m3, m4 = spec.twice_m
    mu = constants.lande_g_D52 * constants.bohr_magneton / constants.hbar
    zeeman_uniform = field_sensitivity(spec, constants) * env.bias_field
    zeeman_gradient = mu * env.axial_gradient * d * (m2 - m4) / 2

    return StateShiftBudget(
        quadrupole=float(quadrupole),
        zeeman_gradient=float(zeeman_gradient),
        zeeman_second_order=zeeman_shift_second_order(
            env.second_order_coeff, env.bias_field
        ),
        zeeman_uniform=float(zeeman_uniform),
    )


def decompose_average_difference(delta1: float, delta2: float) -> tuple[float, float]:
    """
    Split the rates of a state and its ion-swapped partner.

    :return: ((delta1 + delta2) / 2, |delta1 - delta2| / 2), i.e. the quadrupole plus
        offset part and the magnetic-gradient part
    """
    return ((delta1 + delta2) / 2, abs(delta1 - delta2) / 2)


def design_dfs_states(manifold_j2: int = D52) -> pd.DataFrame:
    """
    Table of all decoherence-free two-ion Bell states of a manifold.

    Each state appears once (the two kets in canonical order). The columns give the
    quadrupole factor sum (the state's quadrupole rate in units of g theta A / (4 hbar)
    per unit gradient at the ion) and the gradient coefficient m2 - m4.

    :param int manifold_j2: 2j of the manifold, >= 2
    :return: pandas.DataFrame sorted by decreasing quadrupole sensitivity

    Example::

        table = design_dfs_states(5)
        table.iloc[0]
    """
    ms = range(-manifold_j2, manifold_j2 + 1, 2)
    rows = []
    for m1, m2, m3, m4 in itertools.product(ms, repeat=4):
        if m1 + m2 != m3 + m4 or (m1, m2) >= (m3, m4):
            continue
        spec = BellStateSpec((m1, m2, m3, m4), manifold_j2=manifold_j2)
        rows.append(
            {
                "m1": m1 / 2,
                "m2": m2 / 2,
                "m3": m3 / 2,
                "m4": m4 / 2,
                "quadrupole_factor_sum": spec.quadrupole_factor_sum(),
                "gradient_coefficient": (m2 - m4) / 2,
            }
        )
    table = pd.DataFrame(rows)
    table["abs_quadrupole"] = table["quadrupole_factor_sum"].abs()
    table = table.sort_values(
        ["abs_quadrupole", "m1", "m2", "m3", "m4"], ascending=[False, True, True, True, True]
    )
    return table.drop(columns="abs_quadrupole").reset_index(drop=True)
