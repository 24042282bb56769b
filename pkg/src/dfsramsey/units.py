"""Strict parsing of "<number> <unit>" strings from configuration files.

Each quantity in a config has a dimension; only the units listed for that dimension
are accepted, and a bare number is an error. Values are returned in the package's
internal units (SI, except slopes which stay in Hz mm^2/V).
"""

from __future__ import annotations

import math
import re

from .constants import DEFAULT_CONSTANTS, GAUSS, HZ_PER_G2, V_PER_MM2

UNITS = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6},
    "rate": {"1/s": 1.0, "1/ms": 1e3},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6},
    "voltage": {"V": 1.0, "kV": 1e3},
    "magnetic_field": {"T": 1.0, "G": GAUSS, "mG": 1e-3 * GAUSS},
    "magnetic_gradient": {"T/m": 1.0, "G/m": GAUSS, "G/cm": 100 * GAUSS},
    "field_gradient": {"V/m2": 1.0, "Vmm2": V_PER_MM2, "V/mm2": V_PER_MM2},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
    "length": {"m": 1.0, "um": 1e-6},
    "second_order": {"Hz/T2": 1.0, "Hz/G2": HZ_PER_G2},
    "moment": {"ea02": DEFAULT_CONSTANTS.quadrupole_unit},
    "slope": {"Hz*mm2/V": 1.0, "Hz*m2/V": 1e6},
}

_QUANTITY = re.compile(
    r"^\s*(?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s+(?P<unit>\S+)\s*$"
)


class UnitError(ValueError):
    """A quantity string is malformed or carries a unit of the wrong dimension."""


def parse_quantity(text, dimension: str) -> float:
    """
    Parse a quantity such as ``"850 kHz"`` or ``"-0.3448 Hz/G2"``.

    :param str text: number, whitespace, unit
    :param str dimension: key of :data:`UNITS`
    :return: value in internal units
    :raises UnitError: bare numbers, unknown units, units of another dimension

    Example::

        parse_quantity("2.9 G", "magnetic_field")  # 2.9e-4
    """
    if dimension not in UNITS:
        raise KeyError(f"Unknown dimension {dimension!r}.")
    if isinstance(text, bool) or not isinstance(text, str):
        raise UnitError(
            f"{text!r} has no unit; write it as '<number> <unit>' with one of "
            f"{', '.join(UNITS[dimension])}."
        )
    match = _QUANTITY.match(text)
    if match is None:
        raise UnitError(f"Cannot parse {text!r} as '<number> <unit>'.")
    unit = match.group("unit")
    table = UNITS[dimension]
    if unit not in table:
        raise UnitError(
            f"Unit {unit!r} is not a {dimension.replace('_', ' ')} unit "
            f"(allowed: {', '.join(table)})."
        )
    return float(match.group("number")) * table[unit]


def parse_quantities(values, dimension: str) -> list[float]:
    """Parse a list of quantity strings of one dimension."""
    if isinstance(values, str) or not isinstance(values, (list, tuple)):
        raise UnitError(f"Expected a list of quantities, got {values!r}.")
    return [parse_quantity(v, dimension) for v in values]
