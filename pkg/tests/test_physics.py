import math
import unittest
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate
from hypothesis import given, settings
from hypothesis import strategies as st

import dfsramsey.physics as physics
from dfsramsey.constants import DEFAULT_CONSTANTS, PhysicalConstants, lande_g

MAGIC_ANGLE = math.acos(1 / math.sqrt(3))


class TestGeometricFactor(unittest.TestCase):
    def test_d52_factors(self):
        expected = [-1, Fraction(1, 5), Fraction(4, 5), Fraction(4, 5), Fraction(1, 5), -1]
        levels = physics.ZeemanLevel(5, -5).manifold()
        actual = [physics.quadrupole_geometric_factor(level) for level in levels]
        self.assertEqual(actual, [float(f) for f in expected])
        self.assertEqual(sum(expected), 0)

    def test_degenerate_manifolds(self):
        for j2, m2 in [(0, 0), (1, 1), (1, -1)]:
            with self.assertRaises(physics.DegenerateManifoldError):
                physics.quadrupole_geometric_factor(physics.ZeemanLevel(j2, m2))

    def test_degenerate_error_is_value_error(self):
        self.assertTrue(issubclass(physics.DegenerateManifoldError, ValueError))


@given(st.integers(min_value=2, max_value=15))
def test_factors_sum_to_zero_over_manifold(j2):
    levels = physics.ZeemanLevel(j2, j2).manifold()
    total = sum(
        Fraction(j2 * (j2 + 2) - 3 * lv.m2**2, 2 * j2 * (j2 - 1)) for lv in levels
    )
    assert total == 0
    factors = [physics.quadrupole_geometric_factor(lv) for lv in levels]
    assert math.isclose(sum(factors), 0.0, abs_tol=1e-12)


@given(st.integers(min_value=2, max_value=15), st.data())
def test_factor_is_even_in_m(j2, data):
    m2 = data.draw(st.sampled_from(range(-j2, j2 + 1, 2)))
    plus = physics.quadrupole_geometric_factor(physics.ZeemanLevel(j2, m2))
    minus = physics.quadrupole_geometric_factor(physics.ZeemanLevel(j2, -m2))
    assert plus == minus


@pytest.mark.parametrize(
    "j2,m2",
    [(5, 7), (5, 4), (-1, 1), (3, -5)],
)
def test_invalid_levels(j2, m2):
    with pytest.raises(ValueError):
        physics.ZeemanLevel(j2, m2)


def test_from_halves():
    assert physics.ZeemanLevel.from_halves(2.5, -1.5) == physics.ZeemanLevel(5, -3)
    with pytest.raises(ValueError):
        physics.ZeemanLevel.from_halves(2.5, 0.2)


@pytest.mark.parametrize(
    "beta,expected",
    [(0.0, 2.0), (math.pi / 2, -1.0), (MAGIC_ANGLE, 0.0), (math.pi, 2.0)],
)
def test_angular_factor_symmetric(beta, expected):
    actual = physics.angular_factor(physics.FieldGeometry(beta=beta))
    assert actual == pytest.approx(expected, abs=1e-12)


def test_angular_factor_asymmetry():
    geometry = physics.FieldGeometry(beta=math.pi / 2, epsilon=0.3, alpha=0.0)
    assert physics.angular_factor(geometry) == pytest.approx(-1.3)
    # no asymmetry term along the symmetry axis
    assert physics.angular_factor(geometry.rotated(0.0)) == pytest.approx(2.0)


def test_quadrupole_shift_formula():
    level = physics.ZeemanLevel(5, -5)
    gradient, theta = -2.5e7, 1.83 * DEFAULT_CONSTANTS.quadrupole_unit
    expected = gradient * theta * (-1.0) * 2.0 / (4 * DEFAULT_CONSTANTS.hbar)
    actual = physics.quadrupole_shift(level, gradient, physics.FieldGeometry(), theta)
    assert actual == pytest.approx(expected, rel=1e-14)
    assert actual > 0


def test_quadrupole_shift_linear_in_gradient():
    level = physics.ZeemanLevel(5, 3)
    geometry = physics.FieldGeometry(beta=0.3)
    one = physics.quadrupole_shift(level, 1e7, geometry, 1e-40)
    three = physics.quadrupole_shift(level, 3e7, geometry, 1e-40)
    assert three == pytest.approx(3 * one, rel=1e-14)


def test_angular_factor_averages_to_zero_over_sphere():
    def symmetric(beta):
        return physics.angular_factor(physics.FieldGeometry(beta=beta)) * math.sin(beta)

    def asymmetric(alpha, beta):
        geometry = physics.FieldGeometry(beta=beta, epsilon=0.3, alpha=alpha)
        return physics.angular_factor(geometry) * math.sin(beta)

    total, _ = integrate.quad(symmetric, 0, math.pi)
    assert total / 2 == pytest.approx(0.0, abs=1e-10)
    total, _ = integrate.dblquad(asymmetric, 0, math.pi, 0, 2 * math.pi)
    assert total / (4 * math.pi) == pytest.approx(0.0, abs=1e-10)


@settings(max_examples=50)
@given(
    st.floats(min_value=-10, max_value=10).filter(lambda x: abs(x) > 1e-3),
    st.floats(min_value=-10, max_value=10).filter(lambda x: abs(x) > 1e-3),
    st.floats(min_value=0, max_value=math.pi),
)
def test_quadrupole_shift_bilinear(a, b, beta):
    level = physics.ZeemanLevel(5, 3)
    geometry = physics.FieldGeometry(beta=beta)
    gradient, theta = -2.4e7, 1.83 * DEFAULT_CONSTANTS.quadrupole_unit
    base = physics.quadrupole_shift(level, gradient, geometry, theta)
    scaled = physics.quadrupole_shift(level, a * gradient, geometry, b * theta)
    assert scaled == pytest.approx(a * b * base, rel=1e-12, abs=1e-12)


def test_first_order_zeeman():
    level = physics.ZeemanLevel(5, -5)
    field = 2.9e-4
    expected = -2.5 * 1.2 * DEFAULT_CONSTANTS.bohr_magneton * field / DEFAULT_CONSTANTS.hbar
    actual = physics.zeeman_shift_first_order(level, field)
    assert actual == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        physics.zeeman_shift_first_order(level, float("nan"))


def test_second_order_zeeman():
    shift_hz = physics.zeeman_shift_second_order(physics.DEFAULT_SECOND_ORDER_COEFF, 2.9e-4)
    assert shift_hz / (2 * math.pi) == pytest.approx(-2.9, abs=0.01)
    assert physics.zeeman_shift_second_order(physics.DEFAULT_SECOND_ORDER_COEFF, 0.0) == 0.0


def test_lande_g():
    assert lande_g(4, 1, 5) == Fraction(6, 5)
    assert lande_g(0, 1, 1) == 2
    assert DEFAULT_CONSTANTS.lande_g_D52 == pytest.approx(1.2)


def test_constants_validation():
    with pytest.raises(ValueError):
        PhysicalConstants(ion_mass=-1.0)
    with pytest.raises(ValueError):
        PhysicalConstants(hbar=1.0)


class TestEnvironments(unittest.TestCase):
    def test_field_geometry_validation(self):
        with self.assertRaises(ValueError):
            physics.FieldGeometry(epsilon=-0.1)
        with self.assertRaises(ValueError):
            physics.FieldGeometry(beta=np.inf)

    def test_magnetic_environment_validation(self):
        with self.assertRaises(ValueError):
            physics.MagneticEnvironment(bias_field=-1e-4)
        with self.assertRaises(ValueError):
            physics.MagneticEnvironment(bias_field=1e-4, quasi_static_noise_rms=-1.0)
        env = physics.MagneticEnvironment(bias_field=2.9e-4)
        self.assertEqual(env.axial_gradient, 0.0)
        self.assertEqual(env.second_order_coeff, physics.DEFAULT_SECOND_ORDER_COEFF)
