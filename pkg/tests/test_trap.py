import math
import unittest

import numpy as np
import pytest

import dfsramsey.trap as trap
from dfsramsey.constants import DEFAULT_CONSTANTS

TWO_PI = 2 * math.pi


class TestTrap(unittest.TestCase):
    def setUp(self):
        self.k = (TWO_PI * 850e3) ** 2 / 500

    def test_axial_frequency_scales_with_sqrt_voltage(self):
        omega = trap.axial_frequency([500, 2000], self.k) / TWO_PI
        np.testing.assert_allclose(omega, [850e3, 1700e3], rtol=1e-12)

    def test_separation_at_reference_frequencies(self):
        d = trap.ion_separation(TWO_PI * np.array([850e3, 1700e3]))
        np.testing.assert_allclose(d * 1e6, [6.25, 3.94], rtol=0.02)

    def test_separation_zero_frequency(self):
        with self.assertRaises(trap.ZeroFrequencyError):
            trap.ion_separation(0.0)
        self.assertTrue(issubclass(trap.ZeroFrequencyError, ValueError))

    def test_gradient_magnitude_and_sign(self):
        g = trap.field_gradient(TWO_PI * 850e3)
        self.assertLess(g, 0)
        self.assertAlmostEqual(abs(g) / 1e6, 11.81, delta=0.12)

    def test_gradient_inverse(self):
        omega = TWO_PI * np.array([300e3, 850e3, 1700e3])
        back = trap.omega_from_gradient(trap.field_gradient(omega))
        np.testing.assert_allclose(back, omega, rtol=1e-12)

    def test_negative_inputs(self):
        with self.assertRaises(ValueError):
            trap.axial_frequency(-1.0, self.k)
        with self.assertRaises(ValueError):
            trap.axial_frequency(1.0, 0.0)
        with self.assertRaises(ValueError):
            trap.field_gradient(-1.0)


def test_gradient_at_ion_doubles():
    assert trap.gradient_at_ion(-3.0) == -6.0
    np.testing.assert_array_equal(trap.gradient_at_ion([1.0, 2.0]), [2.0, 4.0])


def test_from_reference():
    env = trap.TrapEnvironment.from_reference(2000, 500, 850e3)
    assert env.omega_z / TWO_PI == pytest.approx(1700e3, rel=1e-12)
    assert env.separation * 1e6 == pytest.approx(3.94, rel=0.02)
    with pytest.raises(ValueError):
        trap.TrapEnvironment.from_reference(2000, 0, 850e3)


@pytest.mark.parametrize("gradient", [-1.0e7, 1.0e7, -4.5e7])
def test_from_gradient(gradient):
    env = trap.TrapEnvironment.from_gradient(gradient)
    assert env.gradient == pytest.approx(-abs(gradient), rel=1e-12)
    assert env.total_gradient == env.gradient


def test_stray_gradient_adds():
    env = trap.TrapEnvironment.from_gradient(-2e7, stray_gradient=1e5)
    assert env.total_gradient == pytest.approx(-2e7 + 1e5, rel=1e-12)
    with pytest.raises(ValueError):
        trap.TrapEnvironment(100.0, 1.0, stray_gradient=math.nan)


def test_trap_uses_injected_constants():
    env = trap.TrapEnvironment.from_gradient(-1e7, constants=DEFAULT_CONSTANTS)
    assert env.constants is DEFAULT_CONSTANTS


def test_gradient_is_linear_in_tip_voltage():
    k = (TWO_PI * 850e3) ** 2 / 500
    voltages = np.linspace(100, 3000, 10)
    gradients = trap.field_gradient(trap.axial_frequency(voltages, k))
    slope = -DEFAULT_CONSTANTS.ion_mass * k / DEFAULT_CONSTANTS.elementary_charge
    np.testing.assert_allclose(gradients / voltages, slope, rtol=1e-10)
    fitted = np.polyfit(voltages, gradients, 1)
    assert abs(fitted[1]) < 1e-6 * abs(gradients).max()


def test_crystal_scaling_is_constant():
    omega = TWO_PI * np.linspace(300e3, 1800e3, 10)
    product = omega**2 * trap.ion_separation(omega) ** 3
    assert np.ptp(product) / product.mean() < 1e-10


def test_frequency_at_intermediate_voltage():
    env = trap.TrapEnvironment.from_reference(750, 500, 850e3)
    assert env.omega_z / TWO_PI / 1e3 == pytest.approx(1041.0, abs=0.1)
