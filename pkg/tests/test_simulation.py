import math
import unittest

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import dfsramsey.simulation as sim
from dfsramsey.constants import moment_to_si
from dfsramsey.physics import FieldGeometry, MagneticEnvironment
from dfsramsey.simulation.noise import contrast_envelope, sample_shots, substream
from dfsramsey.states import BellStateSpec, field_sensitivity, psi1, psi2
from dfsramsey.trap import TrapEnvironment

TWO_PI = 2 * math.pi


def _setup():
    trap = TrapEnvironment.from_gradient(-2.4e7)
    env = MagneticEnvironment(bias_field=2.9e-4)
    return trap, env, FieldGeometry(), moment_to_si(1.83)


class TestParityExpectation(unittest.TestCase):
    def setUp(self):
        self.noise = sim.NoiseModel()
        self.rate = TWO_PI * 33.35

    def test_start_of_scan(self):
        p = sim.parity_expectation(psi1(contrast=0.9), self.rate, 0.0, self.noise)
        self.assertAlmostEqual(p, 0.9, places=14)

    def test_long_wait(self):
        tau = 0.584
        expected = 0.9 * math.exp(-2 * tau / 1.168) * math.cos(self.rate * tau)
        p = sim.parity_expectation(psi1(contrast=0.9), self.rate, tau, self.noise)
        self.assertAlmostEqual(p, expected, places=12)

    def test_initial_phase(self):
        spec = psi1(contrast=1.0, phi0=math.pi / 2)
        p = sim.parity_expectation(spec, self.rate, 0.0, self.noise)
        self.assertAlmostEqual(p, 0.0, places=14)

    def test_dfs_state_ignores_field_noise(self):
        tau = np.linspace(0, 0.3, 31)
        quiet = sim.parity_expectation(psi1(), self.rate, tau, self.noise)
        noisy = sim.parity_expectation(
            psi1(), self.rate, tau, sim.NoiseModel(quasi_static_B_rms=1e-6)
        )
        np.testing.assert_array_equal(quiet, noisy)

    def test_negative_wait_time(self):
        with self.assertRaises(ValueError):
            sim.parity_expectation(psi1(), self.rate, -1e-3, self.noise)

    def test_gaussian_dephasing_of_sensitive_state(self):
        spec = BellStateSpec((-5, -1, -1, -1), contrast=1.0)
        noise = sim.NoiseModel(quasi_static_B_rms=3e-7, d_state_lifetime=1e9)
        tau = 1 / (abs(field_sensitivity(spec)) * 3e-7)
        p = sim.parity_expectation(spec, 0.0, tau, noise)
        self.assertAlmostEqual(p, math.exp(-0.5), places=6)


@settings(max_examples=50)
@given(
    st.floats(min_value=0, max_value=2.0),
    st.floats(min_value=-500, max_value=500),
    st.floats(min_value=0, max_value=1),
)
def test_envelope_bounds_expectation(tau, rate_hz, contrast):
    noise = sim.NoiseModel(quasi_static_B_rms=1e-7)
    spec = BellStateSpec((-5, -1, -1, -1), contrast=contrast)
    p = sim.parity_expectation(spec, TWO_PI * rate_hz, tau, noise)
    assert abs(p) <= contrast * math.exp(-2 * tau / 1.168) + 1e-12


class TestSampling(unittest.TestCase):
    def test_full_contrast_point(self):
        estimate, sigma = sim.sample_point(1.0, 100, substream(1, 0))
        self.assertEqual((estimate, sigma), (1.0, 0.0))

    def test_single_shot(self):
        for point in range(20):
            estimate, _ = sim.sample_point(0.3, 1, substream(5, point))
            self.assertIn(estimate, (-1.0, 1.0))

    def test_invalid_inputs(self):
        with self.assertRaises(ValueError):
            sim.sample_point(1.2, 100, substream(1, 0))
        with self.assertRaises(ValueError):
            sim.sample_point(0.5, 0, substream(1, 0))
        with self.assertRaises(ValueError):
            sample_shots(np.array([0.2, -1.5]), substream(1, 0))

    def test_binomial_spread(self):
        estimates = np.array(
            [sim.sample_point(0.0, 100, substream(11, i))[0] for i in range(10_000)]
        )
        self.assertAlmostEqual(estimates.mean(), 0.0, delta=0.005)
        self.assertAlmostEqual(estimates.std(ddof=1), 0.1, delta=0.005)

    def test_parity_sigma(self):
        np.testing.assert_allclose(
            sim.parity_sigma([0.0, 0.6, 1.0], 100), [0.1, 0.08, 0.0], atol=1e-15
        )


def test_substreams_are_independent_of_order():
    a = substream(42, 3).random(5)
    substream(42, 2).random(100)
    b = substream(42, 3).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, substream(42, 3, 1).random(5))


def test_derive_seed():
    assert sim.derive_seed(7, 1, 2) == sim.derive_seed(7, 1, 2)
    assert sim.derive_seed(7, 1, 2) != sim.derive_seed(7, 2, 1)
    assert 0 <= sim.derive_seed(2**64 - 1, 0) < 2**64


class TestRunPlan(unittest.TestCase):
    def setUp(self):
        self.trap, self.env, self.geometry, self.theta = _setup()
        self.plan = sim.ExperimentPlan(tuple(sim.reference_schedule()), 100, seed=2024)

    def _run(self, plan, spec=None, n_jobs=1):
        return sim.run_plan(
            plan, spec or psi1(), self.trap, self.env, self.geometry, self.theta,
            n_jobs=n_jobs,
        )

    def test_columns_and_metadata(self):
        dataset = self._run(self.plan)
        self.assertEqual(list(dataset.data.columns), sim.COLUMNS)
        self.assertEqual(len(dataset), 61)
        self.assertEqual(dataset.metadata["seed"], 2024)
        self.assertTrue((dataset.shots == 100).all())
        self.assertAlmostEqual(
            dataset.metadata["true_frequency_hz"],
            abs(dataset.metadata["budget"]["total_hz"]),
        )

    def test_thread_count_does_not_change_output(self):
        single = self._run(self.plan, n_jobs=1)
        threaded = self._run(self.plan, n_jobs=4)
        pd.testing.assert_frame_equal(single.data, threaded.data)

    def test_seed_changes_output(self):
        other = sim.ExperimentPlan(self.plan.wait_times, 100, seed=2025)
        first = self._run(self.plan)
        second = self._run(other)
        self.assertFalse(np.array_equal(first.parity, second.parity))
        np.testing.assert_array_equal(first.tau, second.tau)

    def test_same_seed_reproduces(self):
        pd.testing.assert_frame_equal(self._run(self.plan).data, self._run(self.plan).data)

    def test_empty_plan(self):
        dataset = self._run(sim.ExperimentPlan(()))
        self.assertTrue(dataset.empty)

    def test_preparation_contrast_overrides_state(self):
        plan = sim.ExperimentPlan(
            (0.0,), 100, seed=1, noise=sim.NoiseModel(preparation_contrast=1.0)
        )
        dataset = self._run(plan, spec=psi2(contrast=0.5))
        self.assertEqual(dataset.parity[0], 1.0)

    def test_without_projection_noise(self):
        exact = sim.ExperimentPlan(self.plan.wait_times, 100, seed=1, projection_noise=False)
        other_seed = sim.ExperimentPlan(self.plan.wait_times, 100, seed=2, projection_noise=False)
        dataset = self._run(exact)
        rate = 2 * math.pi * dataset.metadata["budget"]["total_hz"]
        expected = sim.parity_expectation(psi1(), rate, dataset.tau, sim.NoiseModel())
        np.testing.assert_allclose(dataset.parity, expected, rtol=0, atol=1e-12)
        np.testing.assert_allclose(dataset.sigma, sim.parity_sigma(expected, 100), atol=1e-12)
        pd.testing.assert_frame_equal(dataset.data, self._run(other_seed).data)
        self.assertFalse(dataset.metadata["projection_noise"])


def test_per_shot_field_noise_matches_gaussian_envelope():
    spec = BellStateSpec((-5, -1, -1, -1), contrast=1.0)
    trap = TrapEnvironment.from_gradient(-2e7)
    env = MagneticEnvironment(bias_field=0.0, second_order_coeff=0.0)
    noise = sim.NoiseModel(
        quasi_static_B_rms=3e-7, preparation_contrast=1.0, per_shot_field_noise=True
    )
    tau = 1 / (abs(field_sensitivity(spec)) * 3e-7)
    assert tau == pytest.approx(15.8e-6, rel=0.02)
    plan = sim.ExperimentPlan((tau,), shots_per_point=10_000, seed=9, noise=noise)
    dataset = sim.run_plan(plan, spec, trap, env, FieldGeometry(), 0.0)
    analytic = float(contrast_envelope(tau, noise, 1.0, field_sensitivity(spec)))
    assert analytic == pytest.approx(math.exp(-0.5), rel=1e-3)
    assert dataset.parity[0] == pytest.approx(analytic, rel=0.1)


def test_reference_schedule():
    schedule = sim.reference_schedule()
    assert len(schedule) == 61
    assert np.all(np.diff(schedule) >= 0)
    assert not np.any((schedule >= 0.16) & (schedule <= 0.18))
    assert schedule[-1] == pytest.approx(0.3)
    assert np.count_nonzero(schedule == 0.0) == 2
    assert len(sim.reference_schedule(repeat_until=None)) == 56
    assert len(sim.reference_schedule(gap=None, repeat_until=0)) == 61


def test_plan_validation():
    with pytest.raises(ValueError):
        sim.ExperimentPlan((0.0, -1.0))
    with pytest.raises(ValueError):
        sim.ExperimentPlan((0.0,), shots_per_point=0)
    with pytest.raises(ValueError):
        sim.ExperimentPlan((0.0,), seed=2**64)
    with pytest.raises(ValueError):
        sim.NoiseModel(d_state_lifetime=0.0)


def test_dataset_validation():
    with pytest.raises(ValueError):
        sim.ParityDataset(pd.DataFrame({"tau_s": [0.0], "parity": [0.5]}))
    with pytest.raises(ValueError):
        sim.ParityDataset.from_arrays([0.0], [1.5], [0.1], 100)


def test_merge_datasets():
    first = sim.ParityDataset.from_arrays([0.0, 0.2], [0.9, 0.1], [0.04, 0.1], 100)
    second = sim.ParityDataset.from_arrays([0.1], [0.5], [0.08], 50)
    merged = sim.merge_datasets([first, second])
    np.testing.assert_array_equal(merged.tau, [0.0, 0.1, 0.2])
    np.testing.assert_array_equal(merged.shots, [100, 50, 100])
    assert len(merged.metadata["merged"]) == 2
    with pytest.raises(ValueError):
        sim.merge_datasets([])
