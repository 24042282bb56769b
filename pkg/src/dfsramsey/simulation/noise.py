"""Parity expectation values and projection-noise sampling used by `run_plan`.

Random numbers come from counter-based Philox substreams keyed by
(seed, point index, stream tag), so a point's draws do not depend on which thread
evaluates it or in which order.
"""

from __future__ import annotations

import numpy as np

from ..constants import DEFAULT_CONSTANTS, PhysicalConstants
from ..states import BellStateSpec, field_sensitivity

PROJECTION_STREAM = 0
FIELD_NOISE_STREAM = 1


def substream(seed: int, point: int, tag: int = PROJECTION_STREAM) -> np.random.Generator:
    """Independent generator for one (seed, point, tag) triple."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(point), int(tag)])
    return np.random.Generator(np.random.Philox(ss))


def contrast_envelope(tau, noise, contrast: float, field_rate: float = 0.0):
    """
    Parity contrast after a wait time tau.

    Spontaneous decay of either ion gives exp(-2 tau / tau_D); quasi-static Gaussian
    field noise dephases a state with field sensitivity ``field_rate`` (rad/s/T) as
    exp(-(field_rate sigma_B tau)^2 / 2); an optional extra rate adds exp(-rate tau).
    """
    tau = np.asarray(tau, dtype=float)
    envelope = contrast * np.exp(-2 * tau / noise.d_state_lifetime)
    if noise.extra_dephasing_rate:
        envelope = envelope * np.exp(-noise.extra_dephasing_rate * tau)
    if field_rate and noise.quasi_static_B_rms:
        envelope = envelope * np.exp(-0.5 * (field_rate * noise.quasi_static_B_rms * tau) ** 2)
    return envelope


def parity_expectation(
    spec: BellStateSpec,
    total_rate: float,
    tau,
    noise,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
):
    """
    Expected parity C0 exp(-2 tau / tau_D) cos(lambda tau + phi0), times the Gaussian
    dephasing factor for states that are not decoherence-free.

    :param spec: Bell state (phase, contrast, field sensitivity)
    :param float total_rate: phase evolution rate lambda (rad/s)
    :param tau: wait time(s) in s, >= 0
    :param noise: NoiseModel
    :return: expectation value(s) in [-1, 1]

    Example::

        parity_expectation(psi1(contrast=1.0), 2 * np.pi * 33.35, 0.584, NoiseModel())
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("Wait times must be >= 0.")
    contrast = noise.contrast_for(spec)
    envelope = contrast_envelope(tau, noise, contrast, field_sensitivity(spec, constants))
    value = envelope * np.cos(total_rate * tau + spec.phi0)
    return float(value) if value.ndim == 0 else value


def parity_sigma(estimate, shots):
    """Projection-noise error sqrt((1 - p^2) / N) of a parity estimate."""
    estimate = np.asarray(estimate, dtype=float)
    return np.sqrt(np.clip(1 - estimate**2, 0, None) / shots)


def sample_point(
    expectation: float, shots: int, stream: np.random.Generator
) -> tuple[float, float]:
    """
    Parity estimate from N projective measurements.

    The number of even-parity outcomes is Binomial(N, (1 + p) / 2); the estimate is
    2k/N - 1.

    :param float expectation: parity expectation p, |p| <= 1
    :param int shots: N >= 1
    :param stream: generator, consumed deterministically
    :return: (estimate, sigma)
    """
    if not abs(expectation) <= 1 + 1e-12:
        raise ValueError(f"Parity expectation must be in [-1, 1], got {expectation}.")
    if shots < 1:
        raise ValueError(f"Need at least one shot, got {shots}.")
    prob = min(max((1 + expectation) / 2, 0.0), 1.0)
    k = stream.binomial(shots, prob)
    estimate = 2 * k / shots - 1
    return float(estimate), float(parity_sigma(estimate, shots))


def sample_shots(
    expectations: np.ndarray, stream: np.random.Generator
) -> tuple[float, float]:
    """Same as :func:`sample_point` but with one expectation value per shot."""
    expectations = np.asarray(expectations, dtype=float)
    if np.any(np.abs(expectations) > 1 + 1e-12):
        raise ValueError("Parity expectations must be in [-1, 1].")
    shots = expectations.size
    even = stream.random(shots) < (1 + expectations) / 2
    estimate = 2 * even.sum() / shots - 1
    return float(estimate), float(parity_sigma(estimate, shots))


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit child seed for one scan point, independent of the parent's other children."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0])
