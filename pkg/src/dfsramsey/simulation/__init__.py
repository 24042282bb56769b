"""Monte-Carlo simulation of Ramsey parity measurements on a two-ion Bell state.

The higher-level entry point is `run_plan`, which evaluates a schedule of wait times
for one state and returns a `ParityDataset`. Expectation values and sampling live
in noise.py.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from ..constants import angular_to_hz
from ..physics import FieldGeometry, MagneticEnvironment
from ..states import BellStateSpec, field_sensitivity, phase_rate
from ..trap import TrapEnvironment
from .noise import (
    FIELD_NOISE_STREAM,
    PROJECTION_STREAM,
    contrast_envelope,
    derive_seed,
    parity_expectation,
    parity_sigma,
    sample_point,
    sample_shots,
    substream,
)

__all__ = [
    "COLUMNS",
    "ExperimentPlan",
    "NoiseModel",
    "ParityDataset",
    "derive_seed",
    "merge_datasets",
    "reference_schedule",
    "parity_expectation",
    "parity_sigma",
    "run_plan",
    "sample_point",
    "substream",
]

logger = logging.getLogger(__name__)

COLUMNS = ["tau_s", "parity", "sigma", "shots"]

D52_LIFETIME = 1.168  # s


@dataclass(frozen=True)
class NoiseModel:
    """
    Decoherence and preparation imperfections.

    :param float d_state_lifetime: tau_D of the D5/2 level (s)
    :param float quasi_static_B_rms: shot-to-shot field noise sigma_B (T)
    :param preparation_contrast: C0 overriding the state's own contrast if given
    :param float extra_dephasing_rate: additional exponential dephasing (1/s)
    :param bool per_shot_field_noise: draw the field offset per shot instead of using
        the analytic Gaussian envelope
    """

    d_state_lifetime: float = D52_LIFETIME
    quasi_static_B_rms: float = 0.0
    preparation_contrast: float | None = None
    extra_dephasing_rate: float = 0.0
    per_shot_field_noise: bool = False

    def __post_init__(self):
        if not self.d_state_lifetime > 0:
            raise ValueError(f"tau_D must be > 0, got {self.d_state_lifetime}.")
        if not self.quasi_static_B_rms >= 0:
            raise ValueError(f"sigma_B must be >= 0, got {self.quasi_static_B_rms}.")
        if self.preparation_contrast is not None and not 0 <= self.preparation_contrast <= 1:
            raise ValueError(
                f"Preparation contrast must be in [0, 1], got {self.preparation_contrast}."
            )
        if not self.extra_dephasing_rate >= 0:
            raise ValueError("extra_dephasing_rate must be >= 0.")

    def contrast_for(self, spec: BellStateSpec) -> float:
        if self.preparation_contrast is None:
            return spec.contrast
        return self.preparation_contrast


@dataclass(frozen=True)
class ExperimentPlan:
    """
    Wait-time schedule, repetitions per point and seed.

    With ``projection_noise=False`` every point holds the exact parity expectation p
    and the binomial error sqrt((1 - p^2) / N) it would have with ``shots_per_point``
    shots; nothing is drawn.
    """

    wait_times: tuple[float, ...]
    shots_per_point: int = 100
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    projection_noise: bool = True

    def __post_init__(self):
        times = tuple(float(t) for t in self.wait_times)
        object.__setattr__(self, "wait_times", times)
        if not all(np.isfinite(t) and t >= 0 for t in times):
            raise ValueError("Wait times must be finite and >= 0.")
        if self.shots_per_point < 1:
            raise ValueError(f"Need at least one shot per point, got {self.shots_per_point}.")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("Seed must fit in 64 bits.")


@dataclass
class ParityDataset:
    """
    Binned parity measurements.

    ``data`` has one row per wait time with columns tau_s, parity, sigma, shots;
    ``metadata`` is a JSON-serialisable dict (seed, state, environment snapshot).
    """

    data: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = set(COLUMNS).difference(self.data.columns)
        if missing:
            raise ValueError(f"ParityDataset is missing columns {sorted(missing)}.")
        self.data = self.data[COLUMNS].reset_index(drop=True)
        if (self.data["parity"].abs() > 1).any():
            raise ValueError("Parity estimates must be in [-1, 1].")

    @classmethod
    def from_arrays(cls, tau, parity, sigma, shots, metadata=None) -> "ParityDataset":
        n = len(tau)
        data = pd.DataFrame(
            {
                "tau_s": np.asarray(tau, dtype=float),
                "parity": np.asarray(parity, dtype=float),
                "sigma": np.array(np.broadcast_to(np.asarray(sigma, dtype=float), (n,))),
                "shots": np.array(np.broadcast_to(np.asarray(shots, dtype=int), (n,))),
            }
        )
        return cls(data, dict(metadata or {}))

    def __len__(self) -> int:
        return len(self.data)

    @property
    def empty(self) -> bool:
        return self.data.empty

    @property
    def tau(self) -> np.ndarray:
        return self.data["tau_s"].to_numpy(dtype=float)

    @property
    def parity(self) -> np.ndarray:
        return self.data["parity"].to_numpy(dtype=float)

    @property
    def sigma(self) -> np.ndarray:
        return self.data["sigma"].to_numpy(dtype=float)

    @property
    def shots(self) -> np.ndarray:
        return self.data["shots"].to_numpy(dtype=int)


def reference_schedule(
    span: float = 0.3,
    step: float = 0.005,
    gap: tuple[float, float] | None = (0.16, 0.18),
    repeat_until: float | None = 0.02,
) -> np.ndarray:
    """
    Nonuniform wait-time schedule: a regular grid up to ``span`` with no points inside
    ``gap`` and the early points (``<= repeat_until``) taken twice.

    :return: sorted numpy array of wait times in s

    Example::

        reference_schedule()  # 61 points over [0, 300 ms], none around 170 ms
    """
    n = int(round(span / step)) + 1
    grid = np.round(np.linspace(0, span, n), 12)
    if gap is not None:
        grid = grid[(grid < gap[0]) | (grid > gap[1])]
    if not repeat_until or repeat_until <= 0:
        return grid
    repeats = grid[grid <= repeat_until]
    return np.sort(np.concatenate([grid, repeats]), kind="mergesort")


def _state_snapshot(spec: BellStateSpec) -> dict:
    return {
        "name": spec.name,
        "twice_m": list(spec.twice_m),
        "phi0": spec.phi0,
        "contrast": spec.contrast,
        "manifold_j2": spec.manifold_j2,
        "manifolds": list(spec.manifolds),
    }


def _trap_snapshot(trap: TrapEnvironment) -> dict:
    return {
        "tip_voltage": trap.tip_voltage,
        "cal_constant": trap.cal_constant,
        "stray_gradient": trap.stray_gradient,
        "omega_z": trap.omega_z,
        "gradient": trap.gradient,
        "separation": trap.separation,
    }


def run_plan(
    plan: ExperimentPlan,
    spec: BellStateSpec,
    trap: TrapEnvironment,
    env: MagneticEnvironment,
    geometry: FieldGeometry,
    theta: float,
    n_jobs: int = 1,
    ion_sep: float | None = None,
) -> ParityDataset:
    """
    Simulate parity measurements for every wait time of a plan.

    The shift budget is computed once; each point is sampled from its own substream,
    so the dataset is identical for any ``n_jobs``.

    :param plan: schedule, shots, seed and noise model
    :param spec: Bell state
    :param trap: trap operating point
    :param env: magnetic environment
    :param geometry: field orientation
    :param float theta: quadrupole moment (C m^2)
    :param int n_jobs: number of worker threads
    :return: ParityDataset with full metadata

    Example::

        plan = ExperimentPlan(tuple(reference_schedule()), shots_per_point=100, seed=1)
        data = run_plan(plan, psi1(), trap, env, FieldGeometry(), theta)
    """
    budget = phase_rate(spec, trap, env, geometry, theta, ion_sep=ion_sep)
    rate = budget.total
    noise = plan.noise
    field_rate = field_sensitivity(spec, trap.constants)
    sigma_b = env.quasi_static_noise_rms or noise.quasi_static_B_rms
    if env.quasi_static_noise_rms and noise.quasi_static_B_rms:
        if env.quasi_static_noise_rms != noise.quasi_static_B_rms:
            logger.warning(
                "Field noise given twice (environment and noise model), using %.3g T.",
                sigma_b,
            )
    if sigma_b != noise.quasi_static_B_rms:
        noise = NoiseModel(
            d_state_lifetime=noise.d_state_lifetime,
            quasi_static_B_rms=sigma_b,
            preparation_contrast=noise.preparation_contrast,
            extra_dephasing_rate=noise.extra_dephasing_rate,
            per_shot_field_noise=noise.per_shot_field_noise,
        )
    contrast = noise.contrast_for(spec)
    shots = plan.shots_per_point

    def _point(item):
        index, tau = item
        if not plan.projection_noise:
            p = parity_expectation(spec, rate, tau, noise, trap.constants)
            return float(p), float(parity_sigma(p, shots))
        stream = substream(plan.seed, index, PROJECTION_STREAM)
        if noise.per_shot_field_noise and field_rate and noise.quasi_static_B_rms:
            offsets = substream(plan.seed, index, FIELD_NOISE_STREAM).normal(
                0.0, noise.quasi_static_B_rms, shots
            )
            # the per-shot draws replace the analytic Gaussian envelope
            envelope = contrast_envelope(tau, noise, contrast, 0.0)
            p = envelope * np.cos((rate + field_rate * offsets) * tau + spec.phi0)
            return sample_shots(p, stream)
        p = parity_expectation(spec, rate, tau, noise, trap.constants)
        return sample_point(p, shots, stream)

    items = list(enumerate(plan.wait_times))
    if n_jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_point, items))
    else:
        results = [_point(item) for item in items]

    estimates = [r[0] for r in results]
    sigmas = [r[1] for r in results]
    metadata = {
        "seed": int(plan.seed),
        "shots_per_point": shots,
        "projection_noise": plan.projection_noise,
        "state": _state_snapshot(spec),
        "trap": _trap_snapshot(trap),
        "magnetic": asdict(env),
        "geometry": asdict(geometry),
        "theta": theta,
        "noise": asdict(noise),
        "budget": budget.to_dict(),
        "true_frequency_hz": abs(angular_to_hz(rate)),
    }
    logger.debug(
        "Simulated %d points for %s at %.4f Hz", len(items), spec, angular_to_hz(rate)
    )
    return ParityDataset.from_arrays(
        list(plan.wait_times), estimates, sigmas, shots, metadata
    )


def merge_datasets(datasets: list[ParityDataset]) -> ParityDataset:
    """Merge several datasets of the same state into one, sorted by wait time."""
    if not datasets:
        raise ValueError("Nothing to merge.")
    data = pd.concat([d.data for d in datasets], ignore_index=True)
    data = data.sort_values("tau_s", kind="mergesort").reset_index(drop=True)
    return ParityDataset(data, {"merged": [d.metadata for d in datasets]})
