"""Run configuration: one YAML file per run, parsed strictly into domain objects.

Every physical quantity is written as ``"<number> <unit>"`` (see :mod:`dfsramsey.units`).
Unknown sections or keys, bare numbers for physical quantities and values that the
domain types reject all raise :class:`ConfigError`.

Example file (gradient scan)::

    run:
      mode: gradient-scan
      output_dir: results/gradient
      theta_true: 1.917 ea02
    trap:
      calibration_voltage: 500 V
      calibration_frequency: 850 kHz
      gradients: [10 V/mm2, 15 V/mm2, 20 V/mm2, 25 V/mm2, 30 V/mm2]
    magnetic:
      bias_field: 2.9 G
      axial_gradient: -0.079 G/m
    plan:
      wait_times: {span: 300 ms, step: 2 ms}
      shots_per_point: 100
      seed: 7
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .constants import DEFAULT_CONSTANTS
from .estimation import FitConfig
from .physics import DEFAULT_SECOND_ORDER_COEFF, FieldGeometry, MagneticEnvironment
from .simulation import D52_LIFETIME, ExperimentPlan, NoiseModel, reference_schedule
from .states import BellStateSpec, psi1, psi2
from .trap import TrapEnvironment
from .units import UnitError, parse_quantities, parse_quantity

logger = logging.getLogger(__name__)

MODES = ("parity-scan", "angle-scan", "gradient-scan", "extract", "fit-only")
SIMULATION_MODES = ("parity-scan", "angle-scan", "gradient-scan")

# section -> key -> dimension (a units.UNITS key) or a python type
SCHEMA = {
    "run": {
        "mode": str,
        "output_dir": str,
        "theta_true": "moment",
        "emit_plot_data": bool,
        "n_jobs": int,
    },
    "trap": {
        "calibration_voltage": "voltage",
        "calibration_frequency": "frequency",
        "tip_voltages": ["voltage"],
        "gradients": ["field_gradient"],
        "stray_gradient": "field_gradient",
    },
    "geometry": {
        "beta": "angle",
        "epsilon": float,
        "alpha": "angle",
        "beta0": "angle",
        "scan_angles": ["angle"],
    },
    "magnetic": {
        "bias_field": "magnetic_field",
        "axial_gradient": "magnetic_gradient",
        "second_order_coeff": "second_order",
        "noise_rms": "magnetic_field",
    },
    "states": list,
    "noise": {
        "d_state_lifetime": "time",
        "extra_dephasing_rate": "rate",
        "preparation_contrast": float,
        "per_shot_field_noise": bool,
    },
    "plan": {
        "wait_times": object,
        "shots_per_point": int,
        "seed": int,
        "projection_noise": bool,
    },
    "fit": {
        "f_min": "frequency",
        "f_max": "frequency",
        "oversampling": int,
        "n_starts": int,
        "max_iter": int,
    },
    "extract": {
        "slope": "slope",
        "slope_sigma": "slope",
        "delta_beta": "angle",
        "delta0": "frequency",
    },
    "fit_only": {"datasets": list, "delta_beta": "angle"},
}

STATE_KEYS = {"name": str, "twice_m": list, "contrast": float, "phi0": "angle", "manifolds": list}
SCHEDULE_KEYS = {"span": "time", "step": "time", "gap": ["time"], "repeat_until": "time"}
DATASET_KEYS = {"path": str, "state": str, "gradient": "field_gradient", "phi0": "angle"}


class ConfigError(ValueError):
    """Invalid run configuration."""


def _check_keys(mapping, allowed, where: str):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(mapping).__name__}.")
    unknown = sorted(set(mapping).difference(allowed))
    if unknown:
        raise ConfigError(f"Unknown key(s) in {where}: {', '.join(map(str, unknown))}.")


def _value(mapping, key, kind, where: str, default=None):
    if key not in mapping or mapping[key] is None:
        return default
    raw = mapping[key]
    label = f"{where}.{key}"
    try:
        if isinstance(kind, list):
            return parse_quantities(raw, kind[0])
        if isinstance(kind, str):
            return parse_quantity(raw, kind)
    except UnitError as err:
        raise ConfigError(f"{label}: {err}") from err
    if kind is float:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{label} must be a number, got {raw!r}.")
        return float(raw)
    if kind is int:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{label} must be an integer, got {raw!r}.")
        return raw
    if kind is bool:
        if not isinstance(raw, bool):
            raise ConfigError(f"{label} must be true or false, got {raw!r}.")
        return raw
    if kind in (str, list) and not isinstance(raw, kind):
        raise ConfigError(f"{label} must be a {kind.__name__}, got {raw!r}.")
    return raw


@dataclass(frozen=True)
class FitOnlyDataset:
    path: Path
    state: str
    gradient: float | None = None
    phi0: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    """
    Fully parsed run configuration.

    ``raw`` keeps the YAML mapping (with CLI overrides applied) for the config echo.
    Quantities are in internal units: SI, slopes in Hz mm^2/V.
    """

    mode: str
    output_dir: Path
    raw: dict
    theta: float = 0.0
    emit_plot_data: bool = False
    n_jobs: int = 1
    traps: list[TrapEnvironment] = field(default_factory=list)
    geometry: FieldGeometry = field(default_factory=FieldGeometry)
    beta0: float = 0.0
    scan_angles: list[float] = field(default_factory=list)
    magnetic: MagneticEnvironment | None = None
    states: list[BellStateSpec] = field(default_factory=list)
    noise: NoiseModel = field(default_factory=NoiseModel)
    wait_times: tuple[float, ...] = ()
    shots_per_point: int = 100
    seed: int = 0
    projection_noise: bool = True
    fit: FitConfig = field(default_factory=FitConfig)
    slope: float | None = None
    slope_sigma: float = 0.0
    delta_beta: float = 0.0
    delta0: float | None = None
    datasets: list[FitOnlyDataset] = field(default_factory=list)

    @property
    def plan(self) -> ExperimentPlan:
        return ExperimentPlan(
            self.wait_times, self.shots_per_point, self.seed, self.noise, self.projection_noise
        )

    def with_overrides(
        self,
        seed: int | None = None,
        output_dir=None,
        n_jobs: int | None = None,
        emit_plot_data: bool | None = None,
    ) -> "RunConfig":
        """
        Apply command-line overrides, keeping ``raw`` in sync for the echo.

        ``n_jobs`` only changes how the run executes, not its outputs, and is not echoed.
        """
        raw = copy.deepcopy(self.raw)
        changes = {}
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError(f"Seed must fit in 64 bits, got {seed}.")
            raw.setdefault("plan", {})["seed"] = seed
            changes["seed"] = seed
        if output_dir is not None:
            raw.setdefault("run", {})["output_dir"] = str(output_dir)
            changes["output_dir"] = Path(output_dir)
        if n_jobs is not None:
            if n_jobs < 1:
                raise ConfigError(f"n_jobs must be >= 1, got {n_jobs}.")
            changes["n_jobs"] = n_jobs
        if emit_plot_data is not None:
            raw.setdefault("run", {})["emit_plot_data"] = emit_plot_data
            changes["emit_plot_data"] = emit_plot_data
        return replace(self, raw=raw, **changes)


def _parse_schedule(raw) -> tuple[float, ...]:
    if isinstance(raw, list):
        try:
            return tuple(parse_quantities(raw, "time"))
        except UnitError as err:
            raise ConfigError(f"plan.wait_times: {err}") from err
    _check_keys(raw, SCHEDULE_KEYS, "plan.wait_times")
    where = "plan.wait_times"
    span = _value(raw, "span", "time", where, 0.3)
    step = _value(raw, "step", "time", where, 0.005)
    repeat_until = _value(raw, "repeat_until", "time", where, 0.0)
    gap = _value(raw, "gap", ["time"], where)
    if gap is not None and len(gap) != 2:
        raise ConfigError("plan.wait_times.gap must be [start, stop].")
    if not (span > 0 and 0 < step <= span):
        raise ConfigError(f"Invalid schedule span={span} s, step={step} s.")
    times = reference_schedule(span, step, tuple(gap) if gap else None, repeat_until)
    return tuple(float(t) for t in times)


def _parse_state(raw, index: int) -> BellStateSpec:
    where = f"states[{index}]"
    _check_keys(raw, STATE_KEYS, where)
    twice_m = _value(raw, "twice_m", list, where)
    if twice_m is None:
        raise ConfigError(f"{where}.twice_m is required.")
    manifolds = _value(raw, "manifolds", list, where, ["D"] * 4)
    try:
        return BellStateSpec(
            tuple(twice_m),
            phi0=_value(raw, "phi0", "angle", where, 0.0),
            contrast=_value(raw, "contrast", float, where, 0.9),
            manifolds=tuple(manifolds),
            name=_value(raw, "name", str, where, f"state{index}"),
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}: {err}") from err


def _parse_traps(raw) -> list[TrapEnvironment]:
    _check_keys(raw, SCHEMA["trap"], "trap")
    u_ref = _value(raw, "calibration_voltage", "voltage", "trap")
    f_ref = _value(raw, "calibration_frequency", "frequency", "trap")
    stray = _value(raw, "stray_gradient", "field_gradient", "trap", 0.0)
    voltages = _value(raw, "tip_voltages", ["voltage"], "trap")
    gradients = _value(raw, "gradients", ["field_gradient"], "trap")
    if voltages is not None and gradients is not None:
        raise ConfigError("Give either trap.tip_voltages or trap.gradients, not both.")
    if voltages is None and gradients is None:
        raise ConfigError("trap needs tip_voltages or gradients.")
    if voltages is not None and (u_ref is None or f_ref is None):
        raise ConfigError("Tip voltages need calibration_voltage and calibration_frequency.")
    try:
        if voltages is not None:
            return [
                TrapEnvironment.from_reference(u, u_ref, f_ref, stray, DEFAULT_CONSTANTS)
                for u in voltages
            ]
        k = (2 * math.pi * f_ref) ** 2 / u_ref if u_ref and f_ref else 1.0
        return [
            TrapEnvironment.from_gradient(g, stray, DEFAULT_CONSTANTS, cal_constant=k)
            for g in gradients
        ]
    except ValueError as err:
        raise ConfigError(f"trap: {err}") from err


def _parse_magnetic(raw) -> MagneticEnvironment:
    _check_keys(raw, SCHEMA["magnetic"], "magnetic")
    bias = _value(raw, "bias_field", "magnetic_field", "magnetic")
    if bias is None:
        raise ConfigError("magnetic.bias_field is required.")
    try:
        return MagneticEnvironment(
            bias_field=bias,
            axial_gradient=_value(raw, "axial_gradient", "magnetic_gradient", "magnetic", 0.0),
            second_order_coeff=_value(
                raw, "second_order_coeff", "second_order", "magnetic", DEFAULT_SECOND_ORDER_COEFF
            ),
            quasi_static_noise_rms=_value(raw, "noise_rms", "magnetic_field", "magnetic", 0.0),
        )
    except ValueError as err:
        raise ConfigError(f"magnetic: {err}") from err


def parse_config(raw: dict, base_dir=None) -> RunConfig:
    """
    Build a RunConfig from a parsed YAML mapping.

    :param dict raw: mapping with the sections of :data:`SCHEMA`
    :param base_dir: directory relative dataset paths are resolved against
    :raises ConfigError: on any invalid entry
    """
    if not isinstance(raw, dict):
        raise ConfigError("The config file must contain a mapping of sections.")
    unknown = sorted(set(raw).difference(SCHEMA))
    if unknown:
        raise ConfigError(f"Unknown section(s): {', '.join(map(str, unknown))}.")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    run = raw.get("run") or {}
    _check_keys(run, SCHEMA["run"], "run")
    mode = _value(run, "mode", str, "run")
    if mode not in MODES:
        raise ConfigError(f"run.mode must be one of {', '.join(MODES)}, got {mode!r}.")
    n_jobs = _value(run, "n_jobs", int, "run", 1)
    if n_jobs < 1:
        raise ConfigError(f"run.n_jobs must be >= 1, got {n_jobs}.")
    options = {
        "mode": mode,
        "output_dir": Path(_value(run, "output_dir", str, "run", f"results/{mode}")),
        "raw": copy.deepcopy(raw),
        "theta": _value(run, "theta_true", "moment", "run", 0.0),
        "emit_plot_data": _value(run, "emit_plot_data", bool, "run", False),
        "n_jobs": n_jobs,
    }

    geometry = raw.get("geometry") or {}
    _check_keys(geometry, SCHEMA["geometry"], "geometry")
    try:
        options["geometry"] = FieldGeometry(
            beta=_value(geometry, "beta", "angle", "geometry", 0.0),
            epsilon=_value(geometry, "epsilon", float, "geometry", 0.0),
            alpha=_value(geometry, "alpha", "angle", "geometry", 0.0),
        )
    except ValueError as err:
        raise ConfigError(f"geometry: {err}") from err
    options["beta0"] = _value(geometry, "beta0", "angle", "geometry", 0.0)
    options["scan_angles"] = _value(geometry, "scan_angles", ["angle"], "geometry", [])

    if "trap" in raw:
        options["traps"] = _parse_traps(raw["trap"] or {})
    if "magnetic" in raw:
        options["magnetic"] = _parse_magnetic(raw["magnetic"] or {})

    states = raw.get("states")
    if states is None:
        # angle scans cross the magic angle: the prepared phase must reveal the sign
        phi0 = math.pi / 2 if mode == "angle-scan" else 0.0
        options["states"] = [psi1(phi0=phi0), psi2(phi0=phi0)]
    elif not isinstance(states, list) or not states:
        raise ConfigError("states must be a non-empty list.")
    else:
        options["states"] = [_parse_state(s, i) for i, s in enumerate(states)]

    noise = raw.get("noise") or {}
    _check_keys(noise, SCHEMA["noise"], "noise")
    try:
        options["noise"] = NoiseModel(
            d_state_lifetime=_value(noise, "d_state_lifetime", "time", "noise", D52_LIFETIME),
            extra_dephasing_rate=_value(noise, "extra_dephasing_rate", "rate", "noise", 0.0),
            preparation_contrast=_value(noise, "preparation_contrast", float, "noise"),
            per_shot_field_noise=_value(noise, "per_shot_field_noise", bool, "noise", False),
        )
    except ValueError as err:
        raise ConfigError(f"noise: {err}") from err

    plan = raw.get("plan") or {}
    _check_keys(plan, SCHEMA["plan"], "plan")
    if "wait_times" in plan:
        options["wait_times"] = _parse_schedule(plan["wait_times"])
    options["shots_per_point"] = _value(plan, "shots_per_point", int, "plan", 100)
    options["seed"] = _value(plan, "seed", int, "plan", 0)
    options["projection_noise"] = _value(plan, "projection_noise", bool, "plan", True)
    if options["shots_per_point"] < 1:
        raise ConfigError("plan.shots_per_point must be >= 1.")
    if not 0 <= options["seed"] < 2**64:
        raise ConfigError("plan.seed must fit in 64 bits.")

    fit = raw.get("fit") or {}
    _check_keys(fit, SCHEMA["fit"], "fit")
    try:
        options["fit"] = FitConfig(
            f_min=_value(fit, "f_min", "frequency", "fit"),
            f_max=_value(fit, "f_max", "frequency", "fit"),
            oversampling=_value(fit, "oversampling", int, "fit", 10),
            n_starts=_value(fit, "n_starts", int, "fit", 3),
            max_iter=_value(fit, "max_iter", int, "fit", 200),
        )
    except ValueError as err:
        raise ConfigError(f"fit: {err}") from err

    extract = raw.get("extract") or {}
    _check_keys(extract, SCHEMA["extract"], "extract")
    options["slope"] = _value(extract, "slope", "slope", "extract")
    options["slope_sigma"] = _value(extract, "slope_sigma", "slope", "extract", 0.0)
    options["delta_beta"] = _value(extract, "delta_beta", "angle", "extract", 0.0)
    options["delta0"] = _value(extract, "delta0", "frequency", "extract")

    fit_only = raw.get("fit_only") or {}
    _check_keys(fit_only, SCHEMA["fit_only"], "fit_only")
    if "delta_beta" in fit_only:
        options["delta_beta"] = _value(fit_only, "delta_beta", "angle", "fit_only")
    datasets = []
    for i, entry in enumerate(_value(fit_only, "datasets", list, "fit_only", [])):
        where = f"fit_only.datasets[{i}]"
        _check_keys(entry, DATASET_KEYS, where)
        path = _value(entry, "path", str, where)
        state = _value(entry, "state", str, where)
        if path is None or state is None:
            raise ConfigError(f"{where} needs path and state.")
        path = Path(path)
        datasets.append(
            FitOnlyDataset(
                path=path if path.is_absolute() else base_dir / path,
                state=state,
                gradient=_value(entry, "gradient", "field_gradient", where),
                phi0=_value(entry, "phi0", "angle", where, 0.0),
            )
        )
    options["datasets"] = datasets

    config = RunConfig(**options)
    _check_mode(config)
    return config


def _check_mode(config: RunConfig):
    mode = config.mode
    if mode in SIMULATION_MODES:
        if not config.traps:
            raise ConfigError(f"Mode {mode} needs a trap section.")
        if config.magnetic is None:
            raise ConfigError(f"Mode {mode} needs a magnetic section.")
        if not config.wait_times:
            raise ConfigError(f"Mode {mode} needs plan.wait_times.")
        if not config.theta:
            logger.warning("run.theta_true is zero, the simulated quadrupole shift vanishes.")
    if mode == "parity-scan" and len(config.traps) != 1:
        raise ConfigError("parity-scan simulates a single trap setting.")
    if mode == "angle-scan":
        if len(config.traps) != 1:
            raise ConfigError("angle-scan simulates a single trap setting.")
        if len(config.scan_angles) < 4 or np.ptp(config.scan_angles) < math.pi / 2 - 1e-12:
            raise ConfigError("geometry.scan_angles needs >= 4 angles spanning >= 90 deg.")
        for spec in config.states:
            if abs(math.sin(spec.phi0)) < 1e-9:
                raise ConfigError(
                    f"State {spec.name} has phi0 = {math.degrees(spec.phi0):g} deg; an angle "
                    "scan needs sin(phi0) != 0 to tell the sign of the shift."
                )
    if mode == "gradient-scan" and len(config.traps) < 4:
        raise ConfigError("gradient-scan needs at least 4 trap settings.")
    if mode == "extract" and config.slope is None:
        raise ConfigError("extract needs extract.slope.")
    if mode == "fit-only" and not config.datasets:
        raise ConfigError("fit-only needs fit_only.datasets.")


def load_config(path) -> RunConfig:
    """
    Read and validate a YAML run configuration.

    :param path: YAML file
    :return: RunConfig; relative dataset paths resolve against the file's directory
    :raises ConfigError: unreadable YAML or invalid content
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"Cannot read config {path}: {err}") from err
    logger.info("Loaded config %s", path)
    return parse_config(raw, base_dir=path.parent)
