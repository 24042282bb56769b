"""Config-driven runs: simulate, fit and write every output of one mode.

Each ``run_*`` function takes a :class:`~dfsramsey.config.RunConfig`, writes into
``config.output_dir`` and returns a :class:`PipelineResult`. Fits that fail or do not
converge are recorded in their report and counted in ``n_failed``; the run itself
continues so partial outputs are always written.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .config import ConfigError, RunConfig
from .constants import angular_to_hz, si_to_vmm2
from .estimation import (
    FitError,
    combine_state_fits,
    decompose_offset,
    extract_moment,
    fit_angular,
    fit_damped_sinusoid,
    fit_linear_weighted,
    fit_power_law,
)
from .io import (
    echo_config,
    read_dataset,
    write_dataset,
    write_json,
    write_manifest,
    write_plot_data,
    write_table,
)
from .simulation import ExperimentPlan, derive_seed, run_plan
from .states import decompose_average_difference, phase_rate
from .utils import normalize_angle

logger = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    mode: str
    out_dir: Path
    outputs: list[Path] = field(default_factory=list)
    n_failed: int = 0
    summary: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.n_failed == 0


@dataclass
class _StateFit:
    """Fit of one dataset plus the bookkeeping the scans need."""

    name: str
    phi0: float
    fit: object = None
    error: str = ""
    true_frequency: float = float("nan")

    @property
    def failed(self) -> bool:
        return self.fit is None or not self.fit.converged or self.fit.degenerate

    @property
    def frequency(self) -> float:
        if self.fit is None or self.fit.degenerate:
            return float("nan")
        return self.fit.signed_frequency(self.phi0)

    @property
    def frequency_err(self) -> float:
        if self.fit is None or self.fit.degenerate:
            return float("nan")
        return self.fit.frequency_err

    def report(self, fit_config) -> dict:
        report = {"state": self.name, "config": fit_config.to_dict()}
        if self.fit is None:
            report["error"] = self.error
        else:
            report["fit"] = self.fit.to_dict()
            report["signed_frequency_hz"] = self.frequency
        if np.isfinite(self.true_frequency):
            report["true_frequency_hz"] = self.true_frequency
        return report


def _fit_dataset(dataset, name: str, phi0: float, config: RunConfig) -> _StateFit:
    result = _StateFit(name=name, phi0=phi0)
    budget = dataset.metadata.get("budget")
    if budget:
        result.true_frequency = budget["total_hz"]
    try:
        result.fit = fit_damped_sinusoid(dataset, config.fit)
    except FitError as err:
        logger.warning("Fit of %s failed: %s", name, err)
        result.error = str(err)
    return result


def _pair(fits: list[_StateFit]) -> dict:
    """Average and half-difference of the first two states, fitted and true."""
    first, second = fits[0], fits[1]
    row = {
        "delta_hz": float("nan"),
        "delta_sigma_hz": float("nan"),
        "delta_gradient_hz": float("nan"),
        "delta_gradient_sigma_hz": float("nan"),
    }
    if first.fit is not None and second.fit is not None:
        pair = combine_state_fits(first.fit, second.fit)
        delta, gradient_part = decompose_average_difference(first.frequency, second.frequency)
        row.update(pair.to_dict())
        row["delta_hz"] = delta
        row["delta_gradient_hz"] = gradient_part
    true_delta, true_gradient = decompose_average_difference(
        first.true_frequency, second.true_frequency
    )
    row["true_delta_hz"] = true_delta
    row["true_delta_gradient_hz"] = true_gradient
    return row


def _simulate_states(config: RunConfig, trap, geometry, seed, out_dir, prefix, result):
    fits = []
    for index, spec in enumerate(config.states):
        name = spec.name or f"state{index}"
        plan = ExperimentPlan(
            config.wait_times,
            config.shots_per_point,
            seed(index),
            config.noise,
            config.projection_noise,
        )
        dataset = run_plan(
            plan, spec, trap, config.magnetic, geometry, config.theta, n_jobs=config.n_jobs
        )
        result.outputs.extend(write_dataset(dataset, out_dir / f"{prefix}{name}"))
        state_fit = _fit_dataset(dataset, name, spec.phi0, config)
        result.outputs.append(
            write_json(state_fit.report(config.fit), out_dir / f"fit_{prefix}{name}.json")
        )
        if state_fit.failed:
            result.n_failed += 1
        if config.emit_plot_data:
            result.outputs.append(
                write_plot_data(
                    out_dir / f"plot_{prefix}{name}.csv",
                    dataset.tau,
                    dataset.parity,
                    dataset.sigma,
                )
            )
            if state_fit.fit is not None and not state_fit.fit.degenerate:
                fine = np.linspace(0, dataset.tau.max(), 500)
                result.outputs.append(
                    write_plot_data(
                        out_dir / f"plot_{prefix}{name}_fit.csv", fine, state_fit.fit.model(fine)
                    )
                )
        fits.append(state_fit)
    return fits


def _finish(config: RunConfig, result: PipelineResult) -> PipelineResult:
    out_dir = result.out_dir
    result.outputs.append(echo_config(config.raw, out_dir / "config.yaml"))
    seed = config.seed if config.mode in ("parity-scan", "angle-scan", "gradient-scan") else None
    result.outputs.append(out_dir / "manifest.json")
    write_manifest(
        out_dir,
        config.mode,
        config.raw,
        seed,
        result.outputs,
        extra={"n_failed_fits": result.n_failed},
    )
    if result.n_failed:
        logger.warning("%d fit(s) failed or did not converge.", result.n_failed)
    logger.info("Finished %s run in %s", config.mode, out_dir)
    return result


def _start(config: RunConfig) -> PipelineResult:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return PipelineResult(mode=config.mode, out_dir=out_dir)


def run_parity_scan(config: RunConfig) -> PipelineResult:
    """
    Simulate and fit the parity oscillations of every configured state at one trap setting.

    Writes one dataset (CSV + JSON) and one fit report per state and, for two states,
    ``decomposition.json`` with Delta and Delta_B' (fitted and true).
    """
    result = _start(config)
    trap = config.traps[0]
    fits = _simulate_states(
        config,
        trap,
        config.geometry,
        lambda index: derive_seed(config.seed, 0, index),
        result.out_dir,
        "",
        result,
    )
    if len(fits) >= 2:
        decomposition = _pair(fits)
        result.summary["decomposition"] = decomposition
        result.outputs.append(write_json(decomposition, result.out_dir / "decomposition.json"))
    result.summary["frequencies_hz"] = {f.name: f.frequency for f in fits}
    return _finish(config, result)


def run_angle_scan(config: RunConfig) -> PipelineResult:
    """
    Shift frequency against field orientation and its cos^2 fit.

    Each laboratory angle beta_lab is simulated at beta = beta_lab - beta0 relative to
    the quadrupole axis. The fitted beta0 is the laboratory direction in which the
    field is aligned with that axis.
    """
    result = _start(config)
    trap = config.traps[0]
    rows = []
    for point, beta_lab in enumerate(config.scan_angles):
        geometry = config.geometry.rotated(beta_lab - config.beta0)
        fits = _simulate_states(
            config,
            trap,
            geometry,
            lambda index, point=point: derive_seed(config.seed, point, index),
            result.out_dir / "datasets",
            f"angle{point:02d}_",
            result,
        )
        row = {"beta_lab_deg": float(np.degrees(beta_lab))}
        row.update(_pair(fits) if len(fits) >= 2 else _single(fits[0]))
        rows.append(row)
    table = pd.DataFrame(rows)
    result.outputs.append(write_table(table, result.out_dir / "scan.csv"))

    usable = table.dropna(subset=["delta_hz", "delta_sigma_hz"])
    points = np.column_stack(
        [np.radians(usable["beta_lab_deg"]), usable["delta_hz"], usable["delta_sigma_hz"]]
    )
    try:
        angular = fit_angular(points)
    except FitError as err:
        logger.warning("Angular fit failed: %s", err)
        result.n_failed += 1
        result.outputs.append(write_json({"error": str(err)}, result.out_dir / "angular_fit.json"))
        return _finish(config, result)

    report = angular.to_dict()
    report["field_aligned_direction_deg"] = float(np.degrees(angular.beta0))
    report["true_beta0_deg"] = float(np.degrees(normalize_angle(config.beta0)))
    if angular.degenerate or not angular.converged:
        result.n_failed += 1
    result.summary["angular_fit"] = report
    result.outputs.append(write_json(report, result.out_dir / "angular_fit.json"))
    if config.emit_plot_data:
        result.outputs.append(
            write_plot_data(
                result.out_dir / "plot_angle.csv",
                usable["beta_lab_deg"],
                usable["delta_hz"],
                usable["delta_sigma_hz"],
            )
        )
        grid = np.linspace(points[:, 0].min(), points[:, 0].max(), 181)
        result.outputs.append(
            write_plot_data(
                result.out_dir / "plot_angle_fit.csv", np.degrees(grid), angular.predict(grid)
            )
        )
    return _finish(config, result)


def _single(state_fit: _StateFit) -> dict:
    return {
        "delta_hz": state_fit.frequency,
        "delta_sigma_hz": state_fit.frequency_err,
        "true_delta_hz": state_fit.true_frequency,
    }


def _gradient_analysis(table: pd.DataFrame, config: RunConfig, result: PipelineResult):
    """Linear fit of Delta, power law of Delta_B', moment and offset split."""
    usable = table.dropna(subset=["delta_hz", "delta_sigma_hz"])
    try:
        line = fit_linear_weighted(
            usable["gradient_vmm2"], usable["delta_hz"], usable["delta_sigma_hz"]
        )
    except FitError as err:
        logger.warning("Linear fit failed: %s", err)
        result.n_failed += 1
        result.outputs.append(write_json({"error": str(err)}, result.out_dir / "linear_fit.json"))
        return
    result.outputs.append(write_json(line.to_dict(), result.out_dir / "linear_fit.json"))
    result.summary["linear_fit"] = line.to_dict()

    if "delta_gradient_hz" in usable:
        dbp = usable.dropna(subset=["delta_gradient_hz", "delta_gradient_sigma_hz"])
        dbp = dbp[dbp["delta_gradient_hz"] > 0]
        if len(dbp) >= 2:
            try:
                power = fit_power_law(
                    dbp["gradient_vmm2"], dbp["delta_gradient_hz"], dbp["delta_gradient_sigma_hz"]
                )
            except FitError as err:
                logger.warning("Power-law fit failed: %s", err)
            else:
                report = {
                    "exponent": power.slope,
                    "exponent_err": power.slope_err,
                    "prefactor_hz": float(np.exp(power.intercept)),
                    "fit": power.to_dict(),
                }
                result.summary["power_law"] = report
                result.outputs.append(write_json(report, result.out_dir / "power_law.json"))
            if config.emit_plot_data:
                result.outputs.append(
                    write_plot_data(
                        result.out_dir / "plot_gradient_dbprime.csv",
                        dbp["gradient_vmm2"],
                        dbp["delta_gradient_hz"],
                        dbp["delta_gradient_sigma_hz"],
                    )
                )

    moment = extract_moment(line.slope, config.delta_beta, slope_sigma=line.slope_err)
    report = moment.to_dict()
    report["offset_hz"] = line.intercept
    report["offset_sigma_hz"] = line.intercept_err
    if config.magnetic is not None:
        second_order, stray = decompose_offset(
            line.intercept, config.magnetic.bias_field, config.magnetic.second_order_coeff
        )
        report["second_order_zeeman_hz"] = second_order
        report["stray_quadrupole_hz"] = stray
    result.summary["moment"] = report
    result.outputs.append(write_json(report, result.out_dir / "moment.json"))
    if config.emit_plot_data:
        result.outputs.append(
            write_plot_data(
                result.out_dir / "plot_gradient_delta.csv",
                usable["gradient_vmm2"],
                usable["delta_hz"],
                usable["delta_sigma_hz"],
            )
        )


def run_gradient_scan(config: RunConfig) -> PipelineResult:
    """
    Frequency against applied gradient, the slope fit and the moment extraction.

    Every trap setting gets a full parity simulation and fit of each state. The scan
    table ``scan.csv`` lists |dE_z/dz| of the tip in V/mm^2, the ion spacing and the
    fitted and true Delta and Delta_B'.
    """
    result = _start(config)
    rows = []
    for point, trap in enumerate(config.traps):
        fits = _simulate_states(
            config,
            trap,
            config.geometry,
            lambda index, point=point: derive_seed(config.seed, point, index),
            result.out_dir / "datasets",
            f"gradient{point:02d}_",
            result,
        )
        row = {
            "gradient_vmm2": abs(si_to_vmm2(trap.gradient)),
            "separation_um": trap.separation * 1e6,
        }
        row.update(_pair(fits) if len(fits) >= 2 else _single(fits[0]))
        rows.append(row)
    table = pd.DataFrame(rows)
    result.outputs.append(write_table(table, result.out_dir / "scan.csv"))
    _gradient_analysis(table, config, result)
    return _finish(config, result)


def run_extract(config: RunConfig) -> PipelineResult:
    """Moment from a supplied slope, plus the offset split if ``extract.delta0`` is set."""
    result = _start(config)
    moment = extract_moment(config.slope, config.delta_beta, slope_sigma=config.slope_sigma)
    report = moment.to_dict()
    if config.delta0 is not None and config.magnetic is not None:
        second_order, stray = decompose_offset(
            config.delta0, config.magnetic.bias_field, config.magnetic.second_order_coeff
        )
        report.update(
            offset_hz=config.delta0,
            second_order_zeeman_hz=second_order,
            stray_quadrupole_hz=stray,
        )
    result.summary["moment"] = report
    result.outputs.append(write_json(report, result.out_dir / "moment.json"))
    return _finish(config, result)


def run_fit_only(config: RunConfig) -> PipelineResult:
    """
    Fit externally supplied parity datasets; never runs the simulator.

    Datasets sharing a gradient are paired in file order (first two) and decomposed.
    With pairs at two or more gradients the line, the Delta_B' power law and the moment
    are derived as in a gradient scan.

    :raises ConfigError: a dataset file is missing or unreadable; nothing is written
    """
    loaded = []
    for entry in config.datasets:
        if not entry.path.is_file():
            raise ConfigError(f"Dataset {entry.path} does not exist.")
        try:
            loaded.append(read_dataset(entry.path))
        except (OSError, ValueError) as err:
            raise ConfigError(f"Cannot read dataset {entry.path}: {err}") from err

    result = _start(config)
    groups: dict = {}
    for index, (entry, dataset) in enumerate(zip(config.datasets, loaded)):
        state_fit = _fit_dataset(dataset, entry.state, entry.phi0, config)
        stem = f"{index:02d}_{entry.state}"
        result.outputs.append(
            write_json(state_fit.report(config.fit), result.out_dir / f"fit_{stem}.json")
        )
        if state_fit.failed:
            result.n_failed += 1
        groups.setdefault(entry.gradient, []).append(state_fit)

    rows = []
    for gradient, fits in groups.items():
        row = {"gradient_vmm2": float("nan") if gradient is None else abs(si_to_vmm2(gradient))}
        row.update(_pair(fits) if len(fits) >= 2 else _single(fits[0]))
        rows.append(row)
    table = pd.DataFrame(rows).sort_values("gradient_vmm2", kind="mergesort")
    result.outputs.append(write_table(table, result.out_dir / "scan.csv"))
    with_gradient = table.dropna(subset=["gradient_vmm2"])
    if with_gradient["gradient_vmm2"].nunique() >= 2:
        _gradient_analysis(with_gradient, config, result)
    return _finish(config, result)


RUNNERS = {
    "parity-scan": run_parity_scan,
    "angle-scan": run_angle_scan,
    "gradient-scan": run_gradient_scan,
    "extract": run_extract,
    "fit-only": run_fit_only,
}


def run(config: RunConfig) -> PipelineResult:
    """Dispatch on ``config.mode``."""
    return RUNNERS[config.mode](config)


def predicted_frequency(config: RunConfig, spec, trap=None, geometry=None) -> float:
    """Noise-free frequency (Hz, signed) of a state for the configured environment."""
    budget = phase_rate(
        spec,
        trap or config.traps[0],
        config.magnetic,
        geometry or config.geometry,
        config.theta,
    )
    return angular_to_hz(budget.total)
