"""Exponentially damped sinusoid fits of parity oscillations.

The model is

    p(tau) = C exp(-tau / tau_d) cos(2 pi f tau + phi0) + b

fitted by weighted trust-region least squares (``scipy.optimize.least_squares``,
method ``trf``) with an analytic Jacobian. Robustness comes from the starting point:
the frequency is taken from a Lomb-Scargle periodogram, which copes with the
nonuniform schedules used in the experiment, and the optimiser is restarted from the
strongest few periodogram peaks.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, lombscargle

from .base import InsufficientDataError, covariance_from_jacobian, floor_sigma, wrap_phase

logger = logging.getLogger(__name__)

PARAM_NAMES = ("contrast", "frequency", "phase", "damping_time", "baseline")


@dataclass(frozen=True)
class FitConfig:
    """
    Settings of :func:`fit_damped_sinusoid`.

    :param f_min: lowest frequency of the periodogram grid (Hz), defaults to the grid step
    :param f_max: highest frequency (Hz), defaults to the Nyquist frequency of the densest
        sampling interval
    :param int oversampling: grid step is 1 / (oversampling * span), at least 4
    :param int n_starts: number of periodogram peaks the optimiser is started from
    :param int max_iter: maximum number of function evaluations
    """

    f_min: float | None = None
    f_max: float | None = None
    oversampling: int = 10
    n_starts: int = 3
    max_iter: int = 200
    ftol: float = 1e-10
    xtol: float = 1e-12
    contrast_bounds: tuple[float, float] = (0.0, 1.2)
    damping_bounds: tuple[float, float] = (0.01, 100.0)
    min_points: int = 6

    def __post_init__(self):
        if self.oversampling < 4:
            raise ValueError(f"oversampling must be >= 4, got {self.oversampling}.")
        if self.n_starts < 1 or self.max_iter < 1:
            raise ValueError("n_starts and max_iter must be >= 1.")
        if self.min_points < 6:
            raise ValueError("A five-parameter fit needs at least 6 points.")
        if self.f_min is not None and self.f_max is not None and self.f_min >= self.f_max:
            raise ValueError(f"f_min={self.f_min} must be below f_max={self.f_max}.")
        lo, hi = self.damping_bounds
        if not 0 < lo < hi:
            raise ValueError(f"Invalid damping_bounds {self.damping_bounds}.")
        object.__setattr__(self, "contrast_bounds", tuple(self.contrast_bounds))
        object.__setattr__(self, "damping_bounds", tuple(self.damping_bounds))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class DampedSinusoidFit:
    """Best-fit parameters, covariance and fit diagnostics."""

    contrast: float
    frequency: float
    phase: float
    damping_time: float
    baseline: float
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool = True
    degenerate: bool = False
    n_iter: int = 0
    message: str = ""
    n_points: int = field(default=0)

    @property
    def params(self) -> np.ndarray:
        return np.array(
            [self.contrast, self.frequency, self.phase, self.damping_time, self.baseline]
        )

    @property
    def errors(self) -> dict:
        sigma = np.sqrt(np.clip(np.diag(self.covariance), 0, None))
        return dict(zip(PARAM_NAMES, (float(s) for s in sigma)))

    @property
    def frequency_err(self) -> float:
        return self.errors["frequency"]

    @property
    def angular_frequency(self) -> float:
        return 2 * np.pi * self.frequency

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else float("nan")

    def signed_frequency(self, phi0: float) -> float:
        """
        Frequency with the sign of the phase evolution, given the prepared phase phi0.

        A negative rate turns cos(lambda tau + phi0) into cos(|lambda| tau - phi0), so the
        fitted phase lands near -phi0. For phi0 = 0 or pi the sign is not observable and
        the frequency is returned as positive.
        """
        if abs(np.sin(phi0)) < 1e-9:
            return self.frequency
        plus = abs(wrap_phase(self.phase - phi0))
        minus = abs(wrap_phase(self.phase + phi0))
        return self.frequency if plus <= minus else -self.frequency

    def model(self, tau) -> np.ndarray:
        """Fitted curve at the given wait times."""
        return damped_sinusoid(np.asarray(tau, dtype=float), self.params)

    def to_dict(self) -> dict:
        return {
            "parameters": dict(zip(PARAM_NAMES, (float(p) for p in self.params))),
            "errors": self.errors,
            "covariance": np.asarray(self.covariance, dtype=float).tolist(),
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "reduced_chi2": float(self.reduced_chi2),
            "converged": bool(self.converged),
            "degenerate": bool(self.degenerate),
            "n_iter": int(self.n_iter),
            "n_points": int(self.n_points),
            "message": self.message,
        }


def damped_sinusoid(tau: np.ndarray, params) -> np.ndarray:
    """C exp(-tau / tau_d) cos(2 pi f tau + phi0) + b for params (C, f, phi0, tau_d, b)."""
    c, f, phi, tau_d, b = params
    return c * np.exp(-tau / tau_d) * np.cos(2 * np.pi * f * tau + phi) + b


def damped_sinusoid_jacobian(tau: np.ndarray, params) -> np.ndarray:
    """Partial derivatives of :func:`damped_sinusoid`, one row per wait time."""
    c, f, phi, tau_d, _ = params
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    decay = np.exp(-tau / tau_d)
    arg = 2 * np.pi * f * tau + phi
    cos, sin = np.cos(arg), np.sin(arg)
    jac = np.empty((tau.size, 5))
    jac[:, 0] = decay * cos
    jac[:, 1] = -c * decay * sin * 2 * np.pi * tau
    jac[:, 2] = -c * decay * sin
    jac[:, 3] = c * decay * cos * tau / tau_d**2
    jac[:, 4] = 1.0
    return jac


def frequency_grid(tau: np.ndarray, config: FitConfig) -> np.ndarray:
    """Periodogram frequencies (Hz): step 1 / (oversampling * span) up to Nyquist."""
    span = tau.max() - tau.min()
    step = 1.0 / (config.oversampling * span)
    f_max = config.f_max
    if f_max is None:
        gaps = np.diff(np.unique(tau))
        f_max = 1.0 / (2 * gaps.min())
    f_min = config.f_min if config.f_min is not None else step
    if f_min <= 0:
        f_min = step
    if f_max <= f_min:
        raise InsufficientDataError(f"Empty frequency range [{f_min}, {f_max}] Hz.")
    return np.arange(f_min, f_max + step / 2, step)


def periodogram_candidates(
    tau: np.ndarray, y: np.ndarray, config: FitConfig
) -> tuple[np.ndarray, np.ndarray]:
    """
    Lomb-Scargle periodogram of the centred data and its strongest peaks.

    :return: (candidate frequencies in Hz ordered by decreasing power, full power array)
    """
    freqs = frequency_grid(tau, config)
    power = lombscargle(tau, y - y.mean(), 2 * np.pi * freqs)
    peaks, _ = find_peaks(power)
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(power))])
    order = peaks[np.argsort(power[peaks])[::-1]]
    return freqs[order[: config.n_starts]], power


def _envelope_decay(tau, y, baseline, frequency, config: FitConfig) -> float:
    """Decay time from a straight-line fit of the log amplitude per time bin."""
    span = tau.max() - tau.min()
    n_bins = int(np.clip(span * frequency, 2, 8))
    edges = np.linspace(tau.min(), tau.max(), n_bins + 1)
    centres, amps = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (tau >= lo) & (tau <= hi)
        if mask.sum() < 2:
            continue
        amp = np.sqrt(2) * np.sqrt(np.mean((y[mask] - baseline) ** 2))
        if amp > 0:
            centres.append(tau[mask].mean())
            amps.append(amp)
    lo, hi = config.damping_bounds
    if len(amps) < 2:
        return float(np.clip(10 * span, lo, hi))
    slope, _ = np.polyfit(centres, np.log(amps), 1)
    if slope >= 0:
        return float(np.clip(10 * span, lo, hi))
    return float(np.clip(-1.0 / slope, lo, hi))


def _linear_phase(tau, y, w, baseline, frequency, damping_time) -> tuple[float, float]:
    """Contrast and phase at fixed frequency and decay from a 2-parameter linear fit."""
    decay = np.exp(-tau / damping_time)
    arg = 2 * np.pi * frequency * tau
    design = np.column_stack([decay * np.cos(arg), -decay * np.sin(arg)])
    sw = np.sqrt(w)
    (a, s), *_ = np.linalg.lstsq(design * sw[:, None], (y - baseline) * sw, rcond=None)
    return float(np.hypot(a, s)), float(np.arctan2(s, a))


def initial_guess(tau, y, w, frequency, config: FitConfig) -> np.ndarray:
    """Starting point (C, f, phi0, tau_d, b) for one candidate frequency."""
    q25, q75 = np.percentile(y, [25, 75])
    baseline = (q25 + q75) / 2
    damping_time = _envelope_decay(tau, y, baseline, frequency, config)
    contrast, phase = _linear_phase(tau, y, w, baseline, frequency, damping_time)
    if contrast == 0:
        contrast = (q75 - q25) * np.sqrt(2)
    c_lo, c_hi = config.contrast_bounds
    contrast = float(np.clip(contrast, c_lo, c_hi))
    return np.array([contrast, frequency, phase, damping_time, baseline])


def _degenerate_result(n: int, message: str) -> DampedSinusoidFit:
    logger.warning("Damped sinusoid fit is degenerate: %s", message)
    return DampedSinusoidFit(
        contrast=0.0,
        frequency=0.0,
        phase=0.0,
        damping_time=float("nan"),
        baseline=float("nan"),
        covariance=np.full((5, 5), np.nan),
        chi2=float("nan"),
        dof=n - 5,
        converged=False,
        degenerate=True,
        n_iter=0,
        message=message,
        n_points=n,
    )


def fit_damped_sinusoid(data, config: FitConfig | None = None) -> DampedSinusoidFit:
    """
    Fit C exp(-tau / tau_d) cos(2 pi f tau + phi0) + b to a parity dataset.

    Points are weighted by 1 / sigma^2; zero sigmas are floored to the smallest positive
    one. The optimiser is started from each of the ``config.n_starts`` strongest
    periodogram peaks and the lowest-cost solution is kept. A run that hits
    ``max_iter`` keeps its best iterate with ``converged=False``; a contrast compatible
    with zero sets ``degenerate=True``.

    :param data: ParityDataset or DataFrame with columns tau_s, parity, sigma
    :param config: FitConfig, defaults to ``FitConfig()``
    :return: DampedSinusoidFit, f >= 0 and phase in (-pi, pi]
    :raises InsufficientDataError: fewer than ``min_points`` points or less than one
        oscillation period covered

    Example::

        fit = fit_damped_sinusoid(dataset)
        fit.frequency, fit.errors["frequency"]
    """
    config = config or FitConfig()
    table = getattr(data, "data", data)
    order = np.argsort(table["tau_s"].to_numpy(dtype=float), kind="mergesort")
    tau = table["tau_s"].to_numpy(dtype=float)[order]
    y = table["parity"].to_numpy(dtype=float)[order]
    sigma = floor_sigma(table["sigma"].to_numpy(dtype=float)[order])
    n = tau.size

    if n < config.min_points:
        raise InsufficientDataError(
            f"Need at least {config.min_points} points for a damped sinusoid, got {n}."
        )
    span = tau.max() - tau.min()
    if not span > 0:
        raise InsufficientDataError("All wait times are identical.")
    if np.ptp(y) == 0:
        return _degenerate_result(n, "constant data, frequency undefined")

    w = 1.0 / sigma**2
    candidates, _ = periodogram_candidates(tau, y, config)
    lower = [config.contrast_bounds[0], 0.0, -np.inf, config.damping_bounds[0], -np.inf]
    upper = [config.contrast_bounds[1], np.inf, np.inf, config.damping_bounds[1], np.inf]

    def residuals(p):
        return (damped_sinusoid(tau, p) - y) / sigma

    def jacobian(p):
        return damped_sinusoid_jacobian(tau, p) / sigma[:, None]

    best = None
    for f0 in candidates:
        x0 = initial_guess(tau, y, w, f0, config)
        x0 = np.clip(x0, lower, upper)
        res = least_squares(
            residuals,
            x0,
            jac=jacobian,
            bounds=(lower, upper),
            method="trf",
            x_scale="jac",
            ftol=config.ftol,
            xtol=config.xtol,
            gtol=None,
            max_nfev=config.max_iter,
        )
        logger.debug(
            "Start at f=%.4f Hz -> f=%.6f Hz, cost %.6g, status %d",
            f0,
            res.x[1],
            res.cost,
            res.status,
        )
        if best is None or res.cost < best.cost:
            best = res

    cov = covariance_from_jacobian(best.jac)
    contrast, frequency, phase, damping_time, baseline = best.x
    fit = DampedSinusoidFit(
        contrast=float(contrast),
        frequency=float(frequency),
        phase=wrap_phase(phase),
        damping_time=float(damping_time),
        baseline=float(baseline),
        covariance=cov,
        chi2=float(2 * best.cost),
        dof=n - 5,
        converged=bool(best.status > 0),
        n_iter=int(best.nfev),
        message=str(best.message),
        n_points=n,
    )
    contrast_err = fit.errors["contrast"]
    if fit.contrast == 0 or fit.contrast < 2 * contrast_err:
        fit.degenerate = True
        logger.warning(
            "Fitted contrast %.3g is compatible with zero (error %.3g), frequency "
            "is not meaningful.",
            fit.contrast,
            contrast_err,
        )
        return fit
    if fit.frequency * span < 1:
        raise InsufficientDataError(
            f"Data span {span:.4g} s covers less than one period of {fit.frequency:.4g} Hz."
        )
    if not fit.converged:
        logger.warning("Damped sinusoid fit did not converge: %s", fit.message)
    return fit
