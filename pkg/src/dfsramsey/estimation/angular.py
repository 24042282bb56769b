"""Fit of shift frequency against magnetic-field orientation.

Model: Delta(beta) = Delta_a + Delta_b cos^2(beta - beta0). The pair (Delta_b, beta0)
is only defined up to (-Delta_b, beta0 + pi/2); results are normalised to
Delta_b >= 0 so that beta0 is the direction of the largest frequency, and to
beta0 in [0, pi).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .base import InsufficientDataError, covariance_from_jacobian

logger = logging.getLogger(__name__)

MIN_POINTS = 4
MIN_SPAN = np.pi / 2


@dataclass
class AngularFit:
    delta_a: float
    delta_b: float
    beta0: float
    covariance: np.ndarray
    chi2: float
    dof: int
    degenerate: bool = False
    converged: bool = True

    @property
    def errors(self) -> dict:
        sigma = np.sqrt(np.clip(np.diag(self.covariance), 0, None))
        return dict(zip(("delta_a", "delta_b", "beta0"), (float(s) for s in sigma)))

    def predict(self, beta):
        beta = np.asarray(beta, dtype=float)
        return angular_model(beta, (self.delta_a, self.delta_b, self.beta0))

    def to_dict(self) -> dict:
        return {
            "parameters": {
                "delta_a": float(self.delta_a),
                "delta_b": float(self.delta_b),
                "beta0": float(self.beta0),
                "beta0_deg": float(np.degrees(self.beta0)),
            },
            "errors": self.errors,
            "covariance": np.asarray(self.covariance, dtype=float).tolist(),
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "degenerate": bool(self.degenerate),
            "converged": bool(self.converged),
        }


def angular_model(beta, params):
    delta_a, delta_b, beta0 = params
    return delta_a + delta_b * np.cos(beta - beta0) ** 2


def _jacobian(beta, params):
    _, delta_b, beta0 = params
    u = beta - beta0
    return np.column_stack(
        [np.ones_like(beta), np.cos(u) ** 2, delta_b * np.sin(2 * u)]
    )


def _normalise(delta_a, delta_b, beta0):
    if delta_b < 0:
        delta_a, delta_b, beta0 = delta_a + delta_b, -delta_b, beta0 + np.pi / 2
    return delta_a, delta_b, float(np.mod(beta0, np.pi))


def _grid_start(beta, f, w, step):
    """Best (Delta_a, Delta_b, beta0) over a grid of beta0 with the amplitudes solved linearly."""
    sw = np.sqrt(w)
    best = None
    for beta0 in np.arange(0.0, np.pi, step):
        design = np.column_stack([np.ones_like(beta), np.cos(beta - beta0) ** 2])
        coef, *_ = np.linalg.lstsq(design * sw[:, None], f * sw, rcond=None)
        chi2 = np.sum(w * (design @ coef - f) ** 2)
        if best is None or chi2 < best[0]:
            best = (chi2, coef[0], coef[1], beta0)
    return _normalise(*best[1:])


def fit_angular(points, grid_step: float = np.radians(1.0)) -> AngularFit:
    """
    Fit Delta_a + Delta_b cos^2(beta - beta0) to (beta, f, sigma) measurements.

    beta0 is started from a grid scan over [0, pi) (1 degree steps by default) and
    refined by nonlinear least squares with an analytic Jacobian.

    :param points: sequence of (beta in rad, frequency in Hz, sigma in Hz)
    :param float grid_step: beta0 grid step in rad
    :return: AngularFit with Delta_b >= 0 and beta0 in [0, pi); ``degenerate`` is set
        when Delta_b is compatible with zero
    :raises InsufficientDataError: fewer than 4 points or an angle span below 90 degrees
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("Points must be a sequence of (beta, f, sigma) triples.")
    beta, f, sigma = arr.T
    if beta.size < MIN_POINTS:
        raise InsufficientDataError(
            f"Angular fit needs at least {MIN_POINTS} points, got {beta.size}."
        )
    if np.ptp(beta) < MIN_SPAN - 1e-12:
        raise InsufficientDataError(
            f"Angles span {np.degrees(np.ptp(beta)):.1f} deg, need at least 90 deg."
        )
    if not np.all(np.isfinite(sigma) & (sigma > 0)):
        raise ValueError("All sigmas must be finite and > 0.")

    w = 1.0 / sigma**2
    x0 = np.array(_grid_start(beta, f, w, grid_step))
    res = least_squares(
        lambda p: (angular_model(beta, p) - f) / sigma,
        x0,
        jac=lambda p: _jacobian(beta, p) / sigma[:, None],
        method="trf",
        ftol=1e-12,
        xtol=1e-12,
        max_nfev=200,
    )
    delta_a, delta_b, beta0 = _normalise(*res.x)
    params = np.array([delta_a, delta_b, beta0])
    cov = covariance_from_jacobian(_jacobian(beta, params) / sigma[:, None])
    fit = AngularFit(
        delta_a=float(delta_a),
        delta_b=float(delta_b),
        beta0=beta0,
        covariance=cov,
        chi2=float(2 * res.cost),
        dof=int(beta.size - 3),
        converged=bool(res.status > 0),
    )
    if delta_b <= 2 * fit.errors["delta_b"]:
        fit.degenerate = True
        logger.warning(
            "Angular amplitude %.3g Hz is compatible with zero, beta0 is undefined.", delta_b
        )
    return fit
