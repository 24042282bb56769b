"""Weighted straight-line fits with absolute (known) uncertainties."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import statsmodels.api as sm

from .base import InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass
class LinearFit:
    """
    y = slope * x + intercept.

    ``covariance`` is ordered (slope, intercept) and uses the supplied sigmas as
    absolute errors, i.e. it is not rescaled by the reduced chi^2.
    """

    slope: float
    intercept: float
    covariance: np.ndarray
    chi2: float
    dof: int

    @property
    def slope_err(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))

    @property
    def intercept_err(self) -> float:
        return float(np.sqrt(self.covariance[1, 1]))

    @property
    def errors(self) -> dict:
        return {"slope": self.slope_err, "intercept": self.intercept_err}

    def predict(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept

    def to_dict(self) -> dict:
        return {
            "parameters": {"slope": float(self.slope), "intercept": float(self.intercept)},
            "errors": self.errors,
            "covariance": np.asarray(self.covariance, dtype=float).tolist(),
            "chi2": float(self.chi2),
            "dof": int(self.dof),
        }


def _as_columns(points, y=None, sigma=None):
    if y is None:
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("Points must be a sequence of (x, y, sigma) triples.")
        return arr[:, 0], arr[:, 1], arr[:, 2]
    return (
        np.asarray(points, dtype=float),
        np.asarray(y, dtype=float),
        np.asarray(sigma, dtype=float),
    )


def fit_linear_weighted(points, y=None, sigma=None) -> LinearFit:
    """
    Weighted least-squares line through points with known errors.

    Uses statsmodels ``WLS`` with weights 1/sigma^2 and a fixed unit scale, so the
    covariance is the exact (X^T W X)^-1.

    :param points: sequence of (x, y, sigma) triples, or the x values if ``y`` and
        ``sigma`` are given separately
    :return: LinearFit
    :raises InsufficientDataError: fewer than two distinct abscissae
    :raises ValueError: non-positive or non-finite sigma

    Example::

        fit = fit_linear_weighted([(10, 27.35, 0.05), (20, 57.1, 0.05), (30, 86.85, 0.05)])
        fit.slope  # 2.975
    """
    x, yv, s = _as_columns(points, y, sigma)
    if not (x.shape == yv.shape == s.shape):
        raise ValueError("x, y and sigma must have the same length.")
    if np.unique(x).size < 2:
        raise InsufficientDataError("A line needs at least two distinct abscissae.")
    if not np.all(np.isfinite(s) & (s > 0)):
        raise ValueError("All sigmas must be finite and > 0.")

    design = sm.add_constant(x, has_constant="add")
    result = sm.WLS(yv, design, weights=1.0 / s**2).fit(cov_type="fixed scale")
    intercept, slope = result.params
    cov = np.asarray(result.cov_params())[::-1, ::-1]
    resid = (yv - (slope * x + intercept)) / s
    fit = LinearFit(
        slope=float(slope),
        intercept=float(intercept),
        covariance=(cov + cov.T) / 2,
        chi2=float(np.sum(resid**2)),
        dof=int(x.size - 2),
    )
    logger.debug(
        "Linear fit: slope %.6g +- %.2g, intercept %.6g +- %.2g, chi2/dof %.3g/%d",
        fit.slope,
        fit.slope_err,
        fit.intercept,
        fit.intercept_err,
        fit.chi2,
        fit.dof,
    )
    return fit


def fit_power_law(x, y, sigma) -> LinearFit:
    """
    Fit y = A x^k on log-log axes.

    Errors propagate as sigma_log = sigma / y. The returned LinearFit has
    ``slope = k`` and ``intercept = ln A``.

    :raises ValueError: for non-positive x or y
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("Power-law fits need strictly positive x and y.")
    return fit_linear_weighted(np.log(x), np.log(y), sigma / y)
