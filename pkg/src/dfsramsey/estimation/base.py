"""Shared pieces of the fitting routines: errors, weights and covariance."""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


class FitError(ValueError):
    """A fit could not be set up."""


class InsufficientDataError(FitError):
    """Too few points, too small a span, or degenerate abscissae."""


def floor_sigma(sigma) -> np.ndarray:
    """
    Replace non-positive uncertainties by the smallest positive one in the set.

    Parity estimates of exactly +-1 come with sigma = 0 from finite-shot saturation
    and would otherwise get infinite weight. If no sigma is positive, unit weights
    are returned.
    """
    sigma = np.asarray(sigma, dtype=float)
    positive = sigma[np.isfinite(sigma) & (sigma > 0)]
    if positive.size == 0:
        logger.warning("No positive uncertainties, fitting with unit weights.")
        return np.ones_like(sigma)
    bad = ~(np.isfinite(sigma) & (sigma > 0))
    if bad.any():
        logger.debug("Flooring %d uncertainties to %.3g", bad.sum(), positive.min())
    return np.where(bad, positive.min(), sigma)


def covariance_from_jacobian(jac: np.ndarray) -> np.ndarray:
    """(J^T J)^-1 of a weighted Jacobian, symmetrised; pseudo-inverse if singular."""
    jtj = jac.T @ jac
    cov = np.linalg.pinv(jtj, hermitian=True)
    return (cov + cov.T) / 2


def wrap_phase(phi: float) -> float:
    """Map an angle into (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - phi, 2 * np.pi))
