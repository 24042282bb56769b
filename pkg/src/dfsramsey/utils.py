import numpy as np
import pandas as pd


def normalize_angle(beta, period: float = np.pi):
    """
    Map angle(s) into [0, period).

    :param beta: angle or array of angles in rad
    :param float period: period of the quantity, pi for cos^2 dependences
    :return: same shape as ``beta``
    """
    value = np.mod(beta, period)
    return float(value) if np.ndim(value) == 0 else value


def replicate_pulls(estimates, errors, truth) -> pd.DataFrame:
    """
    Pull statistics (estimate - truth) / error of a replicate study.

    :param estimates: fitted values, one per replicate
    :param errors: their 1-sigma errors
    :param float truth: injected value
    :return: one-row pandas DataFrame with columns n, mean, std, coverage (fraction
        of pulls within +-1)

    Example::

        stats = replicate_pulls(freqs, freq_errs, 33.35)
        stats.loc[0, "std"]
    """
    estimates = np.asarray(estimates, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if estimates.shape != errors.shape:
        raise ValueError("estimates and errors must have the same length.")
    if np.any(errors <= 0):
        raise ValueError("Errors must be > 0.")
    pulls = (estimates - truth) / errors
    return pd.DataFrame(
        {
            "n": [pulls.size],
            "mean": [pulls.mean()],
            "std": [pulls.std(ddof=1)],
            "coverage": [np.mean(np.abs(pulls) <= 1)],
        }
    )

