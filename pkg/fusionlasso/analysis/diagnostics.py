"""MCMC convergence diagnostics.

"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from tabulate import tabulate

_logger = logging.getLogger("fusionlasso")


@dataclass
class Rhat:
    """Potential scale reduction factor.

    Parameters
    ----------
    point : float
        Point estimate.
    upper : float
        Upper limit of the 97.5% confidence interval.
    degenerate : bool
        Whether the chains were constant or identical, in which case both
        values are one.
    """

    point: float
    upper: float
    degenerate: bool = False


def _split(chains):
    n = chains.shape[1] // 2
    return np.concatenate([chains[:, :n], chains[:, -n:]])


def gelman_rubin(chains, split=True, min_draws=50):
    """Gelman-Rubin potential scale reduction factor.

    Parameters
    ----------
    chains : np.ndarray
        Draws of one parameter. Shape must be (n_chains, n_draws).
    split : bool, optional
        Should we split each chain in half and treat the halves as separate
        chains?
    min_draws : int, optional
        Minimum number of draws per chain (before splitting).

    Returns
    -------
    rhat : Rhat
        Point estimate and 97.5% upper limit (F approximation).
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim != 2 or chains.shape[0] < 2:
        raise ValueError("chains must have shape (n_chains, n_draws) with 2 or more chains.")
    if chains.shape[1] < min_draws:
        raise ValueError(f"each chain must have at least {min_draws} draws.")
    if np.all(chains == chains[0]):
        return Rhat(1.0, 1.0, True)
    if split:
        chains = _split(chains)
    m, n = chains.shape

    means = chains.mean(axis=1)
    variances = chains.var(axis=1, ddof=1)
    W = variances.mean()
    if W == 0:
        return Rhat(1.0, 1.0, True)
    B = n * means.var(ddof=1)

    V = (n - 1) / n * W + (1 + 1 / m) * B / n
    var_w = variances.var(ddof=1) / m
    var_b = 2 * B**2 / (m - 1)
    cov_wb = (n / m) * (
        np.cov(variances, means**2)[0, 1]
        - 2 * means.mean() * np.cov(variances, means)[0, 1]
    )
    var_V = (
        ((n - 1) / n) ** 2 * var_w
        + ((1 + 1 / m) / n) ** 2 * var_b
        + 2 * (m + 1) * (n - 1) / (m * n**2) * cov_wb
    )
    df_V = 2 * V**2 / var_V if var_V > 0 else np.inf
    df_adj = (df_V + 3) / (df_V + 1) if np.isfinite(df_V) else 1.0

    fixed = (n - 1) / n
    random = (1 + 1 / m) * (B / W) / n
    if var_w > 0:
        quantile = stats.f.ppf(0.975, m - 1, 2 * W**2 / var_w)
    else:
        quantile = stats.chi2.ppf(0.975, m - 1) / (m - 1)

    point = np.sqrt(df_adj * (fixed + random))
    upper = np.sqrt(df_adj * (fixed + quantile * random))
    return Rhat(max(float(point), 1.0), max(float(upper), 1.0), False)


def spectrum0(x):
    """Spectral density at frequency zero.

    Uses a Tukey-Hanning lag window truncated at 4% of the series length.

    Parameters
    ----------
    x : np.ndarray
        Time series. Shape must be (n_samples,).

    Returns
    -------
    s0 : float
        Spectral density at zero. The variance of the mean is
        :code:`s0 / n_samples`.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    M = max(1, int(np.floor(0.04 * n)))
    lags = np.arange(1, min(M, n - 1) + 1)
    autocov = np.array([np.dot(x[: n - k], x[k:]) / n for k in lags])
    window = 0.5 * (1 + np.cos(np.pi * lags / M))
    return float(np.dot(x, x) / n + 2 * np.sum(window * autocov))


def geweke(chain, first=0.1, last=0.5, min_draws=200):
    """Geweke z-score comparing the start and end of a chain.

    Parameters
    ----------
    chain : np.ndarray
        Draws of one parameter. Shape must be (n_draws,).
    first : float, optional
        Fraction of draws in the first window.
    last : float, optional
        Fraction of draws in the last window.
    min_draws : int, optional
        Minimum chain length.

    Returns
    -------
    z : float
        Difference of window means divided by its standard error.
    """
    chain = np.asarray(chain, dtype=float).reshape(-1)
    n = chain.size
    if n < min_draws:
        raise ValueError(f"chain must have at least {min_draws} draws, got {n}.")
    if not (0 < first < 1 and 0 < last < 1 and first + last <= 1):
        raise ValueError("first and last must be fractions with first + last <= 1.")
    a = chain[: int(first * n)]
    b = chain[n - int(last * n) :]
    variance = spectrum0(a) / a.size + spectrum0(b) / b.size
    if variance <= 0:
        raise ValueError("chain has zero variance.")
    return float((a.mean() - b.mean()) / np.sqrt(variance))


@dataclass
class DiagnosticsReport:
    """Convergence diagnostics of each parameter.

    Parameters
    ----------
    parameters : list of str
        Parameter names.
    rhat : np.ndarray
        Gelman-Rubin point estimates.
    rhat_upper : np.ndarray
        Upper limits of the Gelman-Rubin confidence intervals.
    geweke : np.ndarray
        Mean absolute Geweke z across chains (NaN if the chains are too
        short).
    degenerate : np.ndarray
        Whether each parameter was constant or identical across chains.
    rhat_threshold : float
        Threshold for flagging R-hat.
    z_threshold : float
        Threshold for flagging the mean absolute Geweke z.
    """

    parameters: list
    rhat: np.ndarray
    rhat_upper: np.ndarray
    geweke: np.ndarray
    degenerate: np.ndarray
    rhat_threshold: float = 1.1
    z_threshold: float = 1.96

    @property
    def rhat_flags(self):
        return self.rhat > self.rhat_threshold

    @property
    def geweke_flags(self):
        return np.nan_to_num(self.geweke) > self.z_threshold

    def frame(self):
        return pd.DataFrame(
            {
                "parameter": self.parameters,
                "rhat": self.rhat,
                "rhat_upper": self.rhat_upper,
                "geweke_mean_abs_z": self.geweke,
                "degenerate": self.degenerate,
                "flag_rhat": self.rhat_flags,
                "flag_geweke": self.geweke_flags,
            }
        )

    def flagged_frame(self):
        frame = self.frame()
        return frame[frame["flag_rhat"] | frame["flag_geweke"]].reset_index(drop=True)

    def to_dict(self):
        frame = self.frame()
        return {
            "rhat_threshold": self.rhat_threshold,
            "z_threshold": self.z_threshold,
            "n_flagged": int(len(self.flagged_frame())),
            "parameters": frame.astype(object).where(frame.notna(), None).to_dict(orient="records"),
        }


def diagnose(draws, split=True, rhat_threshold=1.1, z_threshold=1.96, parameters=None):
    """Convergence diagnostics for posterior draws.

    Parameters
    ----------
    draws : fusionlasso.models.gibbs.PosteriorDraws
        Posterior draws with two or more chains.
    split : bool, optional
        Use split chains for R-hat.
    rhat_threshold : float, optional
        R-hat above this is flagged.
    z_threshold : float, optional
        Mean absolute Geweke z above this is flagged.
    parameters : list of str, optional
        Parameters to check. Default is all.

    Returns
    -------
    report : DiagnosticsReport
        Diagnostics of each parameter.
    """
    parameters = parameters or draws.parameter_names()
    n = len(parameters)
    rhat = np.ones(n)
    rhat_upper = np.ones(n)
    z = np.full(n, np.nan)
    degenerate = np.zeros(n, dtype=bool)

    short = draws.n_draws < 200
    if short:
        _logger.warning(
            f"Chains have {draws.n_draws} draws, Geweke z needs at least 200"
        )

    for i, name in enumerate(parameters):
        chains = draws.stack(name)
        result = gelman_rubin(chains, split=split)
        rhat[i], rhat_upper[i], degenerate[i] = result.point, result.upper, result.degenerate
        if np.all(chains == chains.flat[0]):
            degenerate[i] = True
            z[i] = 0.0
        elif not short:
            scores = []
            for chain in chains:
                try:
                    scores.append(abs(geweke(chain)))
                except ValueError:
                    scores.append(0.0)
            z[i] = np.mean(scores)

    report = DiagnosticsReport(
        parameters=list(parameters),
        rhat=rhat,
        rhat_upper=rhat_upper,
        geweke=z,
        degenerate=degenerate,
        rhat_threshold=rhat_threshold,
        z_threshold=z_threshold,
    )
    flagged = report.flagged_frame()
    if len(flagged):
        _logger.warning(
            f"{len(flagged)} parameters flagged:\n"
            + tabulate(flagged, headers="keys", tablefmt="simple", showindex=False, floatfmt=".3f")
        )
    else:
        _logger.info(f"No parameters flagged out of {n}")
    return report
