"""Metrics for evaluating fits and posterior draws.

"""

import numpy as np
from scipy.special import log_softmax
from sklearn.metrics import mean_squared_error

from fusionlasso.array_ops import get_one_hot


def rmse(truth, estimate):
    """Root mean squared error.

    Parameters
    ----------
    truth : np.ndarray
        True values. Shape must be (n_samples,).
    estimate : np.ndarray
        Estimated values. Shape must be (n_samples,).

    Returns
    -------
    rmse : float
        Root mean squared error.
    """
    truth = np.asarray(truth, dtype=float).reshape(-1)
    estimate = np.asarray(estimate, dtype=float).reshape(-1)
    if truth.shape != estimate.shape:
        raise ValueError(
            "truth and estimate shapes are incompatible. "
            + f"truth.shape={truth.shape}, estimate.shape={estimate.shape}."
        )
    return float(np.sqrt(mean_squared_error(truth, estimate)))


def probability_rmse(y, mean, family):
    """Prediction RMSE on the probability (mean response) scale.

    For the multinomial family the squared error of an observation is the
    squared norm of its one-hot residual.

    Parameters
    ----------
    y : np.ndarray
        Outcome encoded for the family. Shape is (N,).
    mean : np.ndarray
        Predicted mean. Shape is (N,), or (N, C) for the multinomial family.
    family : str
        Likelihood family.

    Returns
    -------
    rmse : float
        Root mean squared error.
    """
    if family == "multinomial":
        mean = np.asarray(mean, dtype=float)
        one_hot = get_one_hot(y, mean.shape[1])
        mse = mean_squared_error(one_hot, mean, multioutput="raw_values")
        return float(np.sqrt(np.sum(mse)))
    return rmse(y, mean)


def pointwise_log_likelihood(X, y, beta, family, sigma2=None):
    """Log-likelihood of each observation under each posterior draw.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family. Shape is (N,).
    beta : np.ndarray
        Coefficient draws. Shape is (S, n_blocks, p).
    family : str
        Likelihood family.
    sigma2 : np.ndarray, optional
        Noise variance draws (linear family). Shape is (S,).

    Returns
    -------
    log_lik : np.ndarray
        Shape is (S, N).
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 2:
        beta = beta[:, None, :]
    eta = np.einsum("np,sbp->snb", X, beta)

    if family == "linear":
        if sigma2 is None:
            raise ValueError("sigma2 must be passed for the linear family.")
        sigma2 = np.asarray(sigma2, dtype=float)[:, None]
        y = np.asarray(y, dtype=float)[None, :]
        return -0.5 * (np.log(2 * np.pi * sigma2) + (y - eta[..., 0]) ** 2 / sigma2)

    if family == "logistic":
        y = np.asarray(y, dtype=float)[None, :]
        return y * eta[..., 0] - np.logaddexp(0, eta[..., 0])

    if family == "multinomial":
        y = np.asarray(y, dtype=int)
        full = np.concatenate([eta, np.zeros(eta.shape[:2] + (1,))], axis=-1)
        log_probs = log_softmax(full, axis=-1)
        return log_probs[:, np.arange(len(y)), y]

    raise ValueError(f"family must be linear, logistic or multinomial, got {family}.")
