"""Likelihood families.

Coefficients are stored as an array of shape (n_blocks, p). The linear and
logistic families have one block. The multinomial family has one block per
non-reference category (the reference category is the last one and has its
coefficients fixed at zero).
"""

import numpy as np
from scipy.special import expit, log_softmax, logsumexp, softmax

from fusionlasso.array_ops import get_one_hot
from fusionlasso.inference import samplers


class Family:
    """Base class for likelihood families."""

    name = None
    has_scale = False

    def validate(self, y):
        raise NotImplementedError

    def n_blocks(self, y):
        return 1

    def linear_predictor(self, X, beta):
        """Linear predictor with shape (N, n_blocks)."""
        return X @ np.atleast_2d(beta).T

    def log_likelihood(self, eta, y, sigma2=None):
        """Pointwise log-likelihood. Shape is (N,)."""
        raise NotImplementedError

    def mean(self, eta):
        raise NotImplementedError

    def working(self, X, y, beta, block):
        """Weights and response of the EM working system for one block.

        Returns
        -------
        W : np.ndarray
            Observation weights. Shape is (N,).
        z : np.ndarray
            Working response, the M-step solves
            :code:`(X^T W X + P) beta = X^T z`. Shape is (N,).
        """
        raise NotImplementedError


class Linear(Family):
    """Gaussian outcome with identity link."""

    name = "linear"
    has_scale = True

    def validate(self, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite for the linear family.")
        return y

    def log_likelihood(self, eta, y, sigma2=None):
        if sigma2 is None:
            raise ValueError("sigma2 must be passed for the linear family.")
        eta = np.asarray(eta).reshape(-1)
        return -0.5 * (np.log(2 * np.pi * sigma2) + (y - eta) ** 2 / sigma2)

    def mean(self, eta):
        return np.asarray(eta).reshape(-1)

    def working(self, X, y, beta, block):
        return np.ones(len(y)), y


class Logistic(Family):
    """Binary outcome with logit link."""

    name = "logistic"

    def validate(self, y):
        y = np.asarray(y).reshape(-1)
        if not np.all(np.isin(y, [0, 1])):
            raise ValueError("y must only contain 0 and 1 for the logistic family.")
        return y.astype(int)

    def log_likelihood(self, eta, y, sigma2=None):
        eta = np.asarray(eta).reshape(-1)
        return y * eta - np.logaddexp(0, eta)

    def mean(self, eta):
        return expit(np.asarray(eta).reshape(-1))

    def working(self, X, y, beta, block):
        eta = X @ beta[0]
        return samplers.polya_gamma_mean(eta), y - 0.5


class Multinomial(Family):
    """Categorical outcome with softmax link (reference category last)."""

    name = "multinomial"

    def validate(self, y):
        y = np.asarray(y).reshape(-1)
        if not np.all(np.mod(y, 1) == 0) or y.min() < 0:
            raise ValueError("y must hold category codes 0, ..., C-1.")
        y = y.astype(int)
        if y.max() < 1:
            raise ValueError("the multinomial family needs at least two categories.")
        return y

    def n_blocks(self, y, n_categories=None):
        n_categories = n_categories or int(np.max(y)) + 1
        return n_categories - 1

    @staticmethod
    def full_predictor(eta):
        """Append the zero reference column."""
        eta = np.asarray(eta, dtype=float)
        if eta.ndim == 1:
            eta = eta[:, None]
        return np.column_stack([eta, np.zeros(eta.shape[0])])

    def log_likelihood(self, eta, y, sigma2=None):
        full = self.full_predictor(eta)
        return log_softmax(full, axis=1)[np.arange(len(y)), y]

    def mean(self, eta):
        return softmax(self.full_predictor(eta), axis=1)

    @staticmethod
    def offsets(eta, block):
        """log sum_{l != c} exp(eta_l), including the reference category."""
        full = Multinomial.full_predictor(eta)
        others = np.delete(full, block, axis=1)
        return logsumexp(others, axis=1)

    def working(self, X, y, beta, block):
        eta = X @ beta.T
        offset = self.offsets(eta, block)
        W = samplers.polya_gamma_mean(eta[:, block] - offset)
        kappa = (y == block) - 0.5
        return W, kappa + W * offset

    def one_hot(self, y, n_categories=None):
        return get_one_hot(y, n_categories)


FAMILIES = {"linear": Linear, "logistic": Logistic, "multinomial": Multinomial}


def get_family(family):
    """Get a family object.

    Parameters
    ----------
    family : str or Family
        Family name: :code:`'linear'`, :code:`'logistic'` or
        :code:`'multinomial'`.

    Returns
    -------
    family : Family
        Family object.
    """
    if isinstance(family, Family):
        return family
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {list(FAMILIES)}, got {family}.")
    return FAMILIES[family]()
