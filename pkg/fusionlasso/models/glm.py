"""Unpenalised and ridge-stabilised maximum likelihood fits.

"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from fusionlasso.array_ops import solve_psd
from fusionlasso.models import families

_logger = logging.getLogger("fusionlasso")

# Margin (per record) below which the outcome is not separated
SEPARATION_TOL = 1e-7


@dataclass
class MleResult:
    """Result of a maximum likelihood fit.

    Parameters
    ----------
    beta : np.ndarray
        Coefficients. Shape is (n_blocks, p).
    log_lik : float
        Log-likelihood at :code:`beta` (without the ridge term).
    converged : bool
        Whether the Newton iterations converged.
    diverged : bool
        Whether the coefficients ran off to infinity with the likelihood
        still improving (separated data).
    iterations : int
        Number of Newton iterations.
    """

    beta: np.ndarray
    log_lik: float
    converged: bool
    diverged: bool
    iterations: int


def _ridge_matrix(ridge, p):
    if np.ndim(ridge) == 0:
        return float(ridge) * np.eye(p)
    ridge = np.asarray(ridge, dtype=float)
    if ridge.shape != (p, p):
        raise ValueError(f"ridge must be a scalar or have shape ({p}, {p}).")
    return ridge


def _objective(family, X, y, beta, ridge):
    eta = family.linear_predictor(X, beta)
    ll = float(np.sum(family.log_likelihood(eta, y)))
    return ll - 0.5 * float(np.sum((beta @ ridge) * beta)), ll


def _gradient_hessian(family, X, y, beta, ridge):
    n_blocks, p = beta.shape
    eta = family.linear_predictor(X, beta)
    if family.name == "logistic":
        mu = family.mean(eta[:, 0])
        grad = X.T @ (y - mu) - ridge @ beta[0]
        hess = (X.T * (mu * (1 - mu))) @ X + ridge
        return grad, hess

    probs = family.mean(eta)[:, :n_blocks]
    one_hot = family.one_hot(y, n_blocks + 1)[:, :n_blocks]
    grad = (X.T @ (one_hot - probs) - ridge @ beta.T).T.reshape(-1)
    hess = np.zeros((n_blocks * p, n_blocks * p))
    for a in range(n_blocks):
        for b in range(a, n_blocks):
            w = probs[:, a] * ((a == b) - probs[:, b])
            block = (X.T * w) @ X
            hess[a * p : (a + 1) * p, b * p : (b + 1) * p] = block
            hess[b * p : (b + 1) * p, a * p : (a + 1) * p] = block.T
    hess += np.kron(np.eye(n_blocks), ridge)
    return grad, hess


def _separation_rows(X, y, family, n_blocks):
    if family.name == "logistic":
        return (2 * y - 1)[:, None] * X

    # Row (e_c - e_k) x_i for each record i in category c and each other
    # category k, with e_reference = 0
    E = np.vstack([np.eye(n_blocks), np.zeros((1, n_blocks))])
    rows = []
    for k in range(n_blocks + 1):
        mask = y != k
        diff = E[y[mask]] - E[k]
        rows.append((diff[:, :, None] * X[mask][:, None, :]).reshape(mask.sum(), -1))
    return np.vstack(rows)


def separation_score(X, y, family, n_categories=None):
    """Largest margin of a direction which separates the outcome.

    A direction :code:`v` separates the data (completely or
    quasi-completely) if moving the coefficients along it never lowers the
    linear predictor of the observed category relative to any other
    category, and raises it for at least one record. The maximum likelihood
    estimate is then infinite. The score is the optimum of the linear program

    .. math::
        \\max_{\\|v\\|_\\infty \\leq 1} \\sum_i a_i^T v
        \\quad \\text{s.t.} \\quad a_i^T v \\geq 0,

    which is zero if and only if no separating direction exists.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    family : str or Family
        :code:`'logistic'` or :code:`'multinomial'`.
    n_categories : int, optional
        Number of multinomial categories.

    Returns
    -------
    score : float
        Non-negative margin. Rows are scaled so the largest entry is one.
    """
    family = families.get_family(family)
    if family.name == "linear":
        raise ValueError("separation is only defined for categorical outcomes.")
    X = np.asarray(X, dtype=float)
    y = family.validate(y)
    n_blocks = family.n_blocks(y, n_categories) if family.name == "multinomial" else 1

    A = _separation_rows(X, y, family, n_blocks)
    scale = np.abs(A).max() if A.size else 0.0
    if scale == 0:
        return 0.0
    A = A / scale
    result = linprog(
        -A.sum(axis=0),
        A_ub=-A,
        b_ub=np.zeros(A.shape[0]),
        bounds=[(-1.0, 1.0)] * A.shape[1],
        method="highs",
    )
    if result.status != 0:
        _logger.warning(f"Separation check failed: {result.message}")
        return 0.0
    return max(-float(result.fun), 0.0)


def is_separated(X, y, family, n_categories=None):
    """Whether the outcome is completely or quasi-completely separated."""
    score = separation_score(X, y, family, n_categories=n_categories)
    return score > SEPARATION_TOL * max(1, np.asarray(X).shape[0])


def fit_mle(
    X,
    y,
    family,
    ridge=0.0,
    max_iter=200,
    tol=1e-10,
    divergence_bound=1e4,
    n_categories=None,
):
    """Maximum likelihood fit with an optional ridge penalty.

    The linear family is solved in closed form. Other families use damped
    Newton iterations: steps are halved until the objective improves and
    doubled while it keeps improving. The fit converges when the Newton
    decrement falls below :code:`tol`. Without a ridge penalty the fit is
    flagged as diverged when the outcome is separated (see
    :code:`separation_score`) or the largest coefficient exceeds
    :code:`divergence_bound`. The likelihood of separated data keeps
    increasing towards zero, so these fits never count as converged.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    family : str or Family
        Likelihood family.
    ridge : float or np.ndarray, optional
        Ridge strength, or a (p, p) PSD penalty matrix R. The penalty is
        :code:`0.5 * beta^T R beta` for each block, with :code:`R = ridge * I`
        for a scalar.
    max_iter : int, optional
        Maximum number of Newton iterations.
    tol : float, optional
        Convergence tolerance on the Newton decrement.
    divergence_bound : float, optional
        Coefficient size declared as divergence.
    n_categories : int, optional
        Number of multinomial categories.

    Returns
    -------
    result : MleResult
        Fit result.
    """
    family = families.get_family(family)
    X = np.asarray(X, dtype=float)
    y = family.validate(y)
    n, p = X.shape
    ridge = _ridge_matrix(ridge, p)
    if family.name == "multinomial":
        n_blocks = family.n_blocks(y, n_categories)
    else:
        n_blocks = 1

    if family.name == "linear":
        beta, _ = solve_psd(X.T @ X + ridge, X.T @ y)
        beta = beta.reshape(1, p)
        rss = float(np.sum((y - X @ beta[0]) ** 2))
        sigma2 = max(rss / n, np.finfo(float).tiny)
        log_lik = -0.5 * n * (np.log(2 * np.pi * sigma2) + 1)
        return MleResult(beta, log_lik, True, False, 1)

    separated = not np.any(ridge) and is_separated(X, y, family, n_categories=n_categories)

    beta = np.zeros((n_blocks, p))
    objective, log_lik = _objective(family, X, y, beta, ridge)
    converged = False
    diverged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        grad, hess = _gradient_hessian(family, X, y, beta, ridge)
        step, _ = solve_psd(hess, grad)
        decrement = float(grad @ step)
        if decrement < tol:
            converged = True
            break
        step = step.reshape(n_blocks, p)

        # Backtrack until the objective improves
        alpha = 1.0
        while True:
            trial = beta + alpha * step
            new_objective, new_log_lik = _objective(family, X, y, trial, ridge)
            if new_objective > objective or alpha < 1e-12:
                break
            alpha /= 2
        if new_objective <= objective:
            # No ascent left in floating point
            converged = decrement < np.sqrt(tol)
            break

        # Expand while the objective keeps improving
        if alpha == 1.0:
            while alpha < 2**30:
                expanded = beta + 2 * alpha * step
                exp_objective, exp_log_lik = _objective(family, X, y, expanded, ridge)
                if exp_objective <= new_objective:
                    break
                alpha *= 2
                trial, new_objective, new_log_lik = expanded, exp_objective, exp_log_lik

        beta = trial
        objective, log_lik = new_objective, new_log_lik
        if np.max(np.abs(beta)) > divergence_bound:
            diverged = True
            break

    if separated:
        converged, diverged = False, True

    if diverged:
        _logger.debug(f"Newton iterations diverged after {iteration} iterations")
    elif not converged:
        _logger.warning(f"Newton iterations stopped after {iteration} iterations without converging")
    return MleResult(beta, log_lik, converged, diverged, iteration)


def ridge_pilot(X, y, family, strength=None, penalty=None, n_categories=None):
    """Ridge-stabilised maximum likelihood estimate.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    family : str or Family
        Likelihood family.
    strength : float, optional
        Ridge strength. Default is :code:`1e-4 * N`.
    penalty : np.ndarray, optional
        Extra (p, p) PSD penalty matrix added to the ridge.
    n_categories : int, optional
        Number of multinomial categories.

    Returns
    -------
    beta : np.ndarray
        Coefficients. Shape is (n_blocks, p).
    """
    X = np.asarray(X, dtype=float)
    if strength is None:
        strength = 1e-4 * X.shape[0]
    ridge = strength * np.eye(X.shape[1])
    if penalty is not None:
        ridge = ridge + penalty
    return fit_mle(X, y, family, ridge=ridge, n_categories=n_categories).beta
