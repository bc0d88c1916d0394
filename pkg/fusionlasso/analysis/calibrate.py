"""Choosing lambda and scoring models.

Lambda is chosen by AIC over a log-spaced grid of EM fits, where the degrees
of freedom of a fit are the dimension of the nullspace of its binding
constraints. The chosen value anchors the Gamma hyperprior on lambda^2 used
for sampling. Fitted models are scored by WAIC (posterior draws) or K-fold
cross-validated RMSE (EM fits).
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from sklearn.model_selection import KFold

from fusionlasso.array_ops import get_one_hot, numerical_rank
from fusionlasso.inference import metrics, propriety
from fusionlasso.models import em, families
from fusionlasso.utils.misc import parallel_map, set_logging_level

_logger = logging.getLogger("fusionlasso")

# Relative AIC difference treated as a tie (the larger lambda wins)
AIC_TIE = 1e-8


@dataclass
class CalibrationResult:
    """Result of a lambda grid search.

    Parameters
    ----------
    grid : list of dict
        One entry per grid point with keys :code:`lam`, :code:`df`,
        :code:`log_lik`, :code:`aic` and :code:`converged`. Failed fits have
        NaN values.
    lambda_star : float
        Lambda with the smallest AIC.
    anchored_prior : tuple
        Shape and rate of the Gamma hyperprior on lambda^2.
    solution : fusionlasso.models.em.EmSolution
        EM fit at :code:`lambda_star`.
    waic : float, optional
        WAIC of a sampled model.
    cv_rmse : float, optional
        Cross-validated RMSE.
    """

    grid: list
    lambda_star: float
    anchored_prior: tuple
    solution: object = None
    waic: float = None
    cv_rmse: float = None

    @property
    def lambdas(self):
        return np.array([point["lam"] for point in self.grid])

    def path_frame(self):
        return pd.DataFrame(self.grid, columns=["lam", "df", "log_lik", "aic", "converged"])

    def to_dict(self):
        return {
            "grid": self.grid,
            "lambda_star": self.lambda_star,
            "anchored_prior": list(self.anchored_prior),
            "df_star": None if self.solution is None else self.solution.df,
            "waic": self.waic,
            "cv_rmse": self.cv_rmse,
        }


def df_estimate(sol, cset):
    """Degrees of freedom of an EM fit.

    Parameters
    ----------
    sol : fusionlasso.models.em.EmSolution
        Fitted solution.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set used for the fit.

    Returns
    -------
    df : float
        :code:`p - rank(binding rows of D̄)`, summed over coefficient blocks.
    """
    binding = sol.binding_set
    if sol.n_blocks == 1:
        binding = [binding]
    p = cset.n_coefs
    return float(sum(p - numerical_rank(cset.constraint_rows(b)) for b in binding))


def _grid_response(y, family, n_categories=None):
    if family.name == "linear":
        return np.asarray(y, dtype=float)
    if family.name == "logistic":
        return np.asarray(y, dtype=float) - 0.5
    n_blocks = family.n_blocks(y, n_categories)
    return get_one_hot(y, n_blocks + 1)[:, :n_blocks] - 0.5


def default_grid(X, y, n=50, low=1e-3, high=1e3):
    """Log-spaced lambda grid scaled to the data.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Response. Shape is (N,) or (N, n_blocks).
    n : int, optional
        Number of grid points.
    low : float, optional
        Lower end relative to the data scale :code:`max|X^T y| / N`.
    high : float, optional
        Upper end relative to the data scale.

    Returns
    -------
    grid : np.ndarray
        Strictly increasing grid. Shape is (n,).
    """
    if n < 2:
        raise ValueError("n must be two or greater.")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = np.max(np.abs(X.T @ y)) / X.shape[0]
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    return np.geomspace(low * scale, high * scale, n)


def _fit(X, y, cset, lam, family, config, beta_init, check, n_categories):
    return em.fit_em(
        X,
        y,
        cset,
        lam,
        family=family,
        config=config,
        beta_init=beta_init,
        check=check,
        n_categories=n_categories,
    )


def aic_grid(
    X,
    y,
    cset,
    family="linear",
    grid=None,
    n_grid=50,
    config=None,
    warm_start=True,
    n_jobs=1,
    check=True,
    n_categories=None,
):
    """Choose lambda by AIC over a grid of EM fits.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    family : str, optional
        Likelihood family.
    grid : np.ndarray, optional
        Lambda values. Default is :code:`default_grid` with :code:`n_grid`
        points.
    n_grid : int, optional
        Number of points in the default grid.
    config : fusionlasso.models.em.EmConfig, optional
        EM settings.
    warm_start : bool, optional
        Fit sequentially along the grid, starting each fit from the previous
        solution. If :code:`False`, fits are independent and run
        concurrently with :code:`n_jobs` threads.
    n_jobs : int, optional
        Number of threads for cold-start fits.
    check : bool, optional
        Should we check posterior propriety before the first fit?
    n_categories : int, optional
        Number of multinomial categories.

    Returns
    -------
    result : CalibrationResult
        Grid path, chosen lambda and anchored hyperprior.
    """
    family = families.get_family(family)
    X = np.asarray(X, dtype=float)
    y = family.validate(y)
    if grid is None:
        grid = default_grid(X, _grid_response(y, family, n_categories), n_grid)
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size < 2:
        raise ValueError("grid must have two or more points.")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing.")

    if check:
        report = propriety.check_posterior(X, y, cset, family)
        if report.posterior_proper is False:
            _logger.warning(f"Posterior is improper: {report.details}")

    _logger.info(f"Fitting {grid.size} lambda values")
    solutions = []
    with set_logging_level(_logger, logging.WARNING):
        if warm_start:
            beta_init = None
            for lam in grid:
                try:
                    sol = _fit(X, y, cset, lam, family, config, beta_init, False, n_categories)
                    beta_init = sol.beta_hat
                except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
                    _logger.warning(f"Fit at lambda={lam:.4g} failed: {e}")
                    sol = None
                solutions.append(sol)
        else:
            kwargs = [
                {
                    "X": X,
                    "y": y,
                    "cset": cset,
                    "lam": lam,
                    "family": family,
                    "config": config,
                    "beta_init": None,
                    "check": False,
                    "n_categories": n_categories,
                }
                for lam in grid
            ]
            results = parallel_map(_fit, kwargs, n_jobs=n_jobs)
            for lam, sol in zip(grid, results):
                if isinstance(sol, Exception):
                    _logger.warning(f"Fit at lambda={lam:.4g} failed: {sol}")
                    sol = None
                solutions.append(sol)

    if all(sol is None for sol in solutions):
        raise ValueError("All fits on the lambda grid failed.")

    path = []
    for lam, sol in zip(grid, solutions):
        if sol is None:
            path.append(
                {"lam": float(lam), "df": np.nan, "log_lik": np.nan, "aic": np.nan, "converged": False}
            )
        else:
            path.append(
                {
                    "lam": float(lam),
                    "df": sol.df,
                    "log_lik": sol.log_lik,
                    "aic": sol.aic,
                    "converged": sol.converged,
                }
            )

    aic = np.array([point["aic"] for point in path])
    best = np.nanmin(aic)
    ties = np.flatnonzero(aic <= best + AIC_TIE * max(abs(best), 1.0))
    index = int(ties[-1])
    lambda_star = float(grid[index])
    _logger.info(
        f"AIC chose lambda={lambda_star:.4g} (df={path[index]['df']:g})"
    )
    return CalibrationResult(
        grid=path,
        lambda_star=lambda_star,
        anchored_prior=anchor_prior(lambda_star),
        solution=solutions[index],
    )


def anchor_prior(lambda_star, shape=2.0):
    """Gamma hyperprior on lambda^2 with mean lambda_star^2.

    Parameters
    ----------
    lambda_star : float
        Calibrated lambda. Must be positive.
    shape : float, optional
        Gamma shape.

    Returns
    -------
    prior : tuple
        Shape and rate :code:`(shape, shape / lambda_star**2)`.
    """
    if not (np.isfinite(lambda_star) and lambda_star > 0):
        raise ValueError("lambda_star must be positive and finite.")
    return float(shape), float(shape / lambda_star**2)


def waic(draws, X, y, family=None, min_draws=100):
    """Widely applicable information criterion.

    Parameters
    ----------
    draws : fusionlasso.models.gibbs.PosteriorDraws
        Posterior draws.
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    family : str, optional
        Likelihood family. Default is the family of the draws.
    min_draws : int, optional
        Minimum number of kept draws.

    Returns
    -------
    waic : float
        :code:`-2 * (lppd - p_waic)`. Smaller is better.
    """
    family = family or draws.family
    beta = draws.pooled("beta")
    n_draws = beta.shape[0]
    if n_draws < min_draws:
        raise ValueError(f"WAIC needs at least {min_draws} draws, got {n_draws}.")
    sigma2 = draws.pooled("sigma2") if family == "linear" else None
    log_lik = metrics.pointwise_log_likelihood(X, y, beta, family, sigma2)
    lppd = np.sum(logsumexp(log_lik, axis=0) - np.log(n_draws))
    p_waic = np.sum(np.var(log_lik, axis=0, ddof=1))
    return float(-2 * (lppd - p_waic))


def _degenerate_outcome(y, family):
    if family.name == "linear":
        return np.ptp(y) == 0
    return np.unique(y).size < 2


def _cv_fold(X, y, cset, family, train, test, grid, n_grid, config, n_categories):
    result = aic_grid(
        X[train],
        y[train],
        cset,
        family,
        grid=grid,
        n_grid=n_grid,
        config=config,
        check=False,
        n_categories=n_categories,
    )
    return result.solution.predict(X[test])


def kfold_cv(
    X,
    y,
    cset,
    family="linear",
    folds=20,
    grid=None,
    n_grid=50,
    seed=None,
    config=None,
    n_jobs=1,
    n_categories=None,
):
    """K-fold cross-validated prediction RMSE.

    In each fold lambda is chosen by AIC on the training part and the EM fit
    at that lambda predicts the held-out part. Predictions are on the mean
    (probability) scale. Folds whose training outcome does not vary are
    skipped.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    family : str, optional
        Likelihood family.
    folds : int, optional
        Number of folds.
    grid : np.ndarray, optional
        Lambda values. Default is a per-fold :code:`default_grid`.
    n_grid : int, optional
        Number of points in the default grid.
    seed : int, optional
        Seed for the random fold assignment.
    config : fusionlasso.models.em.EmConfig, optional
        EM settings.
    n_jobs : int, optional
        Number of folds to fit concurrently.
    n_categories : int, optional
        Number of multinomial categories.

    Returns
    -------
    cv_rmse : float
        RMSE of the held-out predictions.
    """
    family = families.get_family(family)
    X = np.asarray(X, dtype=float)
    y = family.validate(y)
    N = X.shape[0]
    if folds < 2:
        raise ValueError("folds must be two or greater.")
    if N < folds:
        raise ValueError(f"folds must be at most the number of rows ({N}).")
    if family.name == "multinomial" and n_categories is None:
        n_categories = int(y.max()) + 1

    kfold = KFold(n_splits=folds, shuffle=True, random_state=seed)
    kwargs = []
    tests = []
    for i, (train, test) in enumerate(kfold.split(X)):
        if _degenerate_outcome(y[train], family):
            _logger.warning(f"Fold {i} skipped: training outcome does not vary")
            continue
        tests.append(test)
        kwargs.append(
            {
                "X": X,
                "y": y,
                "cset": cset,
                "family": family,
                "train": train,
                "test": test,
                "grid": grid,
                "n_grid": n_grid,
                "config": config,
                "n_categories": n_categories,
            }
        )

    _logger.info(f"Cross-validating over {len(kwargs)} folds")
    with set_logging_level(_logger, logging.WARNING):
        predictions = parallel_map(_cv_fold, kwargs, n_jobs=n_jobs)

    held_out, predicted = [], []
    for i, (test, prediction) in enumerate(zip(tests, predictions)):
        if isinstance(prediction, Exception):
            _logger.warning(f"Fold {i} skipped: {prediction}")
            continue
        held_out.append(test)
        predicted.append(prediction)
    if not held_out:
        raise ValueError("All cross-validation folds were skipped.")

    held_out = np.concatenate(held_out)
    predicted = np.concatenate(predicted)
    return metrics.probability_rmse(y[held_out], predicted, family.name)
