"""Benchmark of unit-level treatment effect estimators.

Methods
-------
- :code:`ssp`: structured sparsity with an agnostic structure over the
  unit treatment effects, size-normalised weights and lambda chosen by AIC.
- :code:`assp`: as :code:`ssp` with adaptive weights from a ridge pilot.
- :code:`fe`: unpenalised unit fixed effects with unit-specific treatment
  effects.
- :code:`pooled`: unit fixed effects with a single treatment effect.

Unit intercepts in the structured models are shrunk towards their mean by
a Gaussian penalty, as a unit random effect would be. Its precision comes
from a moment estimate of the intercept variance (:code:`unit_variance`)
and does not depend on lambda.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tabulate import tabulate

from fusionlasso.analysis import calibrate
from fusionlasso.data import Dataset, expand_design
from fusionlasso.inference import metrics
from fusionlasso.models import families, glm
from fusionlasso.simulation.hte import generate
from fusionlasso.structure import (
    adaptive_weights,
    build_structure,
    compile_constraints,
    size_weights,
)
from fusionlasso.utils.misc import get_n_jobs, parallel_map, set_logging_level

_logger = logging.getLogger("fusionlasso")

METHODS = ["ssp", "assp", "fe", "pooled"]

HETEROGENEOUS_FORMULA = "x + unit + treated:unit"
POOLED_FORMULA = "x + unit + treated"
EFFECT_TERM = "treated:unit"

# Largest precision (per record) of the unit intercept penalty
MAX_UNIT_PRECISION = 1.0

# Ridge used to keep the binomial fixed effects fit finite
FE_RIDGE = 1e-6


class FittedMethod:
    """Coefficients of a fitted estimator with the design used to fit them.

    Parameters
    ----------
    name : str
        Method name.
    beta : np.ndarray
        Coefficients. Shape is (p,).
    family : str
        Likelihood family.
    formula : str
        Design formula.
    columns : dict
        Column kinds used to expand the design.
    details : dict, optional
        Extra information about the fit (e.g. the chosen lambda).
    """

    def __init__(self, name, beta, family, formula, columns, details=None):
        self.name = name
        self.beta = np.asarray(beta, dtype=float).reshape(-1)
        self.family = families.get_family(family)
        self.formula = formula
        self.columns = columns
        self.details = details or {}

    def predict(self, frame):
        """Mean response E[y | unit, treated, x] for each row of a frame."""
        columns = {k: v for k, v in self.columns.items() if k in frame.columns}
        data = Dataset(frame, columns=columns)
        X = expand_design(data, self.formula, intercept=False).values
        return self.family.mean(X @ self.beta)


def mc_treatment_effects(model, units, x_draws):
    """Monte Carlo average treatment effect of each unit.

    For every unit the difference between the predicted mean response under
    treatment and under control is averaged over common covariate draws.

    Parameters
    ----------
    model : FittedMethod
        Object with a :code:`predict(frame)` method.
    units : list of str
        Unit labels.
    x_draws : np.ndarray
        Covariate draws shared by all units. Shape is (n_draws,).

    Returns
    -------
    effects : np.ndarray
        Estimated effect of each unit. Shape is (G,).
    """
    x_draws = np.asarray(x_draws, dtype=float).reshape(-1)
    n = x_draws.size
    G = len(units)
    frame = pd.DataFrame(
        {
            "unit": np.repeat(np.repeat(units, n), 2),
            "treated": np.tile([1, 0], G * n),
            "x": np.repeat(np.tile(x_draws, G), 2),
        }
    )
    mean = model.predict(frame).reshape(G, n, 2)
    return (mean[..., 0] - mean[..., 1]).mean(axis=1)


def unit_variance(X, y, family, unit):
    """Moment estimate of the variance of the unit intercepts.

    The between-unit variance of the fixed effects intercepts minus their
    average sampling variance, floored at zero.

    Parameters
    ----------
    X : np.ndarray
        Design matrix with one indicator column per unit. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    family : str
        Likelihood family.
    unit : list of int
        Columns of the unit indicators.

    Returns
    -------
    variance : float
        Estimated intercept variance.
    scale : float
        Estimated noise variance (one for families without a scale).
    """
    family = families.get_family(family)
    X = np.asarray(X, dtype=float)
    N, p = X.shape
    ridge = 0.0 if family.has_scale else FE_RIDGE
    beta = glm.fit_mle(X, y, family, ridge=ridge).beta[0]
    if family.has_scale:
        scale = float(np.sum((y - X @ beta) ** 2)) / max(N - p, 1)
        info = X.T @ X / scale
    else:
        scale = 1.0
        mu = family.mean(X @ beta)
        info = (X.T * (mu * (1 - mu))) @ X
    sampling = np.diag(np.linalg.pinv(info))[unit]
    between = np.var(beta[unit], ddof=1)
    return max(between - float(np.mean(sampling)), 0.0), scale


def unit_precision(X, y, family, unit):
    """Precision of the Gaussian penalty on the unit intercepts.

    This is the noise variance divided by :code:`unit_variance`, capped at
    :code:`MAX_UNIT_PRECISION` per record.
    """
    variance, scale = unit_variance(X, y, family, unit)
    cap = MAX_UNIT_PRECISION * X.shape[0]
    if variance * cap <= scale:
        return cap
    return scale / variance


def _unit_ridge(design, precision):
    p = design.n_coefs
    unit = design.term_indices("unit")
    G = len(unit)
    ridge = np.zeros((p, p))
    ridge[np.ix_(unit, unit)] = precision * (np.eye(G) - np.ones((G, G)) / G)
    return ridge


def fit_ssp(sim, adaptive=False, n_grid=50, gamma=1.0):
    """Structured sparsity estimator.

    Parameters
    ----------
    sim : fusionlasso.simulation.GroupedHeterogeneity
        Simulated data.
    adaptive : bool, optional
        Should we use adaptive weights?
    n_grid : int, optional
        Number of lambda values.
    gamma : float, optional
        Exponent of the adaptive weights.

    Returns
    -------
    model : FittedMethod
        Fitted estimator.
    """
    data = sim.dataset()
    design = expand_design(data, HETEROGENEOUS_FORMULA, intercept=False)
    X = design.values
    y = data.outcome_array()
    family = data.family

    precision = unit_precision(X, y, family, design.term_indices("unit"))
    unit_ridge = _unit_ridge(design, precision)
    _logger.info(
        f"Unit intercepts get a Gaussian penalty with precision {precision:.4g} "
        "in place of a unit random effect"
    )

    graph = build_structure(design, "agnostic", terms=[EFFECT_TERM])
    cset = compile_constraints(graph)
    cset = size_weights(cset, X)
    if adaptive:
        pilot = glm.ridge_pilot(X, y, family, penalty=unit_ridge)[0]
        unit_weights = cset.with_weights(np.ones(cset.K))
        cset = adaptive_weights(unit_weights, pilot, gamma, base=cset.weights)
    cset = cset.with_ridge(unit_ridge)

    result = calibrate.aic_grid(X, y, cset, family, n_grid=n_grid, check=False)
    name = "assp" if adaptive else "ssp"
    return FittedMethod(
        name,
        result.solution.beta_hat,
        family,
        HETEROGENEOUS_FORMULA,
        sim.columns_config(),
        {
            "lambda_star": result.lambda_star,
            "df": result.solution.df,
            "unit_precision": precision,
        },
    )


def fit_fixed_effects(sim, formula=HETEROGENEOUS_FORMULA, name="fe"):
    """Unpenalised maximum likelihood estimator.

    Parameters
    ----------
    sim : fusionlasso.simulation.GroupedHeterogeneity
        Simulated data.
    formula : str, optional
        Design formula.
    name : str, optional
        Method name.

    Returns
    -------
    model : FittedMethod
        Fitted estimator.
    """
    data = sim.dataset()
    X = expand_design(data, formula, intercept=False).values
    y = data.outcome_array()
    ridge = 0.0 if data.family == "linear" else FE_RIDGE
    fit = glm.fit_mle(X, y, data.family, ridge=ridge)
    if fit.diverged:
        _logger.debug(f"{name} fit diverged (separated units)")
    return FittedMethod(
        name, fit.beta[0], data.family, formula, sim.columns_config(), {"diverged": fit.diverged}
    )


def fit_method(sim, method, n_grid=50):
    """Fit one benchmark method.

    Parameters
    ----------
    sim : fusionlasso.simulation.GroupedHeterogeneity
        Simulated data.
    method : str
        One of :code:`'ssp'`, :code:`'assp'`, :code:`'fe'` or
        :code:`'pooled'`.
    n_grid : int, optional
        Number of lambda values for the structured methods.

    Returns
    -------
    model : FittedMethod
        Fitted estimator.
    """
    if method == "ssp":
        return fit_ssp(sim, adaptive=False, n_grid=n_grid)
    if method == "assp":
        return fit_ssp(sim, adaptive=True, n_grid=n_grid)
    if method == "fe":
        return fit_fixed_effects(sim)
    if method == "pooled":
        return fit_fixed_effects(sim, POOLED_FORMULA, "pooled")
    raise ValueError(f"method must be one of {METHODS}, got {method}.")


@dataclass
class SimResult:
    """Benchmark results.

    Parameters
    ----------
    spec : fusionlasso.simulation.SimulationSpec
        Simulation settings.
    rmse : pd.DataFrame
        One row per replicate and method with columns :code:`replicate`,
        :code:`method`, :code:`rmse` (NaN if the fit failed) and
        :code:`error`.
    effects : pd.DataFrame
        Per-unit estimates with columns :code:`replicate`, :code:`method`,
        :code:`unit`, :code:`estimate` and :code:`truth`.
    """

    spec: object
    rmse: pd.DataFrame
    effects: pd.DataFrame = field(default_factory=pd.DataFrame)

    def summary_frame(self):
        rows = []
        for method, group in self.rmse.groupby("method", sort=False):
            values = group["rmse"].dropna().to_numpy()
            n_ok = values.size
            rows.append(
                {
                    "method": method,
                    "mean_rmse": values.mean() if n_ok else np.nan,
                    "se": values.std(ddof=1) / np.sqrt(n_ok) if n_ok > 1 else np.nan,
                    "n_ok": n_ok,
                    "n_failed": int(len(group) - n_ok),
                }
            )
        return pd.DataFrame(rows)

    def to_dict(self):
        summary = self.summary_frame()
        return {
            "spec": self.spec.to_dict(),
            "summary": summary.astype(object).where(summary.notna(), None).to_dict(orient="records"),
        }


def _replicate(spec, replicate, methods, n_grid, n_mc):
    rng = np.random.default_rng([spec.seed, replicate])
    sim = generate(spec, rng)
    x_draws = rng.standard_normal(n_mc)
    rmse_rows = []
    effect_rows = []
    for method in methods:
        try:
            model = fit_method(sim, method, n_grid=n_grid)
            estimate = mc_treatment_effects(model, sim.units, x_draws)
            error = None
            score = metrics.rmse(sim.effects, estimate)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
            estimate = np.full(spec.G, np.nan)
            error = str(e)
            score = np.nan
        rmse_rows.append(
            {"replicate": replicate, "method": method, "rmse": score, "error": error}
        )
        effect_rows.extend(
            {
                "replicate": replicate,
                "method": method,
                "unit": unit,
                "estimate": est,
                "truth": truth,
            }
            for unit, est, truth in zip(sim.units, estimate, sim.effects)
        )
    return rmse_rows, effect_rows


def run_benchmark(spec, methods=None, n_grid=50, n_mc=1000, n_jobs=None):
    """Run the simulation benchmark.

    Parameters
    ----------
    spec : SimulationSpec
        Simulation settings, including the number of replicates and seed.
    methods : list of str, optional
        Methods to compare. Default is all of :code:`METHODS`.
    n_grid : int, optional
        Number of lambda values for the structured methods.
    n_mc : int, optional
        Number of covariate draws for the Monte Carlo effects.
    n_jobs : int, optional
        Number of replicates to run concurrently.

    Returns
    -------
    result : SimResult
        RMSE of each method in each replicate and the per-unit estimates.
    """
    methods = methods or METHODS
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {method}.")
    if spec.seed is None:
        spec.seed = int(np.random.SeedSequence().entropy % 2**63)
        _logger.info(f"Using seed {spec.seed}")

    n_jobs = get_n_jobs(n_jobs)
    _logger.info(
        f"Running {spec.replicates} replicates of G={spec.G}, r={spec.r}, "
        f"S={spec.S} ({spec.family}) with methods {methods}"
    )
    kwargs = [
        {
            "spec": spec,
            "replicate": i,
            "methods": methods,
            "n_grid": n_grid,
            "n_mc": n_mc,
        }
        for i in range(spec.replicates)
    ]
    with set_logging_level(_logger, logging.ERROR):
        results = parallel_map(_replicate, kwargs, n_jobs=n_jobs, desc="Replicates")

    rmse_rows, effect_rows = [], []
    for i, result in enumerate(results):
        if isinstance(result, Exception):
            _logger.warning(f"Replicate {i} failed: {result}")
            rmse_rows.extend(
                {"replicate": i, "method": m, "rmse": np.nan, "error": str(result)}
                for m in methods
            )
            continue
        rmse_rows.extend(result[0])
        effect_rows.extend(result[1])

    sim_result = SimResult(spec, pd.DataFrame(rmse_rows), pd.DataFrame(effect_rows))
    summary = sim_result.summary_frame()
    _logger.info(
        "Benchmark summary:\n"
        + tabulate(summary, headers="keys", tablefmt="simple", showindex=False, floatfmt=".4f")
    )
    return sim_result
