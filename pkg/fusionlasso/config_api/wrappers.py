"""Wrapper functions for use in the config API.

All of the functions in this module can be listed in the config passed to
:code:`fusionlasso.run_pipeline`.

All wrapper functions have the structure::

    func(data, output_dir, **kwargs)

where:

- :code:`data` is a :code:`fusionlasso.config_api.wrappers.Problem` (or
  :code:`None` for steps which do not need data).
- :code:`output_dir` is the path to save output to.
- :code:`kwargs` are keyword arguments for function specific options.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fusionlasso.analysis import calibrate as calibration
from fusionlasso.analysis import diagnostics
from fusionlasso.data import Dataset, expand_design, rw
from fusionlasso.inference import propriety
from fusionlasso.models import em, gibbs, glm
from fusionlasso.simulation import SimulationSpec, run_benchmark
from fusionlasso.structure import (
    StructureGraph,
    adaptive_weights,
    build_structure,
    compile_constraints,
    size_weights,
)
from fusionlasso.utils.misc import get_n_jobs, get_seed, override_dict_defaults, save_json

_logger = logging.getLogger("fusionlasso")

WEIGHTS = ["none", "size", "adaptive"]


@dataclass
class Problem:
    """Data, design and constraint set of one analysis.

    Parameters
    ----------
    data : fusionlasso.data.Dataset
        Records.
    design : fusionlasso.data.DesignMatrix
        Expanded design.
    graph : fusionlasso.structure.StructureGraph
        Fusion graph.
    cset : fusionlasso.structure.ConstraintSet
        Compiled constraints.
    """

    data: Dataset
    design: object
    graph: StructureGraph
    cset: object

    @property
    def X(self):
        return self.design.values

    @property
    def y(self):
        return self.data.outcome_array()

    @property
    def family(self):
        return self.data.family

    @property
    def n_categories(self):
        if self.family != "multinomial":
            return None
        return len(self.data.outcome_levels())

    @property
    def category_names(self):
        if self.family != "multinomial":
            return None
        return self.data.outcome_levels()[:-1]


def _structure_spec(structure):
    if structure is None:
        return "agnostic"
    if ":" not in structure and Path(structure).suffix in [".json", ".yml", ".yaml"]:
        return f"file:{structure}"
    return structure


def load_data(
    inputs,
    config,
    formula=None,
    intercept=None,
    structure=None,
    terms=None,
    family=None,
    weights=None,
    gamma=1.0,
):
    """Load records and build the design and constraint set.

    Settings not passed are read from the sidecar config (keys
    :code:`formula`, :code:`intercept`, :code:`structure` and
    :code:`weights`).

    Parameters
    ----------
    inputs : str
        Path to the CSV file.
    config : str or dict
        Sidecar config declaring column kinds, the outcome and the family.
    formula : str, optional
        Design formula, e.g. :code:`"Type * Money"`.
    intercept : bool, optional
        Should the design have an intercept column? Default is :code:`True`.
    structure : str, optional
        Structure spec: :code:`'agnostic'`, :code:`'lattice'`,
        :code:`'priority:<factor>'`, :code:`'file:<path>'` or a path to a
        JSON graph.
    terms : list of str, optional
        Terms to structure. Default is every categorical term.
    family : str, optional
        Override the family of the sidecar.
    weights : str, optional
        :code:`'none'` (unit weights), :code:`'size'` (size normalised) or
        :code:`'adaptive'` (size normalised and rescaled by a ridge pilot).
    gamma : float, optional
        Exponent of the adaptive weights.

    Returns
    -------
    problem : Problem
        Data, design and constraint set.
    """
    sidecar = rw.load_sidecar(config)
    if family is not None:
        sidecar = override_dict_defaults(sidecar, {"family": family})
    data = Dataset.from_csv(inputs, sidecar)

    formula = formula or sidecar.get("formula")
    if formula is None:
        raise ValueError("formula must be passed or declared in the config.")
    intercept = sidecar.get("intercept", True) if intercept is None else intercept
    design = expand_design(data, formula, intercept=intercept)

    declared = sidecar.get("structure") or {}
    if isinstance(declared, str):
        declared = {"spec": declared}
    spec = _structure_spec(structure or declared.get("spec"))
    terms = terms or declared.get("terms")
    graph = build_structure(design, spec, terms=terms)
    cset = compile_constraints(graph)

    weights = weights or sidecar.get("weights", "none")
    if weights not in WEIGHTS:
        raise ValueError(f"weights must be one of {WEIGHTS}, got {weights}.")
    if weights in ["size", "adaptive"]:
        cset = size_weights(cset, design.values)
    if weights == "adaptive":
        pilot = glm.ridge_pilot(
            design.values,
            data.outcome_array(),
            data.family,
            n_categories=len(data.outcome_levels()) if data.family == "multinomial" else None,
        )[0]
        cset = adaptive_weights(
            cset.with_weights(np.ones(cset.K)), pilot, gamma, base=cset.weights
        )

    _logger.info(
        f"Loaded {len(data)} records, {design.n_coefs} coefficients, "
        f"{cset.K} linear and {cset.L} quadratic constraints"
    )
    return Problem(data=data, design=design, graph=graph, cset=cset)


def check_propriety(data, output_dir, structure=None):
    """Check prior (and, with data, posterior) propriety.

    This function will save :code:`<output_dir>/propriety.json`.

    Parameters
    ----------
    data : Problem
        Problem to check. If :code:`None`, only the prior of
        :code:`structure` is checked.
    output_dir : str
        Path to output directory.
    structure : str, optional
        Path to a JSON graph. Only used when :code:`data` is :code:`None`.

    Returns
    -------
    report : fusionlasso.inference.propriety.ProprietyReport
        Propriety report.
    """
    if data is None:
        if structure is None:
            raise ValueError("data or structure must be passed.")
        _, path = _structure_spec(structure).partition(":")[::2]
        if not Path(path).exists():
            raise FileNotFoundError(f"{path} not found.")
        cset = compile_constraints(StructureGraph.load(path))
        report = propriety.prior_report(cset)
    else:
        report = propriety.check_posterior(data.X, data.y, data.cset, data.family)

    save_json(f"{output_dir}/propriety.json", report.to_dict())
    return report


def fit_em(data, output_dir, lam="grid", n_grid=50, em_config=None, n_jobs=None):
    """Fit the posterior mode by EM.

    With :code:`lam="grid"` lambda is chosen by AIC and this function will
    also save :code:`<output_dir>/calibration.json` and
    :code:`<output_dir>/path.csv`. It always saves
    :code:`<output_dir>/em_solution.json` and
    :code:`<output_dir>/coefficients.csv`.

    Parameters
    ----------
    data : Problem
        Problem to fit.
    output_dir : str
        Path to output directory.
    lam : float or str, optional
        Penalty strength or :code:`'grid'`.
    n_grid : int, optional
        Number of lambda values in the grid.
    em_config : dict, optional
        Keyword arguments for :code:`fusionlasso.models.em.EmConfig`.
    n_jobs : int, optional
        Number of threads (unused for a single fit).

    Returns
    -------
    solution : fusionlasso.models.em.EmSolution
        Posterior mode.
    """
    if data is None:
        raise ValueError("data must be passed.")
    config = em.EmConfig(**(em_config or {}))

    if lam == "grid":
        result = calibration.aic_grid(
            data.X,
            data.y,
            data.cset,
            data.family,
            n_grid=n_grid,
            config=config,
            n_jobs=get_n_jobs(n_jobs),
            n_categories=data.n_categories,
        )
        save_json(f"{output_dir}/calibration.json", result.to_dict())
        _save_frame(result.path_frame(), f"{output_dir}/path.csv")
        solution = result.solution
    else:
        solution = em.fit_em(
            data.X,
            data.y,
            data.cset,
            float(lam),
            data.family,
            config=config,
            n_categories=data.n_categories,
        )

    solution.labels = list(data.design.labels)
    save_json(f"{output_dir}/em_solution.json", solution.to_dict())
    table = solution.coefficient_table(data.design.labels)
    if data.category_names is not None:
        table["category"] = [data.category_names[c] for c in table["category"]]
    _save_frame(table, f"{output_dir}/coefficients.csv")
    return solution


def sample(
    data,
    output_dir,
    seed,
    prior=None,
    n_chains=4,
    n_iter=10000,
    burn_in=5000,
    thin=1,
    n_jobs=None,
    force=False,
    draws_format="binary",
):
    """Sample the posterior by Gibbs sampling.

    This function will save the draws to :code:`<output_dir>/draws.bin`
    (or :code:`draws.csv`) and a posterior summary to
    :code:`<output_dir>/summary.csv`.

    Parameters
    ----------
    data : Problem
        Problem to sample.
    output_dir : str
        Path to output directory.
    seed : int
        Master seed.
    prior : dict, optional
        Keyword arguments for :code:`fusionlasso.models.gibbs.PriorSpec`.
    n_chains : int, optional
        Number of chains.
    n_iter : int, optional
        Iterations per chain (including burn-in).
    burn_in : int, optional
        Iterations discarded from the start of each chain.
    thin : int, optional
        Keep every :code:`thin`-th draw.
    n_jobs : int, optional
        Number of chains to run concurrently.
    force : bool, optional
        Sample an unverified posterior. The draws are stamped unverified.
    draws_format : str, optional
        :code:`'binary'` or :code:`'csv'`.

    Returns
    -------
    draws : fusionlasso.models.gibbs.PosteriorDraws
        Posterior draws.
    """
    if data is None:
        raise ValueError("data must be passed.")
    if draws_format not in ["binary", "csv"]:
        raise ValueError("draws_format must be 'binary' or 'csv'.")
    seed = get_seed(seed)
    if seed is None:
        raise ValueError("seed must be passed for sampling.")

    config = gibbs.GibbsConfig(
        n_chains=n_chains,
        n_iter=n_iter,
        burn_in=burn_in,
        thin=thin,
        seed=seed,
        n_jobs=n_jobs,
    )
    kwargs = {}
    if data.family == "multinomial":
        kwargs = {
            "n_categories": data.n_categories,
            "category_names": data.category_names,
        }
    draws = gibbs.SAMPLERS[data.family](
        data.X,
        data.y,
        data.cset,
        prior=prior,
        config=config,
        force=force,
        **kwargs,
    )
    draws.metadata["labels"] = list(data.design.labels)

    suffix = "csv" if draws_format == "csv" else "bin"
    Path(output_dir).mkdir(parents=True, exist_ok=True)
    draws.save(f"{output_dir}/draws.{suffix}")
    _save_frame(draws.summary().reset_index(), f"{output_dir}/summary.csv")
    return draws


def calibrate(
    data,
    output_dir,
    n_grid=50,
    folds=20,
    seed=None,
    warm_start=True,
    n_jobs=None,
    draws=None,
    em_config=None,
):
    """Calibrate lambda by AIC, with optional cross-validation and WAIC.

    This function will save :code:`<output_dir>/calibration.json` and
    :code:`<output_dir>/path.csv`.

    Parameters
    ----------
    data : Problem
        Problem to calibrate.
    output_dir : str
        Path to output directory.
    n_grid : int, optional
        Number of lambda values.
    folds : int, optional
        Number of cross-validation folds. Zero skips cross-validation.
    seed : int, optional
        Seed for the fold assignment. Required if :code:`folds > 0`.
    warm_start : bool, optional
        Fit the grid sequentially from warm starts.
    n_jobs : int, optional
        Number of threads for cold-start fits and folds.
    draws : str, optional
        Path to posterior draws of the same problem, used for WAIC.
    em_config : dict, optional
        Keyword arguments for :code:`fusionlasso.models.em.EmConfig`.

    Returns
    -------
    result : fusionlasso.analysis.calibrate.CalibrationResult
        Calibration result.
    """
    if data is None:
        raise ValueError("data must be passed.")
    config = em.EmConfig(**(em_config or {}))
    n_jobs = get_n_jobs(n_jobs)

    result = calibration.aic_grid(
        data.X,
        data.y,
        data.cset,
        data.family,
        n_grid=n_grid,
        config=config,
        warm_start=warm_start,
        n_jobs=n_jobs,
        n_categories=data.n_categories,
    )
    if folds:
        seed = get_seed(seed)
        if seed is None:
            raise ValueError("seed must be passed for cross-validation.")
        result.cv_rmse = calibration.kfold_cv(
            data.X,
            data.y,
            data.cset,
            data.family,
            folds=folds,
            n_grid=n_grid,
            seed=seed,
            config=config,
            n_jobs=n_jobs,
            n_categories=data.n_categories,
        )
    if draws is not None:
        result.waic = calibration.waic(gibbs.PosteriorDraws.load(draws), data.X, data.y)

    save_json(f"{output_dir}/calibration.json", result.to_dict())
    _save_frame(result.path_frame(), f"{output_dir}/path.csv")
    return result


def simulate(
    data,
    output_dir,
    seed,
    G=25,
    r=20,
    S=12,
    family="linear",
    replicates=100,
    methods=None,
    n_grid=50,
    n_mc=1000,
    n_jobs=None,
):
    """Run the grouped heterogeneity benchmark.

    This function will save :code:`<output_dir>/sim_result.json`,
    :code:`<output_dir>/rmse.csv` (one row per replicate and method) and
    :code:`<output_dir>/effects.csv` (per-unit estimates).

    Parameters
    ----------
    data : None
        Not used.
    output_dir : str
        Path to output directory.
    seed : int
        Master seed.
    G : int, optional
        Number of units.
    r : int, optional
        Records per unit.
    S : int, optional
        Units with effect -1 (and with effect +1).
    family : str, optional
        :code:`'linear'` or :code:`'binomial'`.
    replicates : int, optional
        Number of replicates.
    methods : list of str, optional
        Methods to compare.
    n_grid : int, optional
        Number of lambda values for the structured methods.
    n_mc : int, optional
        Covariate draws for the Monte Carlo effects.
    n_jobs : int, optional
        Number of replicates to run concurrently.

    Returns
    -------
    result : fusionlasso.simulation.SimResult
        Benchmark result.
    """
    seed = get_seed(seed)
    if seed is None:
        raise ValueError("seed must be passed for simulation.")
    spec = SimulationSpec(G=G, r=r, S=S, family=family, seed=seed, replicates=replicates)
    result = run_benchmark(spec, methods=methods, n_grid=n_grid, n_mc=n_mc, n_jobs=n_jobs)

    save_json(f"{output_dir}/sim_result.json", result.to_dict())
    _save_frame(result.rmse, f"{output_dir}/rmse.csv")
    _save_frame(result.effects, f"{output_dir}/effects.csv")
    return result


def diagnose(
    data,
    output_dir,
    draws,
    split=True,
    rhat_threshold=1.1,
    z_threshold=1.96,
):
    """Convergence diagnostics of saved posterior draws.

    This function will save :code:`<output_dir>/diagnostics.json` and
    :code:`<output_dir>/flagged.csv`.

    Parameters
    ----------
    data : None
        Not used.
    output_dir : str
        Path to output directory.
    draws : str
        Path to draws saved by :code:`sample`.
    split : bool, optional
        Use split chains for R-hat.
    rhat_threshold : float, optional
        R-hat above this is flagged.
    z_threshold : float, optional
        Mean absolute Geweke z above this is flagged.

    Returns
    -------
    report : fusionlasso.analysis.diagnostics.DiagnosticsReport
        Diagnostics report.
    """
    report = diagnostics.diagnose(
        gibbs.PosteriorDraws.load(draws),
        split=split,
        rhat_threshold=rhat_threshold,
        z_threshold=z_threshold,
    )
    save_json(f"{output_dir}/diagnostics.json", report.to_dict())
    _save_frame(report.flagged_frame(), f"{output_dir}/flagged.csv")
    return report


def _save_frame(frame, filename):
    _logger.info(f"Saving {filename}")
    Path(filename).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(filename, index=False, float_format="%.10g")
