"""Functions for running full pipelines via the config API.

A pipeline config maps wrapper names (see
:code:`fusionlasso.config_api.wrappers`) to keyword arguments, e.g.::

    load_data:
      inputs: records.csv
      config: columns.json
      structure: lattice
    calibrate:
      n_grid: 50
      folds: 20
      seed: 7
    sample:
      seed: 7
      n_chains: 4

Each command line subcommand runs a one-step pipeline. Every run records a
:code:`run.json` provenance file which can be passed back with
:code:`--from-run` to reproduce the outputs.
"""

import argparse
import copy
import json
import logging
import pprint
import sys
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import yaml

from fusionlasso.config_api import wrappers
from fusionlasso.utils.misc import get_n_jobs, get_seed, load_json, save_json

_logger = logging.getLogger("fusionlasso")

SUBCOMMANDS = {
    "check-propriety": "check_propriety",
    "fit-em": "fit_em",
    "sample": "sample",
    "calibrate": "calibrate",
    "simulate": "simulate",
    "diagnose": "diagnose",
}

# Steps whose outputs depend on a seed (calibrate only with folds)
STOCHASTIC = ["sample", "simulate", "calibrate"]

# Keyword arguments holding paths
PATH_KEYS = ["inputs", "config", "draws"]

EXIT_ERRORS = (
    ValueError,
    KeyError,
    FileNotFoundError,
    FloatingPointError,
    json.JSONDecodeError,
    yaml.YAMLError,
)


def load_config(config):
    """Load config.

    Parameters
    ----------
    config : str or dict
        Path to yaml (or JSON) file, :code:`str` to convert to :code:`dict`,
        or :code:`dict` containing the config.

    Returns
    -------
    config : dict
        Config for a full pipeline.
    """
    if type(config) not in [str, dict]:
        raise ValueError("config must be a str or dict, got {}.".format(type(config)))

    if isinstance(config, str):
        path = Path(config)
        if path.suffix in [".yml", ".yaml", ".json"] and path.exists():
            with open(path, "r") as f:
                config = yaml.safe_load(f)
        else:
            config = yaml.safe_load(config)

    if not isinstance(config, dict):
        raise ValueError("config must describe a mapping of steps to options.")
    return config


def find_function(name, extra_funcs=None):
    """Find a function to execute via the config API.

    Parameters
    ----------
    name : str
        Function name.
    extra_funcs : list of functions, optional
        Custom functions passed by the user.

    Returns
    -------
    func : function
        Function to execute.
    """
    if extra_funcs is not None:
        for f in extra_funcs:
            if f.__name__ == name:
                return f

    if name in SUBCOMMANDS.values() and hasattr(wrappers, name):
        return getattr(wrappers, name)

    raise ValueError(
        f"{name} is not a pipeline step. Steps are {list(SUBCOMMANDS.values())}."
    )


def package_versions():
    """Versions of the packages a run depends on."""
    packages = {}
    for package in ["fusionlasso", "numpy", "scipy", "pandas", "scikit-learn"]:
        try:
            packages[package] = version(package)
        except PackageNotFoundError:
            packages[package] = "unknown"
    return packages


@dataclass
class RunConfig:
    """Provenance of a pipeline run.

    Parameters
    ----------
    config : dict
        Pipeline config with all paths resolved.
    subcommand : str, optional
        Command line subcommand which created the run.
    seed : int, optional
        Seed used by the stochastic steps.
    n_jobs : int, optional
        Number of worker threads.
    versions : dict
        Package versions.
    """

    config: dict
    subcommand: str = None
    seed: int = None
    n_jobs: int = None
    versions: dict = field(default_factory=package_versions)

    def __post_init__(self):
        self.config = _resolve_paths(self.config)
        self.n_jobs = get_n_jobs(self.n_jobs)
        for name in list(self.config):
            if self.config[name] is None:
                self.config[name] = {}
            kwargs = self.config[name]
            if not _needs_seed(name, kwargs):
                continue
            if kwargs.get("seed") is None:
                seed = get_seed(self.seed)
                if seed is None:
                    raise ValueError(
                        f"{name} needs a seed (pass --seed or set FUSIONLASSO_SEED)."
                    )
                kwargs["seed"] = seed
        seeds = [
            kwargs["seed"]
            for kwargs in self.config.values()
            if isinstance(kwargs, dict) and kwargs.get("seed") is not None
        ]
        if self.seed is None and seeds:
            self.seed = seeds[0]

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "n_jobs": self.n_jobs,
            "versions": self.versions,
        }

    @classmethod
    def from_file(cls, filename):
        """Load a :code:`run.json` record, keeping its config and seed."""
        record = load_json(filename)
        if "config" not in record:
            raise KeyError(f"{filename} has no 'config' entry.")
        return cls(
            config=record["config"],
            subcommand=record.get("subcommand"),
            seed=record.get("seed"),
            n_jobs=record.get("n_jobs"),
        )


def _needs_seed(name, kwargs):
    if name not in STOCHASTIC:
        return False
    return name != "calibrate" or kwargs.get("folds", 20) > 0


def _resolve_paths(config):
    config = copy.deepcopy(config)
    for kwargs in config.values():
        if not isinstance(kwargs, dict):
            continue
        for key in PATH_KEYS:
            if isinstance(kwargs.get(key), str):
                kwargs[key] = str(Path(kwargs[key]).resolve())
        structure = kwargs.get("structure")
        if isinstance(structure, str):
            spec = wrappers._structure_spec(structure)
            if spec.startswith("file:"):
                kwargs["structure"] = "file:" + str(Path(spec[5:]).resolve())
    return config


def run_pipeline(config, output_dir, data=None, extra_funcs=None, strict=False, run=None):
    """Run a full pipeline.

    Parameters
    ----------
    config : str or dict
        Path to yaml file, :code:`str` to convert to :code:`dict`,
        or :code:`dict` containing the config.
    output_dir : str
        Path to output directory.
    data : fusionlasso.config_api.wrappers.Problem, optional
        Problem to analyse.
    extra_funcs : list of functions, optional
        User-defined functions referenced in the config.
    strict : bool, optional
        Re-raise errors from a step. Otherwise they are logged and the
        remaining steps run.
    run : RunConfig, optional
        Provenance record. Created from :code:`config` if not passed.

    Returns
    -------
    results : dict
        Return value of each step.
    """
    if run is None:
        run = RunConfig(config=load_config(config))
    config = copy.deepcopy(run.config)
    _logger.info(
        "Using config:\n {}".format(
            pprint.pformat(config, sort_dicts=False, compact=True)
        )
    )

    Path(output_dir).mkdir(parents=True, exist_ok=True)
    save_json(f"{output_dir}/run.json", run.to_dict())

    # Load data via the config
    load_data_kwargs = config.pop("load_data", None)
    if load_data_kwargs is not None:
        _logger.info(f"load_data: {load_data_kwargs}")
        data = wrappers.load_data(**load_data_kwargs)

    # Loop through each item in the config
    results = {}
    for name, kwargs in config.items():
        kwargs = dict(kwargs or {})
        if "n_jobs" in _parameters(name, extra_funcs):
            kwargs.setdefault("n_jobs", run.n_jobs)
        try:
            func = find_function(name, extra_funcs)
            _logger.info(f"{name}: {kwargs}")
            results[name] = func(data=data, output_dir=output_dir, **kwargs)
        except Exception as e:
            if strict:
                raise
            _logger.exception(e)
    return results


def _parameters(name, extra_funcs):
    try:
        func = find_function(name, extra_funcs)
    except ValueError:
        return []
    return func.__code__.co_varnames[: func.__code__.co_argcount]


def _data_kwargs(args):
    if args.data is None:
        return None
    if args.config is None:
        raise ValueError("--config must be passed with --data.")
    kwargs = {"inputs": args.data, "config": args.config}
    for key in ["formula", "structure", "weights"]:
        if getattr(args, key, None) is not None:
            kwargs[key] = getattr(args, key)
    if getattr(args, "terms", None):
        kwargs["terms"] = args.terms
    if getattr(args, "family", None) is not None and args.subcommand == "sample":
        kwargs["family"] = args.family
    return kwargs


def _lambda_value(value):
    if value == "grid":
        return value
    try:
        value = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("lambda must be a number or 'grid'.")
    return value


def _step_kwargs(args):
    if args.subcommand == "check-propriety":
        return {"structure": args.structure} if args.data is None else {}
    if args.subcommand == "fit-em":
        return {"lam": args.lam, "n_grid": args.grid}
    if args.subcommand == "sample":
        prior = {}
        if args.prior is not None:
            prior = load_config(args.prior)
        if args.lam is not None:
            prior.update({"lambda_mode": "fixed", "lam": args.lam})
        return {
            "seed": args.seed,
            "prior": prior or None,
            "n_chains": args.chains,
            "n_iter": args.iters,
            "burn_in": args.burnin,
            "thin": args.thin,
            "force": args.force,
            "draws_format": args.format,
        }
    if args.subcommand == "calibrate":
        return {
            "n_grid": args.grid,
            "folds": args.folds,
            "seed": args.seed,
            "warm_start": not args.cold_start,
            "draws": args.draws,
        }
    if args.subcommand == "simulate":
        return {
            "seed": args.seed,
            "G": args.G,
            "r": args.r,
            "S": args.S,
            "family": args.family,
            "replicates": args.reps,
            "methods": args.methods,
            "n_grid": args.grid,
            "n_mc": args.mc_draws,
            "n_jobs": args.threads,
        }
    return {
        "draws": args.draws,
        "split": not args.no_split,
        "rhat_threshold": args.rhat_threshold,
        "z_threshold": args.z_threshold,
    }


def build_parser():
    """Command line parser."""
    parser = argparse.ArgumentParser(
        prog="fusionlasso",
        description="Bayesian structured sparsity: fusion structures, EM fits, "
        "Gibbs sampling, calibration and simulation.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=".", help="Output directory.")
    common.add_argument("--threads", type=int, help="Number of worker threads.")
    common.add_argument("--seed", type=int, help="Seed for stochastic steps.")
    common.add_argument("--from-run", help="Reproduce a previous run.json.")
    common.add_argument("--debug", action="store_true", help="Log debug messages.")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="CSV file of records.")
    data.add_argument("--config", help="JSON/YAML column-kind config.")
    data.add_argument("--formula", help="Design formula.")
    data.add_argument(
        "--structure",
        help="agnostic, lattice, priority:<factor>, file:<path> or a JSON graph.",
    )
    data.add_argument("--terms", nargs="+", help="Terms to structure.")
    data.add_argument("--weights", choices=wrappers.WEIGHTS, help="Constraint weights.")

    subparsers.add_parser(
        "check-propriety", parents=[common, data], help="Check prior/posterior propriety."
    )

    fit = subparsers.add_parser("fit-em", parents=[common, data], help="Fit by EM.")
    fit.add_argument("--lambda", dest="lam", type=_lambda_value, default="grid")
    fit.add_argument("--grid", type=int, default=50, help="Number of lambda values.")

    sample = subparsers.add_parser("sample", parents=[common, data], help="Gibbs sampling.")
    sample.add_argument("--family", choices=["linear", "logistic", "multinomial"])
    sample.add_argument("--chains", type=int, default=4)
    sample.add_argument("--iters", type=int, default=10000)
    sample.add_argument("--burnin", type=int, default=5000)
    sample.add_argument("--thin", type=int, default=1)
    sample.add_argument("--prior", help="JSON/YAML prior settings.")
    sample.add_argument("--lambda", dest="lam", type=float, help="Fix lambda.")
    sample.add_argument("--format", choices=["binary", "csv"], default="binary")
    sample.add_argument(
        "--force", action="store_true", help="Sample an unverified posterior."
    )

    cal = subparsers.add_parser("calibrate", parents=[common, data], help="Calibrate lambda.")
    cal.add_argument("--grid", type=int, default=50, help="Number of lambda values.")
    cal.add_argument("--folds", type=int, default=20, help="Cross-validation folds.")
    cal.add_argument("--draws", help="Posterior draws for WAIC.")
    cal.add_argument("--cold-start", action="store_true")

    sim = subparsers.add_parser("simulate", parents=[common], help="Simulation benchmark.")
    sim.add_argument("--G", type=int, default=25, help="Number of units.")
    sim.add_argument("--r", type=int, default=20, help="Records per unit.")
    sim.add_argument("--S", type=int, default=12, help="Units at each of -1 and +1.")
    sim.add_argument("--family", choices=["linear", "binomial"], default="linear")
    sim.add_argument("--reps", type=int, default=100, help="Number of replicates.")
    sim.add_argument("--methods", nargs="+", help="Methods to compare.")
    sim.add_argument("--grid", type=int, default=50, help="Number of lambda values.")
    sim.add_argument("--mc-draws", type=int, default=1000)

    diag = subparsers.add_parser("diagnose", parents=[common], help="MCMC diagnostics.")
    diag.add_argument("--draws", required=False, help="Posterior draws file.")
    diag.add_argument("--no-split", action="store_true")
    diag.add_argument("--rhat-threshold", type=float, default=1.1)
    diag.add_argument("--z-threshold", type=float, default=1.96)

    return parser


def make_run(args):
    """Build the provenance record of a command line invocation.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed arguments.

    Returns
    -------
    run : RunConfig
        Run record.
    """
    if args.from_run is not None:
        return RunConfig.from_file(args.from_run)

    step = SUBCOMMANDS[args.subcommand]
    config = {}
    data_kwargs = _data_kwargs(args) if hasattr(args, "data") else None
    if data_kwargs is not None:
        config["load_data"] = data_kwargs
    elif args.subcommand in ["fit-em", "sample", "calibrate"]:
        raise ValueError(f"{args.subcommand} needs --data and --config.")
    if args.subcommand == "diagnose" and args.draws is None:
        raise ValueError("diagnose needs --draws.")
    if args.subcommand == "check-propriety" and data_kwargs is None and args.structure is None:
        raise ValueError("check-propriety needs --data and --config, or --structure.")

    config[step] = {k: v for k, v in _step_kwargs(args).items() if v is not None}
    return RunConfig(
        config=config,
        subcommand=args.subcommand,
        seed=args.seed,
        n_jobs=args.threads,
    )


def main(argv=None):
    """Run one subcommand.

    Parameters
    ----------
    argv : list of str, optional
        Command line arguments. Default is :code:`sys.argv[1:]`.

    Returns
    -------
    exit_code : int
        0 on success, 2 on invalid input.
    """
    args = build_parser().parse_args(argv)
    if args.debug:
        _logger.setLevel(logging.DEBUG)
    try:
        run = make_run(args)
        run_pipeline(run.config, args.output, strict=True, run=run)
    except EXIT_ERRORS as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"fusionlasso {args.subcommand}: error: {message}", file=sys.stderr)
        return 2
    return 0


def fusionlasso_cli():
    """Command line interface function for running one subcommand."""
    sys.exit(main())
