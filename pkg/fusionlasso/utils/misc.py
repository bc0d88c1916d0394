"""Miscellaneous utility classes and functions.

"""

import json
import logging
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

_logger = logging.getLogger("fusionlasso")


def leading_zeros(number, largest_number):
    """Pad a number with leading zeros.

    This is useful for creating level names that sort in numeric order.

    Parameters
    ----------
    number : int
        Number to be padded.
    largest_number : int
        Largest number in the set.

    Returns
    -------
    padded_number : str
        Number padded with leading zeros.
    """
    min_length = len(str(largest_number))
    padded_number = str(number).zfill(min_length)
    return padded_number


def override_dict_defaults(default_dict, override_dict=None):
    """Helper function to update default dictionary values with user values.

    Parameters
    ----------
    default_dict : dict
        Dictionary of default values.
    override_dict : dict, optional
        Dictionary of user values.

    Returns
    -------
    new_dict : dict
        default_dict with values replaced by user values.
    """
    if override_dict is None:
        override_dict = {}
    return {**default_dict, **override_dict}


def get_n_jobs(n_jobs=None):
    """Number of worker threads to use.

    Parameters
    ----------
    n_jobs : int, optional
        Requested number of workers. If :code:`None`, the
        :code:`FUSIONLASSO_THREADS` environment variable is used and
        otherwise the number of logical cores.

    Returns
    -------
    n_jobs : int
        Number of workers, at least one.
    """
    if n_jobs is None:
        n_jobs = os.environ.get("FUSIONLASSO_THREADS")
    if n_jobs is None:
        n_jobs = os.cpu_count() or 1
    n_jobs = int(n_jobs)
    if n_jobs < 1:
        raise ValueError("n_jobs must be one or greater.")
    return n_jobs


def get_seed(seed=None):
    """Seed for a stochastic run.

    Parameters
    ----------
    seed : int, optional
        Requested seed. If :code:`None`, the :code:`FUSIONLASSO_SEED`
        environment variable is used.

    Returns
    -------
    seed : int or None
        Seed. :code:`None` if neither is set.
    """
    if seed is None:
        seed = os.environ.get("FUSIONLASSO_SEED")
    if seed is None:
        return None
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer.")
    return seed


def parallel_map(func, kwargs_list, n_jobs=1, desc=None):
    """Apply a function to a list of keyword argument dicts.

    Parameters
    ----------
    func : callable
        Function to call.
    kwargs_list : list of dict
        Keyword arguments for each call.
    n_jobs : int, optional
        Number of threads. If one, the calls are made in serial.
    desc : str, optional
        Progress bar description.

    Returns
    -------
    results : list
        Result of each call in the order of :code:`kwargs_list`. Calls which
        raised are returned as the exception object.
    """
    if n_jobs == 1 or len(kwargs_list) <= 1:
        from tqdm.auto import tqdm

        results = []
        for kwargs in tqdm(kwargs_list, desc=desc, disable=desc is None):
            try:
                results.append(func(**kwargs))
            except Exception as e:
                results.append(e)
        return results

    from pqdm.threads import pqdm

    return pqdm(
        kwargs_list,
        func,
        argument_type="kwargs",
        n_jobs=n_jobs,
        # pqdm concatenates desc into its own labels, so it cannot be None
        **({"desc": desc} if desc is not None else {}),
        disable=desc is None,
    )


@contextmanager
def set_logging_level(logger, level):
    """Raise the level of a logger inside a with block.

    The level is never lowered: if the logger is already at :code:`level`
    or above (e.g. inside an outer :code:`set_logging_level`) nothing is
    changed. Saving and restoring the level is not reentrant across
    threads, so wrap a thread pool once from the calling thread rather
    than calling this from each worker with different levels.

    Parameters
    ----------
    logger : logging.Logger
        Logger to quieten.
    level : int
        Minimum level to log inside the block.
    """
    if logger.getEffectiveLevel() >= level:
        yield
        return
    current_level = logger.level
    logger.setLevel(level)
    try:
        yield
    finally:
        logger.setLevel(current_level)


class NumpyEncoder(json.JSONEncoder):
    """JSON encoder which understands NumPy scalars and arrays."""

    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Path):
            return str(obj)
        return super().default(obj)


def save_json(filename, obj):
    """Save an object as JSON.

    Parameters
    ----------
    filename : str
        Path to file to save to.
    obj : dict or list
        Object to save.
    """
    _logger.info(f"Saving {filename}")
    Path(filename).parent.mkdir(parents=True, exist_ok=True)
    with open(filename, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=False, cls=NumpyEncoder)
        f.write("\n")


def load_json(filename):
    """Load a JSON file.

    Parameters
    ----------
    filename : str
        Path to file to load.

    Returns
    -------
    obj : dict or list
        Loaded object.
    """
    _logger.info(f"Loading {filename}")
    with open(filename, "r") as f:
        return json.load(f)
