"""Functions to read and write data and posterior draws.

"""

import json
import logging
import struct
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

_logger = logging.getLogger("fusionlasso")

_HEADER_FORMAT = "<Q"
_MAGIC = "fusionlasso-draws"


def load_csv(filename):
    """Load a CSV file with a header row.

    Parameters
    ----------
    filename : str
        Path to a UTF-8, comma separated file.

    Returns
    -------
    df : pd.DataFrame
        Loaded table.
    """
    path = Path(filename)
    if not path.exists():
        raise FileNotFoundError(f"{filename} not found.")
    _logger.info(f"Loading {filename}")
    df = pd.read_csv(path, encoding="utf-8", sep=",")
    if len(df) == 0:
        raise ValueError(f"{filename} contains no rows.")
    return df


def load_sidecar(config):
    """Load a column-kind config.

    Parameters
    ----------
    config : str or dict
        Path to a JSON/YAML file or a dict.

    Returns
    -------
    config : dict
        Column-kind config.
    """
    if isinstance(config, dict):
        return config
    path = Path(config)
    if not path.exists():
        raise FileNotFoundError(f"{config} not found.")
    _logger.info(f"Loading {config}")
    with open(path, "r") as f:
        config = yaml.safe_load(f)
    if not isinstance(config, dict):
        raise ValueError(f"{path} must contain a mapping.")
    return config


def save_draws_csv(filename, draws):
    """Save posterior draws as CSV.

    One row per kept draw with :code:`chain` and :code:`draw` columns
    followed by one column per parameter.

    Parameters
    ----------
    filename : str
        Path to save to.
    draws : fusionlasso.models.gibbs.PosteriorDraws
        Draws to save.
    """
    _logger.info(f"Saving {filename}")
    draws.to_frame().to_csv(filename, index=False, float_format="%.17g")


def save_draws_binary(filename, draws):
    """Save posterior draws in the length-prefixed binary format.

    The file holds an 8 byte little-endian header length, a UTF-8 JSON
    header and a little-endian float64 payload with each chain's
    (n_draws, n_params) block in chain order.

    Parameters
    ----------
    filename : str
        Path to save to.
    draws : fusionlasso.models.gibbs.PosteriorDraws
        Draws to save.
    """
    header = draws.header()
    header["format"] = _MAGIC
    blocks = [draws.chain_matrix(i) for i in range(draws.n_chains)]
    header["shapes"] = [list(block.shape) for block in blocks]
    encoded = json.dumps(header).encode("utf-8")

    _logger.info(f"Saving {filename}")
    with open(filename, "wb") as f:
        f.write(struct.pack(_HEADER_FORMAT, len(encoded)))
        f.write(encoded)
        for block in blocks:
            f.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_draws_binary(filename):
    """Load posterior draws saved with :code:`save_draws_binary`.

    Parameters
    ----------
    filename : str
        Path to file.

    Returns
    -------
    header : dict
        JSON header.
    blocks : list of np.ndarray
        One (n_draws, n_params) array per chain.
    """
    path = Path(filename)
    if not path.exists():
        raise FileNotFoundError(f"{filename} not found.")
    _logger.info(f"Loading {filename}")
    with open(path, "rb") as f:
        (length,) = struct.unpack(_HEADER_FORMAT, f.read(8))
        header = json.loads(f.read(length).decode("utf-8"))
        if header.get("format") != _MAGIC:
            raise ValueError(f"{filename} is not a draws file.")
        blocks = []
        for shape in header["shapes"]:
            n = int(np.prod(shape))
            buffer = f.read(8 * n)
            if len(buffer) != 8 * n:
                raise ValueError(f"{filename} is truncated.")
            blocks.append(np.frombuffer(buffer, dtype="<f8").reshape(shape).copy())
    return header, blocks
