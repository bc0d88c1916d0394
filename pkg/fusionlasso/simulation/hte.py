"""Grouped heterogeneous treatment effects.

Records belong to G units with r records each. Within each unit half of the
records are treated. The outcome is

.. math::
    y_i = x_i + \\tau_{g[i]} d_i + \\epsilon_i

with standard normal :math:`x_i` and :math:`\\epsilon_i` (linear family), or
:math:`y_i \\sim \\mathrm{Bernoulli}(\\sigma(x_i + \\tau_{g[i]} d_i))`
(binomial family). S units have effect -1, S units have effect +1 and the
remaining G - 2S units have no effect.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from scipy.special import expit

from fusionlasso.data import Dataset
from fusionlasso.simulation.base import Simulation
from fusionlasso.utils.misc import get_seed, leading_zeros

_logger = logging.getLogger("fusionlasso")

SIM_FAMILIES = {"linear": "linear", "binomial": "logistic"}


@dataclass
class SimulationSpec:
    """Settings for the grouped heterogeneity simulation.

    Parameters
    ----------
    G : int
        Number of units.
    r : int
        Records per unit.
    S : int
        Number of units with effect -1 (and with effect +1).
    family : str
        :code:`'linear'` or :code:`'binomial'`.
    seed : int, optional
        Master seed.
    replicates : int
        Number of benchmark replicates.
    """

    G: int = 25
    r: int = 20
    S: int = 12
    family: str = "linear"
    seed: int = None
    replicates: int = 100

    def __post_init__(self):
        if self.G < 2:
            raise ValueError("G must be two or greater.")
        if self.r < 2:
            raise ValueError("r must be two or greater.")
        if self.S < 0 or 2 * self.S > self.G:
            raise ValueError("S must satisfy 0 <= 2 * S <= G.")
        if self.family not in SIM_FAMILIES:
            raise ValueError(f"family must be one of {list(SIM_FAMILIES)}, got {self.family}.")
        if self.replicates < 1:
            raise ValueError("replicates must be one or greater.")
        self.seed = get_seed(self.seed)

    @property
    def N(self):
        return self.G * self.r

    @property
    def model_family(self):
        return SIM_FAMILIES[self.family]

    def unit_labels(self):
        return [f"u{leading_zeros(g + 1, self.G)}" for g in range(self.G)]

    def to_dict(self):
        return asdict(self)


def unit_effects(G, S):
    """True treatment effect of each unit.

    Parameters
    ----------
    G : int
        Number of units.
    S : int
        Number of units at each of -1 and +1.

    Returns
    -------
    tau : np.ndarray
        S copies of -1, G - 2S zeros and S copies of +1. Shape is (G,).
    """
    if S < 0 or 2 * S > G:
        raise ValueError("S must satisfy 0 <= 2 * S <= G.")
    return np.concatenate([-np.ones(S), np.zeros(G - 2 * S), np.ones(S)])


class GroupedHeterogeneity(Simulation):
    """Simulated records with grouped unit-level treatment effects.

    Parameters
    ----------
    spec : SimulationSpec
        Simulation settings.
    """

    def __init__(self, spec):
        super().__init__(n_samples=spec.N)
        self.spec = spec
        self.effects = unit_effects(spec.G, spec.S)
        self.units = spec.unit_labels()

    def simulate_data(self, rng):
        """Generate the records.

        Parameters
        ----------
        rng : np.random.Generator
            Random number generator.

        Returns
        -------
        frame : pd.DataFrame
            Columns are :code:`unit`, :code:`treated`, :code:`x` and
            :code:`y`.
        """
        G, r = self.spec.G, self.spec.r
        unit = np.repeat(np.arange(G), r)
        treated = np.concatenate([rng.permutation(np.arange(r) < r // 2) for _ in range(G)])
        treated = treated.astype(int)
        x = rng.standard_normal(G * r)
        eta = x + self.effects[unit] * treated
        if self.spec.family == "linear":
            y = eta + rng.standard_normal(G * r)
        else:
            y = (rng.random(G * r) < expit(eta)).astype(int)

        self.frame = pd.DataFrame(
            {
                "unit": [self.units[g] for g in unit],
                "treated": treated,
                "x": x,
                "y": y,
            }
        )
        return self.frame

    def columns_config(self):
        """Column kinds of the simulated records."""
        return {
            "unit": {"kind": "categorical", "levels": self.units},
            "treated": "numeric",
            "x": "numeric",
            "y": "numeric" if self.spec.family == "linear" else "binary",
        }

    def dataset(self):
        """Simulated records as a Dataset."""
        return Dataset(
            self.frame,
            columns=self.columns_config(),
            outcome="y",
            family=self.spec.model_family,
        )


def generate(spec, rng=None):
    """Simulate one dataset.

    Parameters
    ----------
    spec : SimulationSpec
        Simulation settings.
    rng : np.random.Generator or int, optional
        Random number generator or seed. Defaults to :code:`spec.seed`.

    Returns
    -------
    sim : GroupedHeterogeneity
        Simulation with :code:`frame`, :code:`effects` and
        :code:`dataset()`.
    """
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(spec.seed if rng is None else rng)
    sim = GroupedHeterogeneity(spec)
    sim.simulate_data(rng)
    _logger.debug(f"Simulated {spec.N} records over {spec.G} units")
    return sim
