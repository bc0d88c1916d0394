"""Simulations of grouped heterogeneous treatment effects.

"""

from fusionlasso.simulation.base import Simulation
from fusionlasso.simulation.hte import (
    GroupedHeterogeneity,
    SimulationSpec,
    generate,
    unit_effects,
)
from fusionlasso.simulation.benchmark import (
    METHODS,
    FittedMethod,
    SimResult,
    fit_method,
    mc_treatment_effects,
    run_benchmark,
)
