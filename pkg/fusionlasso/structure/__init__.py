"""Fusion graphs and the penalty constraint sets compiled from them.

"""

from fusionlasso.structure.graph import (
    StructureGraph,
    build_agnostic,
    build_lattice,
    build_priority,
    build_structure,
)
from fusionlasso.structure.constraints import (
    ConstraintSet,
    adaptive_weights,
    compile_constraints,
    size_weights,
)
