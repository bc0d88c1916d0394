"""Classes and functions used to handle data.

"""

from fusionlasso.data.base import Dataset
from fusionlasso.data.design import Cell, DesignMatrix, expand_design, parse_formula

__all__ = ["Dataset", "Cell", "DesignMatrix", "expand_design", "parse_formula"]
