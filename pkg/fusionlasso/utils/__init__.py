"""Utility functions.

"""

from fusionlasso.utils import misc
