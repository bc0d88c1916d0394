"""Calibration of lambda, model scoring and convergence diagnostics.

"""

from fusionlasso.analysis import calibrate
from fusionlasso.analysis import diagnostics
