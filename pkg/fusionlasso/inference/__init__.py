"""Propriety checks, random variate generators and metrics.

"""

from fusionlasso.inference import samplers
from fusionlasso.inference import propriety
from fusionlasso.inference import metrics
