"""Likelihood families, posterior mode fitting and posterior sampling.

"""

from fusionlasso.models import families
from fusionlasso.models import glm
from fusionlasso.models import em
from fusionlasso.models import gibbs
from fusionlasso.models.em import EmConfig, EmSolution, fit_em
from fusionlasso.models.gibbs import (
    GibbsConfig,
    PosteriorDraws,
    PriorSpec,
    sample_linear,
    sample_logistic,
    sample_multinomial,
)
