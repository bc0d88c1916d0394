"""Propriety checks for structured sparsity priors and posteriors.

The prior is proper if and only if :math:`\\bar{D}` has full column rank.
The posterior is proper if (a) the augmented design :math:`[X^T \\bar{D}^T]`
has full rank and (b) the maximally sparse model, i.e. the model with every
constraint binding, has a unique finite MLE. For the linear, logistic and
multinomial families (a) and (b) are jointly necessary and sufficient.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from fusionlasso.array_ops import numerical_rank, orthonormal_nullspace
from fusionlasso.models import families, glm

_logger = logging.getLogger("fusionlasso")

HOLDS = "holds"
FAILS = "fails"
UNDETERMINED = "undetermined"

# Families for which conditions (a) and (b) are necessary and sufficient
_EXACT_FAMILIES = ["linear", "logistic", "multinomial"]


@dataclass
class ProprietyReport:
    """Result of a propriety check.

    Parameters
    ----------
    prior_proper : bool
        Whether the prior is proper.
    rank_Dbar : int
        Numerical rank of D̄.
    n_coefs : int
        Number of coefficients p.
    nullspace_dim : int
        Dimension of the nullspace of D̄.
    condition_a : bool or None
        Whether :code:`[X^T D̄^T]` has full rank. :code:`None` without data.
    condition_b : str or None
        :code:`'holds'`, :code:`'fails'` or :code:`'undetermined'`.
        :code:`None` without data.
    posterior_proper : bool or None
        Overall verdict. :code:`None` if undetermined or without data.
    details : str
        Human readable explanation.
    """

    prior_proper: bool
    rank_Dbar: int
    n_coefs: int
    nullspace_dim: int
    condition_a: bool = None
    condition_b: str = None
    posterior_proper: bool = None
    details: str = ""

    def to_dict(self):
        return asdict(self)


def nullspace_basis(cset):
    """Orthonormal basis of the nullspace of D̄.

    Parameters
    ----------
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.

    Returns
    -------
    basis : np.ndarray
        Shape is (p, p - rank(D̄)). The identity if D̄ is empty.
    """
    return orthonormal_nullspace(cset.prior_rows, cset.n_coefs)


def check_prior(cset):
    """Whether the structured sparsity prior is proper.

    Parameters
    ----------
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.

    Returns
    -------
    proper : bool
        :code:`True` if and only if D̄ has full column rank.
    """
    return numerical_rank(cset.prior_rows) == cset.n_coefs


def check_posterior(X, y, cset, family):
    """Check posterior propriety.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    family : str
        Likelihood family.

    Returns
    -------
    report : ProprietyReport
        Propriety report.
    """
    report = prior_report(cset)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cset.n_coefs:
        raise ValueError(
            f"X must have shape (N, {cset.n_coefs}), got {X.shape}."
        )
    family = families.get_family(family)
    y = family.validate(y)
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"y must have {X.shape[0]} entries, got {y.shape[0]}.")

    p = cset.n_coefs
    details = [report.details]

    # Condition (a): augmented design is full rank
    rank_aug = numerical_rank(np.vstack([X, cset.prior_rows]))
    report.condition_a = rank_aug == p
    details.append(f"rank([X^T Dbar^T]) = {rank_aug} of {p}.")

    # Condition (b): unique finite MLE of the maximally sparse model
    B = nullspace_basis(cset)
    if B.shape[1] == 0:
        report.condition_b = HOLDS
        details.append("Maximally sparse model has no free parameters.")
    else:
        XB = X @ B
        rank_reduced = numerical_rank(XB)
        if rank_reduced < B.shape[1]:
            report.condition_b = FAILS
            details.append(
                f"Reduced design X B has rank {rank_reduced} of {B.shape[1]}."
            )
        elif family.name == "linear":
            report.condition_b = HOLDS
            details.append(f"Reduced design X B has full rank {B.shape[1]}.")
        else:
            fit = glm.fit_mle(XB, y, family)
            if fit.diverged:
                report.condition_b = FAILS
                details.append(
                    "MLE of the maximally sparse model diverges (separated data)."
                )
            elif fit.converged:
                report.condition_b = HOLDS
                details.append("MLE of the maximally sparse model is finite.")
            else:
                report.condition_b = UNDETERMINED
                details.append(
                    "Newton iterations on the maximally sparse model neither "
                    "converged nor diverged."
                )

    if not report.condition_a:
        report.posterior_proper = False
    elif report.condition_b == HOLDS:
        report.posterior_proper = True
    elif report.condition_b == FAILS and family.name in _EXACT_FAMILIES:
        report.posterior_proper = False
    else:
        report.posterior_proper = None

    report.details = " ".join(details)
    _logger.info(
        f"Posterior propriety: condition (a) {report.condition_a}, "
        f"condition (b) {report.condition_b}"
    )
    return report


def prior_report(cset):
    """Propriety report for the prior only.

    Parameters
    ----------
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.

    Returns
    -------
    report : ProprietyReport
        Report with the data conditions left empty.
    """
    rank = numerical_rank(cset.prior_rows)
    p = cset.n_coefs
    proper = rank == p
    details = f"rank(Dbar) = {rank} of {p}; prior is {'proper' if proper else 'improper'}."
    return ProprietyReport(
        prior_proper=proper,
        rank_Dbar=rank,
        n_coefs=p,
        nullspace_dim=p - rank,
        details=details,
    )
