"""Posterior mode (penalized MLE) fitting by Expectation Maximization.

The structured sparsity penalty is written as a scale mixture of normals,
so the E-step replaces each absolute value :math:`|d_k^T \\beta|` by a
quadratic with weight :math:`E[1/\\tau_k^2] = \\lambda\\sigma/|d_k^T\\beta|`.
For the logistic and multinomial families the likelihood is also augmented
with Polya-Gamma variables and the E-step uses their means. The M-step is a
generalized ridge regression.

Constraints whose value falls below a threshold are treated as binding for
the remaining iterations and the M-step is solved in the nullspace of the
binding rows.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from fusionlasso.array_ops import numerical_rank, orthonormal_nullspace, solve_psd
from fusionlasso.inference import propriety
from fusionlasso.models import families, glm

_logger = logging.getLogger("fusionlasso")

INITS = ["ridge", "zero"]


@dataclass
class EmConfig:
    """Settings for EM fitting.

    Parameters
    ----------
    binding_threshold : float
        A constraint with absolute value below this is treated as binding.
    clip_cap : float
        Cap on the E-step weights during the clipping phase.
    clip_free_after : int
        Number of initial iterations which use clipping instead of binding.
    tol : float
        Tolerance on the relative change in the penalized log-posterior.
    max_iter : int
        Maximum number of EM iterations.
    sigma : float, optional
        Fixed noise standard deviation for the linear family. If
        :code:`None`, sigma is profiled by its conditional mode.
    init : str
        Initialisation: :code:`'ridge'` (ridge-stabilised MLE) or
        :code:`'zero'`.
    """

    binding_threshold: float = 1e-6
    clip_cap: float = 1e6
    clip_free_after: int = 5
    tol: float = 1e-9
    max_iter: int = 5000
    sigma: float = None
    init: str = "ridge"

    def __post_init__(self):
        if self.binding_threshold <= 0:
            raise ValueError("binding_threshold must be positive.")
        if self.clip_cap <= 0:
            raise ValueError("clip_cap must be positive.")
        if self.clip_free_after < 0:
            raise ValueError("clip_free_after must be non-negative.")
        if self.tol <= 0:
            raise ValueError("tol must be positive.")
        if self.max_iter < 1:
            raise ValueError("max_iter must be one or greater.")
        if self.sigma is not None and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive and finite.")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init}.")


@dataclass
class EmSolution:
    """Result of an EM fit.

    Coefficients have shape (p,) for the linear and logistic families and
    (C - 1, p) for the multinomial family (reference category last).
    """

    beta_hat: np.ndarray
    binding_set: list
    groups: np.ndarray
    df: float
    log_posterior_trace: list
    aic: float
    log_lik: float
    iterations: int
    converged: bool
    family: str
    lam: float
    sigma: float = None
    sigma_profiled: bool = False
    binding_changes: list = field(default_factory=list)
    posterior_proper: bool = None
    labels: list = None

    @property
    def n_blocks(self):
        return 1 if self.beta_hat.ndim == 1 else self.beta_hat.shape[0]

    def predict(self, X):
        """Mean response for a design matrix.

        Parameters
        ----------
        X : np.ndarray
            Design matrix. Shape is (N, p).

        Returns
        -------
        mean : np.ndarray
            Fitted values (linear), success probabilities (logistic) or
            category probabilities with shape (N, C) (multinomial).
        """
        family = families.get_family(self.family)
        X = np.asarray(X, dtype=float)
        eta = family.linear_predictor(X, np.atleast_2d(self.beta_hat))
        if family.name == "multinomial":
            return family.mean(eta)
        return family.mean(eta[:, 0])

    def coefficient_table(self, labels=None):
        """Coefficients with their fusion group ids.

        Parameters
        ----------
        labels : list of str, optional
            Coefficient names. Defaults to the labels of the constraint set.

        Returns
        -------
        table : pd.DataFrame
            Columns are :code:`label`, :code:`estimate`, :code:`group` (and
            :code:`category` for the multinomial family).
        """
        labels = labels or self.labels
        beta = np.atleast_2d(self.beta_hat)
        groups = np.atleast_2d(self.groups)
        if labels is None:
            labels = [str(i) for i in range(beta.shape[1])]
        if len(labels) != beta.shape[1]:
            raise ValueError(f"labels must have {beta.shape[1]} entries.")
        frames = []
        for c in range(beta.shape[0]):
            frame = pd.DataFrame(
                {"label": labels, "estimate": beta[c], "group": groups[c]}
            )
            if self.family == "multinomial":
                frame.insert(0, "category", c)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def to_dict(self):
        return {
            "family": self.family,
            "lambda": self.lam,
            "beta_hat": self.beta_hat.tolist(),
            "labels": self.labels,
            "binding_set": self.binding_set,
            "groups": self.groups.tolist(),
            "df": self.df,
            "aic": self.aic,
            "log_lik": self.log_lik,
            "sigma": self.sigma,
            "sigma_profiled": self.sigma_profiled,
            "iterations": self.iterations,
            "converged": self.converged,
            "posterior_proper": self.posterior_proper,
            "log_posterior_trace": list(self.log_posterior_trace),
            "binding_changes": list(self.binding_changes),
        }


def estep_linear(beta, sigma, cset, lam, clip_cap=1e6):
    """E-step weights of the penalty augmentation.

    Parameters
    ----------
    beta : np.ndarray
        Current coefficients. Shape is (p,).
    sigma : float
        Noise standard deviation. Use one for families without a scale.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    lam : float
        Penalty strength.
    clip_cap : float, optional
        Maximum weight. Pass :code:`np.inf` for no clipping.

    Returns
    -------
    linear_weights : np.ndarray
        :code:`E[1/tau_k^2] = lam * sigma / |d_k^T beta|`. Shape is (K,).
    quad_weights : np.ndarray
        :code:`E[1/xi_l^2] = lam * sigma / sqrt(beta^T F_l beta)`.
        Shape is (L,).
    """
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite.")
    scale = lam * sigma
    tiny = np.finfo(float).tiny
    with np.errstate(over="ignore", divide="ignore"):
        linear = scale / np.maximum(np.abs(cset.linear_values(beta)), tiny)
        quad = scale / np.maximum(cset.quad_values(beta), tiny)
    return np.minimum(linear, clip_cap), np.minimum(quad, clip_cap)


def _solve_mstep(X, z, P, W=None, basis=None):
    XtW = X.T if W is None else X.T * W
    A = XtW @ X + P
    b = X.T @ z
    if basis is None:
        return solve_psd(A, b)
    theta, jittered = solve_psd(basis.T @ A @ basis, basis.T @ b)
    return basis @ theta, jittered


def mstep(X, z, P, W=None, basis=None):
    """M-step: solve the generalized ridge system.

    Solves :code:`(X^T W X + P) beta = X^T z`, optionally restricted to
    :code:`beta = B theta` for an orthonormal basis B.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    z : np.ndarray
        Working response. Shape is (N,).
    P : np.ndarray
        Penalty matrix. Shape is (p, p).
    W : np.ndarray, optional
        Observation weights. Shape is (N,). Default is one.
    basis : np.ndarray, optional
        Basis of the feasible subspace. Shape is (p, q).

    Returns
    -------
    beta : np.ndarray
        Solution. Shape is (p,).
    """
    beta, jittered = _solve_mstep(
        np.asarray(X, dtype=float), np.asarray(z, dtype=float), P, W, basis
    )
    if jittered:
        _logger.warning("M-step system is singular, added a 1e-10 ridge jitter")
    return beta


def penalized_log_posterior(X, y, beta, cset, lam, family="linear", sigma=1.0, m=None):
    """Objective monitored by EM.

    For the linear family this is

    .. math::
        -\\frac{N+m}{2}\\log\\sigma^2
        - \\frac{\\|y - X\\beta\\|^2 + \\beta^T R \\beta}{2\\sigma^2}
        - \\frac{\\lambda}{\\sigma}\\mathrm{pen}(\\beta)

    and for the other families it is the log-likelihood minus
    :math:`\\lambda\\,\\mathrm{pen}(\\beta_c) + \\beta_c^T R \\beta_c / 2`
    summed over blocks.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    beta : np.ndarray
        Coefficients. Shape is (p,) or (n_blocks, p).
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    lam : float
        Penalty strength.
    family : str or Family, optional
        Likelihood family.
    sigma : float, optional
        Noise standard deviation (linear family only).
    m : int, optional
        Rank of the prior rows. Computed if not passed.

    Returns
    -------
    objective : float
        Penalized log-posterior (up to a constant).
    """
    family = families.get_family(family)
    X = np.asarray(X, dtype=float)
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    R = cset.ridge_matrix(lam)
    penalty = sum(cset.penalty(b) for b in beta)
    gaussian = sum(float(b @ R @ b) for b in beta)
    if family.has_scale:
        if m is None:
            m = numerical_rank(cset.prior_rows)
        rss = float(np.sum((y - X @ beta[0]) ** 2))
        N = X.shape[0]
        return (
            -0.5 * (N + m) * np.log(sigma**2)
            - (rss + gaussian) / (2 * sigma**2)
            - lam / sigma * penalty
        )
    eta = family.linear_predictor(X, beta)
    log_lik = float(np.sum(family.log_likelihood(eta, y)))
    return log_lik - lam * penalty - 0.5 * gaussian


def _profile_sigma(rss, gaussian, penalty, lam, n_eff):
    """Maximiser of the objective over sigma for fixed beta."""
    A = rss + gaussian
    B = lam * penalty
    s = (B + np.sqrt(B**2 + 4 * n_eff * A)) / (2 * n_eff)
    return max(s, np.sqrt(np.finfo(float).tiny))


def _fusion_groups(cset, binding):
    """Connected components of the binding difference edges."""
    p = cset.n_coefs
    rows, cols = [], []
    for k in binding:
        if k < cset.K:
            edge = cset.edges[k]
            if edge is not None:
                rows.append(edge[0])
                cols.append(edge[1])
        else:
            group = cset.quad_groups[k - cset.K]
            if group is not None:
                rows.extend(group[:-1])
                cols.extend(group[1:])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(p, p))
    _, labels = connected_components(graph, directed=False)
    return labels


def _snap_groups(beta, groups):
    """Replace coefficients fused by binding edges with their group mean."""
    beta = beta.copy()
    for g in np.unique(groups):
        members = groups == g
        if members.sum() > 1:
            beta[members] = beta[members].mean()
    return beta


def fit_em(
    X,
    y,
    cset,
    lam,
    family="linear",
    config=None,
    beta_init=None,
    check=True,
    n_categories=None,
):
    """Fit the posterior mode by EM.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome encoded for the family.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    lam : float
        Penalty strength. Must be positive.
    family : str or Family, optional
        Likelihood family.
    config : EmConfig or dict, optional
        EM settings.
    beta_init : np.ndarray, optional
        Initial coefficients (e.g. a warm start). Overrides
        :code:`config.init`.
    check : bool, optional
        Should we check posterior propriety first? An improper posterior
        only produces a warning.
    n_categories : int, optional
        Number of multinomial categories.

    Returns
    -------
    solution : EmSolution
        Fitted posterior mode.
    """
    family = families.get_family(family)
    if config is None:
        config = EmConfig()
    elif isinstance(config, dict):
        config = EmConfig(**config)
    X = np.asarray(X, dtype=float)
    y = family.validate(y)
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("lam must be positive and finite.")
    if X.ndim != 2 or X.shape[1] != cset.n_coefs:
        raise ValueError(f"X must have shape (N, {cset.n_coefs}), got {X.shape}.")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"y must have {X.shape[0]} entries, got {y.shape[0]}.")
    N, p = X.shape

    proper = None
    if check:
        report = propriety.check_posterior(X, y, cset, family)
        proper = report.posterior_proper
        if proper is False:
            _logger.warning(f"Posterior is improper: {report.details}")

    n_blocks = family.n_blocks(y, n_categories) if family.name == "multinomial" else 1
    m = numerical_rank(cset.prior_rows)
    R = cset.ridge_matrix(lam)

    if beta_init is not None:
        beta = np.array(beta_init, dtype=float).reshape(n_blocks, p)
    elif config.init == "ridge":
        beta = glm.ridge_pilot(X, y, family, n_categories=n_categories)
    else:
        beta = np.zeros((n_blocks, p))

    profile = family.has_scale and config.sigma is None
    if not family.has_scale:
        sigma = 1.0
    elif profile:
        sigma = _profile_sigma(
            float(np.sum((y - X @ beta[0]) ** 2)),
            float(beta[0] @ R @ beta[0]),
            cset.penalty(beta[0]),
            lam,
            N + m,
        )
    else:
        sigma = config.sigma

    binding = [set() for _ in range(n_blocks)]
    bases = [None] * n_blocks
    trace = []
    binding_changes = []
    best = None
    converged = False
    warned_jitter = False
    iteration = 0

    for iteration in range(1, config.max_iter + 1):
        clip_phase = iteration <= config.clip_free_after

        # Absorb constraints which have reached zero
        changed = False
        if not clip_phase:
            for c in range(n_blocks):
                values = cset.constraint_values(beta[c])
                new = set(np.flatnonzero(values < config.binding_threshold).tolist())
                new -= binding[c]
                if new:
                    binding[c] |= new
                    bases[c] = orthonormal_nullspace(
                        cset.constraint_rows(binding[c]), p
                    )
                    beta[c] = bases[c] @ (bases[c].T @ beta[c])
                    changed = True
            if changed:
                binding_changes.append(iteration)
                _logger.debug(
                    f"Iteration {iteration}: "
                    f"{sum(len(b) for b in binding)} binding constraints"
                )

        cap = config.clip_cap if clip_phase else np.inf
        for c in range(n_blocks):
            linear_w, quad_w = estep_linear(beta[c], sigma, cset, lam, clip_cap=cap)
            for k in binding[c]:
                if k < cset.K:
                    linear_w[k] = 0.0
                else:
                    quad_w[k - cset.K] = 0.0
            P = cset.precision(linear_w, quad_w) + R
            if family.has_scale:
                W, z = None, y
            else:
                W, z = family.working(X, y, beta, c)
            beta[c], jittered = _solve_mstep(X, z, P, W, bases[c])
            if jittered and not warned_jitter:
                _logger.warning("M-step system is singular, added a 1e-10 ridge jitter")
                warned_jitter = True

        if not np.all(np.isfinite(beta)):
            raise FloatingPointError(f"EM produced non-finite coefficients at iteration {iteration}.")

        if profile:
            sigma = _profile_sigma(
                float(np.sum((y - X @ beta[0]) ** 2)),
                float(beta[0] @ R @ beta[0]),
                cset.penalty(beta[0]),
                lam,
                N + m,
            )

        objective = penalized_log_posterior(X, y, beta, cset, lam, family, sigma, m)
        trace.append(objective)
        if best is None or objective >= best[0]:
            best = (objective, beta.copy(), sigma, [set(b) for b in binding])

        if not clip_phase and not changed and len(trace) > 1:
            previous = trace[-2]
            if abs(objective - previous) <= config.tol * max(abs(previous), 1.0):
                converged = True
                break

    if converged:
        beta_hat, binding_hat = beta, binding
    else:
        _logger.warning(
            f"EM did not converge in {config.max_iter} iterations, "
            "returning the best iterate"
        )
        _, beta_hat, sigma, binding_hat = best

    groups = np.array([_fusion_groups(cset, b) for b in binding_hat])
    beta_hat = np.array([_snap_groups(b, g) for b, g in zip(beta_hat, groups)])
    df = float(
        sum(p - numerical_rank(cset.constraint_rows(b)) for b in binding_hat)
    )

    eta = family.linear_predictor(X, beta_hat)
    if family.has_scale:
        sigma2_mle = max(float(np.sum((y - eta[:, 0]) ** 2)) / N, np.finfo(float).tiny)
        log_lik = float(np.sum(family.log_likelihood(eta, y, sigma2_mle)))
    else:
        log_lik = float(np.sum(family.log_likelihood(eta, y)))
    aic = -2 * log_lik + 2 * df

    binding_list = [sorted(int(k) for k in b) for b in binding_hat]
    if n_blocks == 1:
        beta_hat, groups, binding_list = beta_hat[0], groups[0], binding_list[0]

    _logger.info(
        f"EM fit ({family.name}, lambda={lam:.4g}): {iteration} iterations, "
        f"df={df:g}, converged={converged}"
    )
    return EmSolution(
        beta_hat=beta_hat,
        binding_set=binding_list,
        groups=groups,
        df=df,
        log_posterior_trace=trace,
        aic=aic,
        log_lik=log_lik,
        iterations=iteration,
        converged=converged,
        family=family.name,
        lam=float(lam),
        sigma=float(sigma) if family.has_scale else None,
        sigma_profiled=profile,
        binding_changes=binding_changes,
        posterior_proper=proper,
        labels=list(cset.labels),
    )
