"""Penalty constraint sets compiled from fusion graphs.

The structured sparsity penalty is

.. math::
    \\lambda \\left( \\sum_k |d_k^T \\beta| +
    \\sum_\\ell \\sqrt{\\beta^T F_\\ell \\beta} \\right)

where each :math:`d_k` is a weighted difference row and each :math:`F_\\ell`
is a positive semi-definite matrix. :math:`\\bar{D}` stacks the rows of
:math:`D` and all :math:`F_\\ell`.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from fusionlasso.array_ops import check_psd, numerical_rank

_logger = logging.getLogger("fusionlasso")

GAP_FLOOR = 1e-8
WEIGHT_CAP = 1e8


@dataclass
class ConstraintSet:
    """Linear rows and quadratic matrices defining a penalty.

    Parameters
    ----------
    n_coefs : int
        Number of coefficients p.
    D : np.ndarray
        Weighted linear rows. Shape is (K, p).
    weights : np.ndarray
        Weight of each linear row. Shape is (K,).
    edges : list
        Coefficient pair of each difference row, or :code:`None` for
        user-supplied rows. A row with an edge (i, j) must be :code:`+w` at i,
        :code:`-w` at j and zero elsewhere, where w is its weight.
    quad_mats : list of np.ndarray
        Symmetric PSD matrices F. Each has shape (p, p).
    quad_groups : list
        Coefficient indices of each F (or :code:`None` if user-supplied).
    ridge : np.ndarray, optional
        Fixed Gaussian penalty matrix. Shape is (p, p).
    ridge_scales_with_lambda : bool, optional
        Whether the ridge penalty is multiplied by lambda when fitting.
    labels : list of str, optional
        Coefficient names.
    """

    n_coefs: int
    D: np.ndarray
    weights: np.ndarray
    edges: list
    quad_mats: list = field(default_factory=list)
    quad_groups: list = field(default_factory=list)
    ridge: np.ndarray = None
    ridge_scales_with_lambda: bool = False
    labels: list = None

    def __post_init__(self):
        self.D = np.asarray(self.D, dtype=float).reshape(-1, self.n_coefs)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        self.quad_mats = [np.asarray(F, dtype=float) for F in self.quad_mats]
        if len(self.quad_groups) != len(self.quad_mats):
            self.quad_groups = [None] * len(self.quad_mats)
        if self.labels is None:
            self.labels = [str(i) for i in range(self.n_coefs)]
        self.validate()

    def validate(self):
        if self.weights.shape[0] != self.D.shape[0] or len(self.edges) != self.D.shape[0]:
            raise ValueError("D, weights and edges must have one entry per row.")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be strictly positive.")
        if not np.all(np.isfinite(self.D)):
            raise ValueError("D must be finite.")
        for k, edge in enumerate(self.edges):
            if edge is not None:
                self._check_difference_row(k, edge)
        for F in self.quad_mats:
            if F.shape != (self.n_coefs, self.n_coefs):
                raise ValueError(f"quad_mats must have shape ({self.n_coefs}, {self.n_coefs}).")
            if not check_psd(F):
                raise ValueError("quad_mats must be symmetric positive semi-definite.")
        if self.ridge is not None:
            self.ridge = np.asarray(self.ridge, dtype=float)
            if self.ridge.shape != (self.n_coefs, self.n_coefs) or not check_psd(self.ridge):
                raise ValueError("ridge must be a (p, p) symmetric PSD matrix.")

    def _check_difference_row(self, k, edge):
        i, j = edge
        if i == j:
            raise ValueError(f"edge {k} joins coefficient {i} to itself.")
        expected = np.zeros(self.n_coefs)
        expected[i] = self.weights[k]
        expected[j] = -self.weights[k]
        if not np.allclose(self.D[k], expected, rtol=1e-10, atol=0):
            raise ValueError(
                f"row {k} must be a weighted difference of coefficients {i} and {j}."
            )

    @classmethod
    def from_rows(cls, rows, quad_mats=None, labels=None):
        """Constraint set from user-supplied rows.

        Rows are not restricted to differences: any linear contrast of
        the coefficients may be penalised. Such rows have no edge, so they
        never join fusion groups and are not size-normalised.

        Parameters
        ----------
        rows : np.ndarray
            Linear rows. Shape is (K, p).
        quad_mats : list of np.ndarray, optional
            PSD matrices.
        labels : list of str, optional
            Coefficient names.

        Returns
        -------
        cset : ConstraintSet
            Constraint set with unit weights.
        """
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        quad_mats = [] if quad_mats is None else list(quad_mats)
        return cls(
            n_coefs=rows.shape[1],
            D=rows,
            weights=np.ones(rows.shape[0]),
            edges=[None] * rows.shape[0],
            quad_mats=quad_mats,
            labels=labels,
        )

    @property
    def K(self):
        return self.D.shape[0]

    @property
    def L(self):
        return len(self.quad_mats)

    @property
    def n_constraints(self):
        return self.K + self.L

    @property
    def Dbar(self):
        """Vertical stack of D and all F. Shape is (K + L * p, p)."""
        return np.vstack([self.D] + self.quad_mats) if self.n_constraints else np.empty(
            (0, self.n_coefs)
        )

    @property
    def prior_rows(self):
        """Rows of every prior penalty term, including the ridge."""
        if self.ridge is None:
            return self.Dbar
        return np.vstack([self.Dbar, self.ridge])

    def rank(self):
        """Numerical rank of D̄."""
        return numerical_rank(self.Dbar)

    def directions(self):
        """Linear rows divided by their weights."""
        return self.D / self.weights[:, None]

    def linear_values(self, beta):
        """:code:`d_k^T beta` for each linear row."""
        return self.D @ beta

    def quad_values(self, beta):
        """:code:`sqrt(beta^T F beta)` for each quadratic matrix."""
        return np.array(
            [np.sqrt(max(beta @ F @ beta, 0.0)) for F in self.quad_mats], dtype=float
        )

    def constraint_values(self, beta):
        """Absolute value of every constraint (linear then quadratic)."""
        return np.concatenate([np.abs(self.linear_values(beta)), self.quad_values(beta)])

    def penalty(self, beta):
        """Unscaled penalty :code:`sum |d_k^T beta| + sum sqrt(beta^T F beta)`."""
        return float(np.sum(self.constraint_values(beta)))

    def precision(self, linear_scales, quad_scales):
        """Penalty matrix :code:`sum_k s_k d_k d_k^T + sum_l t_l F_l`.

        Parameters
        ----------
        linear_scales : np.ndarray
            Scale for each linear row. Shape is (K,).
        quad_scales : np.ndarray
            Scale for each quadratic matrix. Shape is (L,).

        Returns
        -------
        P : np.ndarray
            Shape is (p, p).
        """
        P = (self.D.T * linear_scales) @ self.D
        for F, t in zip(self.quad_mats, quad_scales):
            P = P + t * F
        return P

    def ridge_matrix(self, lam=1.0):
        """Ridge penalty matrix at a given lambda (zeros if there is no ridge)."""
        if self.ridge is None:
            return np.zeros((self.n_coefs, self.n_coefs))
        return self.ridge * (lam if self.ridge_scales_with_lambda else 1.0)

    def constraint_rows(self, indices):
        """Rows of D̄ for a set of constraints.

        Parameters
        ----------
        indices : list of int
            Constraint indices. Indices below K select linear rows, index
            :code:`K + l` selects all rows of :code:`F_l`.

        Returns
        -------
        rows : np.ndarray
            Shape is (n_rows, p).
        """
        rows = [np.zeros((0, self.n_coefs))]
        for k in sorted(indices):
            if k < self.K:
                rows.append(self.D[k : k + 1])
            else:
                rows.append(self.quad_mats[k - self.K])
        return np.vstack(rows)

    def with_weights(self, weights):
        """Copy with the linear rows reweighted.

        Parameters
        ----------
        weights : np.ndarray
            New positive weight for each linear row. Shape is (K,).

        Returns
        -------
        cset : ConstraintSet
            Reweighted constraint set.
        """
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape[0] != self.K:
            raise ValueError("weights must have one entry per linear row.")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be strictly positive.")
        D = self.directions() * weights[:, None]
        return ConstraintSet(
            self.n_coefs,
            D,
            weights,
            list(self.edges),
            list(self.quad_mats),
            list(self.quad_groups),
            self.ridge,
            self.ridge_scales_with_lambda,
            self.labels,
        )

    def with_ridge(self, ridge, scales_with_lambda=False):
        """Copy with a Gaussian (ridge) penalty matrix."""
        return ConstraintSet(
            self.n_coefs,
            self.D,
            self.weights,
            list(self.edges),
            list(self.quad_mats),
            list(self.quad_groups),
            ridge,
            scales_with_lambda,
            self.labels,
        )

    def to_dict(self):
        return {
            "n_coefs": self.n_coefs,
            "labels": self.labels,
            "K": self.K,
            "L": self.L,
            "rank_Dbar": self.rank(),
            "edges": [
                None if e is None else [int(e[0]), int(e[1])] for e in self.edges
            ],
            "weights": self.weights.tolist(),
            "quad_groups": [None if g is None else list(g) for g in self.quad_groups],
        }


def compile_constraints(graph):
    """Compile a fusion graph into a constraint set.

    Each edge (i, j) with weight w becomes a row with +w at i and -w at j.
    Each quadratic group becomes the Gram matrix of all pairwise difference
    rows within the group.

    Parameters
    ----------
    graph : fusionlasso.structure.StructureGraph
        Fusion graph.

    Returns
    -------
    cset : ConstraintSet
        Compiled constraints.
    """
    p = graph.n_coefs
    D = np.zeros((graph.n_edges, p))
    for k, ((i, j), w) in enumerate(zip(graph.edges, graph.weights)):
        D[k, i] = w
        D[k, j] = -w

    quad_mats = []
    for group in graph.quad_groups:
        Q = np.zeros((p, len(group) * (len(group) - 1) // 2))
        col = 0
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                Q[group[a], col] = 1.0
                Q[group[b], col] = -1.0
                col += 1
        quad_mats.append(Q @ Q.T)

    return ConstraintSet(
        n_coefs=p,
        D=D,
        weights=np.array(graph.weights, dtype=float),
        edges=list(graph.edges),
        quad_mats=quad_mats,
        quad_groups=list(graph.quad_groups),
        labels=list(graph.labels),
    )


def size_weights(cset, X):
    """Gertheiss-Tutz size normalisation of difference rows.

    The weight of the row fusing columns i and j is
    :code:`sqrt((n_i + n_j) / N)` where :code:`n_i` is the number of
    observations with a nonzero entry in column i. User-supplied rows keep
    their weight.

    Parameters
    ----------
    cset : ConstraintSet
        Constraint set.
    X : np.ndarray
        Design matrix. Shape is (N, p).

    Returns
    -------
    cset : ConstraintSet
        Reweighted constraint set.
    """
    X = np.asarray(X)
    if X.shape[1] != cset.n_coefs:
        raise ValueError(f"X must have {cset.n_coefs} columns.")
    N = X.shape[0]
    counts = np.count_nonzero(X, axis=0)
    weights = cset.weights.copy()
    for k, edge in enumerate(cset.edges):
        if edge is not None:
            i, j = edge
            weights[k] = np.sqrt((counts[i] + counts[j]) / N)
    if np.any(weights <= 0):
        raise ValueError("a fused column has no nonzero observations.")
    return cset.with_weights(weights)


def adaptive_weights(cset, beta_pilot, gamma, base=None):
    """Adaptive reweighting of the linear rows.

    Each weight is multiplied by :code:`(base_k / gap_k) ** gamma` where
    :code:`gap_k` is the absolute pilot difference along the row (floored at
    1e-8). Resulting weights are capped at 1e8.

    Parameters
    ----------
    cset : ConstraintSet
        Constraint set.
    beta_pilot : np.ndarray
        Pilot estimate. Shape is (p,).
    gamma : float
        Exponent, non-negative. Zero leaves the weights unchanged.
    base : np.ndarray, optional
        Base weight for each row. Default is one.

    Returns
    -------
    cset : ConstraintSet
        Reweighted constraint set.
    """
    beta_pilot = np.asarray(beta_pilot, dtype=float).reshape(-1)
    if beta_pilot.shape[0] != cset.n_coefs:
        raise ValueError(f"beta_pilot must have {cset.n_coefs} entries.")
    if not np.all(np.isfinite(beta_pilot)):
        raise ValueError("beta_pilot must be finite.")
    if gamma < 0:
        raise ValueError("gamma must be non-negative.")
    if gamma == 0 or cset.K == 0:
        return cset
    base = np.ones(cset.K) if base is None else np.asarray(base, dtype=float)

    gaps = np.maximum(np.abs(cset.directions() @ beta_pilot), GAP_FLOOR)
    weights = np.minimum(cset.weights * (base / gaps) ** gamma, WEIGHT_CAP)
    n_capped = int(np.sum(weights >= WEIGHT_CAP))
    if n_capped:
        _logger.warning(f"{n_capped} adaptive weights capped at {WEIGHT_CAP:g}")
    return cset.with_weights(weights)
