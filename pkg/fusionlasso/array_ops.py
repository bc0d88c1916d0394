"""Helper functions for manipulating `NumPy \
<https://numpy.org/doc/stable/user/index.html>`_ arrays.

"""

import logging

import numpy as np
from scipy import linalg

_logger = logging.getLogger("fusionlasso")


def get_one_hot(values, n_states=None):
    """Expand a categorical variable to a series of indicator columns
    (one-hot encoding).

    +----------------------+
    | Categorical Variable |
    +======================+
    |           A          |
    +----------------------+
    |           C          |
    +----------------------+
    |           B          |
    +----------------------+

    becomes

    +---+---+---+
    | A | B | C |
    +===+===+===+
    | 1 | 0 | 0 |
    +---+---+---+
    | 0 | 0 | 1 |
    +---+---+---+
    | 0 | 1 | 0 |
    +---+---+---+

    Parameters
    ----------
    values : np.ndarray
        1D array of integer codes (0, 1, ..., :code:`n_states` - 1).
    n_states : int, optional
        Total number of states. Must be at least the number of states present
        in :code:`values`. Default is :code:`values.max() + 1`.

    Returns
    -------
    one_hot : np.ndarray
        A 2D array containing the one-hot encoded form of :code:`values`.
        Shape is (n_samples, n_states).
    """
    values = np.asarray(values, dtype=int).reshape(-1)
    if n_states is None:
        n_states = values.max() + 1
    if values.size > 0 and (values.min() < 0 or values.max() >= n_states):
        raise ValueError("values must be in [0, n_states).")
    return np.eye(n_states)[values]


def numerical_rank(matrix):
    """Numerical rank of a matrix.

    Parameters
    ----------
    matrix : np.ndarray
        2D array. An array with no rows has rank zero.

    Returns
    -------
    rank : int
        Number of singular values above
        :code:`max(matrix.shape) * eps * largest singular value`.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0
    s = linalg.svd(matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(matrix.shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def orthonormal_nullspace(matrix, n_cols=None):
    """Orthonormal basis for the nullspace of a matrix.

    Parameters
    ----------
    matrix : np.ndarray
        2D array with shape (n_rows, n_cols). May have zero rows.
    n_cols : int, optional
        Number of columns. Needed when :code:`matrix` has no rows.

    Returns
    -------
    basis : np.ndarray
        Shape is (n_cols, n_cols - rank). Columns are orthonormal.
    """
    matrix = np.asarray(matrix, dtype=float)
    if n_cols is None:
        n_cols = matrix.shape[-1]
    matrix = matrix.reshape(-1, n_cols)
    if matrix.shape[0] == 0 or not np.any(matrix):
        return np.eye(n_cols)
    # scipy uses the same max(dims) * eps * sigma_max rule
    return linalg.null_space(matrix)


def check_symmetry(mat, precision=1e-10):
    """Checks if a matrix is symmetric.

    Parameters
    ----------
    mat : np.ndarray
        Matrix to be checked. Shape should be (N, N).
    precision : float, optional
        Relative tolerance (scaled by the largest absolute entry).

    Returns
    -------
    symmetry : bool
        Whether the matrix is symmetric.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("Input matrix must be an array with shape (N, N).")
    scale = max(np.abs(mat).max(), 1.0) if mat.size else 1.0
    return bool(np.allclose(mat, mat.T, rtol=0, atol=precision * scale))


def check_psd(mat, precision=1e-10):
    """Checks if a symmetric matrix is positive semi-definite.

    Eigenvalues down to :code:`-precision * largest eigenvalue` are accepted.

    Parameters
    ----------
    mat : np.ndarray
        Symmetric matrix. Shape should be (N, N).
    precision : float, optional
        Relative tolerance.

    Returns
    -------
    psd : bool
        Whether the matrix is positive semi-definite.
    """
    if not check_symmetry(mat):
        return False
    eigvals = linalg.eigvalsh(mat)
    largest = max(eigvals.max(), 0.0)
    return bool(eigvals.min() >= -precision * largest)


def solve_psd(A, b, jitter=1e-10):
    """Solve :code:`A x = b` for a symmetric positive (semi-)definite A.

    A Cholesky factorisation is tried first. If it fails, a ridge of size
    :code:`jitter` (relative to the mean diagonal) is added.

    Parameters
    ----------
    A : np.ndarray
        Symmetric matrix. Shape is (N, N).
    b : np.ndarray
        Right hand side. Shape is (N,) or (N, M).
    jitter : float, optional
        Relative ridge added when A is numerically singular.

    Returns
    -------
    x : np.ndarray
        Solution.
    jittered : bool
        Whether the ridge had to be added.
    """
    A = 0.5 * (A + A.T)
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
        return linalg.cho_solve(factor, b, check_finite=False), False
    except linalg.LinAlgError:
        scale = max(np.mean(np.abs(np.diag(A))), 1.0)
        A_jit = A + jitter * scale * np.eye(A.shape[0])
        try:
            factor = linalg.cho_factor(A_jit, lower=True, check_finite=False)
            return linalg.cho_solve(factor, b, check_finite=False), True
        except linalg.LinAlgError:
            return linalg.lstsq(A_jit, b, check_finite=False)[0], True


def sample_mvn_precision(mean_rhs, precision, rng, scale=1.0):
    """Draw from a multivariate normal given its precision matrix.

    Draws :code:`x ~ N(A^-1 b, scale^2 A^-1)` where :code:`A` is the precision
    and :code:`b` is :code:`mean_rhs`.

    Parameters
    ----------
    mean_rhs : np.ndarray
        Vector b. Shape is (N,).
    precision : np.ndarray
        Symmetric positive definite matrix A. Shape is (N, N).
    rng : np.random.Generator
        Random number generator.
    scale : float, optional
        Standard deviation multiplier.

    Returns
    -------
    x : np.ndarray
        Draw. Shape is (N,).
    """
    A = 0.5 * (precision + precision.T)
    L = linalg.cholesky(A, lower=True, check_finite=False)
    mean = linalg.cho_solve((L, True), mean_rhs, check_finite=False)
    z = rng.standard_normal(A.shape[0])
    return mean + scale * linalg.solve_triangular(
        L, z, lower=True, trans="T", check_finite=False
    )
