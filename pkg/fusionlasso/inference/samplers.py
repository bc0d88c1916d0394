"""Random variate generators used by the Gibbs samplers.

"""

import numpy as np
from scipy.special import log_ndtr

# Truncation point of the Polya-Gamma proposal
_PG_TRUNC = 0.64


def _default_rng(rng):
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    return rng


def draw_inverse_gaussian(mu, lam, rng=None, size=None):
    """Draw from an inverse Gaussian distribution.

    Uses the transformation with multiple roots method: a squared standard
    normal is mapped to the smaller root of the quadratic and the larger
    root :code:`mu^2 / x` is taken with probability :code:`x / (mu + x)`.
    The smaller root is computed in a form which does not cancel for very
    large :code:`mu`.

    Parameters
    ----------
    mu : float or np.ndarray
        Mean. Must be positive and finite.
    lam : float or np.ndarray
        Shape. Must be positive and finite.
    rng : np.random.Generator, optional
        Random number generator.
    size : int or tuple, optional
        Output shape. Defaults to the broadcast shape of :code:`mu` and
        :code:`lam`.

    Returns
    -------
    x : float or np.ndarray
        Positive draws.
    """
    rng = _default_rng(rng)
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(mu)) or np.any(mu <= 0):
        raise ValueError("mu must be positive and finite.")
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("lam must be positive and finite.")
    if size is None:
        size = np.broadcast(mu, lam).shape
    mu = np.broadcast_to(mu, size)
    lam = np.broadcast_to(lam, size)

    y = rng.standard_normal(size) ** 2
    a = mu * y / (2 * lam)
    x = mu / (1 + a + np.sqrt(a * (a + 2)))
    u = rng.random(size)
    larger = u > mu / (mu + x)
    x = np.where(larger, mu * (mu / x), x)
    if np.ndim(x) == 0:
        return float(x)
    return x


def _truncated_inverse_gaussian(z, rng):
    """Inverse Gaussian IG(1/z, 1) truncated to (0, 0.64]."""
    t = _PG_TRUNC
    out = np.empty(z.shape)
    mu = np.divide(1.0, z, out=np.full(z.shape, np.inf), where=z > 0)

    # Large mean: propose from the truncated Levy law and accept with
    # probability exp(-z^2 x / 2)
    pending = np.flatnonzero(mu > t)
    while pending.size:
        n = pending.size
        e1 = rng.exponential(size=n)
        e2 = rng.exponential(size=n)
        bad = e1**2 > 2 * e2 / t
        while np.any(bad):
            e1[bad] = rng.exponential(size=bad.sum())
            e2[bad] = rng.exponential(size=bad.sum())
            bad = e1**2 > 2 * e2 / t
        x = t / (1 + t * e1) ** 2
        accept = rng.random(n) <= np.exp(-0.5 * z[pending] ** 2 * x)
        out[pending[accept]] = x[accept]
        pending = pending[~accept]

    # Small mean: draw IG(mu, 1) until it falls below the truncation
    pending = np.flatnonzero(mu <= t)
    while pending.size:
        x = draw_inverse_gaussian(mu[pending], 1.0, rng)
        x = np.atleast_1d(x)
        accept = x <= t
        out[pending[accept]] = x[accept]
        pending = pending[~accept]

    return out


def _series_coefficient(n, x):
    """n-th term of the alternating series for the J*(1, 0) density."""
    t = _PG_TRUNC
    k = n + 0.5
    left = x <= t
    out = np.empty(x.shape)
    xl = x[left]
    out[left] = np.pi * k * (2 / (np.pi * xl)) ** 1.5 * np.exp(-2 * k**2 / xl)
    out[~left] = np.pi * k * np.exp(-(k**2) * np.pi**2 * x[~left] / 2)
    return out


def draw_polya_gamma(c, rng=None):
    """Draw from the Polya-Gamma distribution PG(1, c).

    Exact sampler using the alternating series method: J*(1, c/2) is
    proposed from a mixture of a truncated exponential and a truncated
    inverse Gaussian and accepted by evaluating partial sums of its density
    series. PG(1, c) = J*(1, c/2) / 4.

    Parameters
    ----------
    c : float or np.ndarray
        Tilting parameter. Must be finite.
    rng : np.random.Generator, optional
        Random number generator.

    Returns
    -------
    omega : float or np.ndarray
        Positive draws with the shape of :code:`c`.
    """
    rng = _default_rng(rng)
    c_arr = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c_arr)):
        raise ValueError("c must be finite.")
    z = np.abs(c_arr).reshape(-1) / 2
    t = _PG_TRUNC

    K = np.pi**2 / 8 + z**2 / 2
    # Mass of the exponential (right) and inverse Gaussian (left) pieces
    p = np.pi / (2 * K) * np.exp(-K * t)
    q = 2 * (
        np.exp(-z + log_ndtr((t * z - 1) / np.sqrt(t)))
        + np.exp(z + log_ndtr(-(t * z + 1) / np.sqrt(t)))
    )
    right_prob = p / (p + q)

    out = np.empty(z.shape)
    pending = np.arange(z.size)
    while pending.size:
        zp = z[pending]
        right = rng.random(pending.size) < right_prob[pending]
        x = np.empty(pending.size)
        x[right] = t + rng.exponential(size=right.sum()) / K[pending][right]
        x[~right] = _truncated_inverse_gaussian(zp[~right], rng)

        s = _series_coefficient(0, x)
        u = rng.random(pending.size) * s
        decided = np.zeros(pending.size, dtype=bool)
        accepted = np.zeros(pending.size, dtype=bool)
        n = 0
        while not decided.all():
            n += 1
            a_n = _series_coefficient(n, x)
            if n % 2 == 1:
                s = s - a_n
                newly = ~decided & (u <= s)
                accepted |= newly
            else:
                s = s + a_n
                newly = ~decided & (u > s)
            decided |= newly

        out[pending[accepted]] = x[accepted] / 4
        pending = pending[~accepted]

    if c_arr.ndim == 0:
        return float(out[0])
    return out.reshape(c_arr.shape)


def polya_gamma_mean(c):
    """Mean of PG(1, c), :code:`tanh(c / 2) / (2 c)` (1/4 at zero).

    Parameters
    ----------
    c : float or np.ndarray
        Tilting parameter.

    Returns
    -------
    mean : float or np.ndarray
        Expected value.
    """
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-4
    safe = np.where(small, 1.0, c)
    mean = np.where(small, 0.25 - c**2 / 48, np.tanh(safe / 2) / (2 * safe))
    if mean.ndim == 0:
        return float(mean)
    return mean
