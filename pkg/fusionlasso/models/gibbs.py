"""Full posterior sampling by data augmentation.

Each absolute value in the penalty is represented as a normal scale mixture
with latent variances :math:`\\tau_k^2` (linear rows) and :math:`\\xi_\\ell^2`
(quadratic terms). Conditionally on these the coefficients are Gaussian.
The logistic and multinomial likelihoods are augmented with Polya-Gamma
variables, which makes them conditionally Gaussian too.
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import linalg

from fusionlasso.array_ops import numerical_rank, sample_mvn_precision, solve_psd
from fusionlasso.data import rw
from fusionlasso.inference import propriety, samplers
from fusionlasso.models import families
from fusionlasso.utils.misc import get_n_jobs, get_seed, parallel_map

_logger = logging.getLogger("fusionlasso")

LAMBDA_MODES = ["fixed", "gamma_hyper"]
LAMBDA_SHAPES = ["rank", "dimension"]

# Floor on |d_k^T beta| when forming the inverse Gaussian mean
GAP_FLOOR = 1e-12


@dataclass
class PriorSpec:
    """Hyperparameters of the structured sparsity prior.

    Parameters
    ----------
    lambda_mode : str
        :code:`'fixed'` (lambda held at :code:`lam`) or
        :code:`'gamma_hyper'` (Gamma prior on lambda^2).
    lam : float, optional
        Fixed lambda. Used as the starting value in :code:`'gamma_hyper'`
        mode.
    lambda_a : float
        Shape of the Gamma prior on lambda^2.
    lambda_b : float
        Rate of the Gamma prior on lambda^2.
    sigma_a : float
        Shape of the inverse-gamma prior on sigma^2 (linear family).
    sigma_b : float
        Scale of the inverse-gamma prior on sigma^2 (linear family).
    sigma2 : float, optional
        Fixed sigma^2. If passed, sigma^2 is not sampled.
    lambda_shape : str
        Shape of the lambda^2 conditional: :code:`'rank'` uses
        :code:`a + (K + L + m) / 2` with m the rank of D̄,
        :code:`'dimension'` uses :code:`a + (p + K + L) / 2`.
    """

    lambda_mode: str = "gamma_hyper"
    lam: float = None
    lambda_a: float = 1.0
    lambda_b: float = 1.0
    sigma_a: float = 1.0
    sigma_b: float = 1.0
    sigma2: float = None
    lambda_shape: str = "rank"

    def __post_init__(self):
        if self.lambda_mode not in LAMBDA_MODES:
            raise ValueError(
                f"lambda_mode must be one of {LAMBDA_MODES}, got {self.lambda_mode}."
            )
        if self.lambda_shape not in LAMBDA_SHAPES:
            raise ValueError(
                f"lambda_shape must be one of {LAMBDA_SHAPES}, got {self.lambda_shape}."
            )
        if self.lambda_mode == "fixed" and self.lam is None:
            raise ValueError("lam must be passed if lambda_mode='fixed'.")
        for name in ["lam", "sigma2"]:
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite.")
        for name in ["lambda_a", "lambda_b", "sigma_a", "sigma_b"]:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite.")

    def to_dict(self):
        return asdict(self)


@dataclass
class GibbsConfig:
    """Settings for a Gibbs sampling run.

    Parameters
    ----------
    n_chains : int
        Number of chains.
    n_iter : int
        Total number of iterations per chain (including burn-in).
    burn_in : int
        Number of initial iterations to discard.
    thin : int
        Keep every :code:`thin`-th draw after burn-in.
    seed : int, optional
        Master seed. Chain seeds are spawned from it.
    n_jobs : int, optional
        Number of chains to run concurrently.
    """

    n_chains: int = 4
    n_iter: int = 10000
    burn_in: int = 5000
    thin: int = 1
    seed: int = None
    n_jobs: int = None

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be one or greater.")
        if self.thin < 1:
            raise ValueError("thin must be one or greater.")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative.")
        if self.n_iter <= self.burn_in:
            raise ValueError("n_iter must be greater than burn_in.")
        self.seed = get_seed(self.seed)


@dataclass
class PosteriorDraws:
    """Post burn-in draws from one or more chains.

    Parameters
    ----------
    names : list of str
        Parameter names. Coefficients first (one per block and coefficient),
        then :code:`lambda2` and, for the linear family, :code:`sigma2`.
    chains : list of np.ndarray
        One (n_draws, n_params) array per chain.
    family : str
        Likelihood family.
    n_blocks : int
        Number of coefficient blocks.
    seeds : list
        Seed description of each chain.
    burn_in : int
        Number of discarded iterations.
    thin : int
        Thinning interval.
    verified : bool
        Whether posterior propriety was verified before sampling.
    metadata : dict
        Prior and run settings.
    """

    names: list
    chains: list
    family: str = "linear"
    n_blocks: int = 1
    seeds: list = None
    burn_in: int = 0
    thin: int = 1
    verified: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.chains = [np.atleast_2d(np.asarray(c, dtype=float)) for c in self.chains]
        for chain in self.chains:
            if chain.shape[1] != len(self.names):
                raise ValueError("each chain must have one column per parameter.")

    @property
    def n_chains(self):
        return len(self.chains)

    @property
    def n_draws(self):
        return self.chains[0].shape[0]

    @property
    def n_beta(self):
        return sum(name not in ("lambda2", "sigma2") for name in self.names)

    @property
    def n_coefs(self):
        return self.n_beta // self.n_blocks

    def parameter_names(self):
        return list(self.names)

    def chain_matrix(self, i):
        return self.chains[i]

    def stack(self, name):
        """Draws of a parameter from every chain.

        Parameters
        ----------
        name : str
            A parameter name, or :code:`'beta'` for all coefficients.

        Returns
        -------
        draws : np.ndarray
            Shape is (n_chains, n_draws) for a scalar parameter and
            (n_chains, n_draws, n_blocks, p) for :code:`'beta'`.
        """
        if name == "beta":
            return np.stack(
                [
                    c[:, : self.n_beta].reshape(-1, self.n_blocks, self.n_coefs)
                    for c in self.chains
                ]
            )
        if name not in self.names:
            raise ValueError(f"name must be one of {self.names}, got {name}.")
        j = self.names.index(name)
        return np.stack([c[:, j] for c in self.chains])

    def pooled(self, name):
        """Draws of a parameter with the chains concatenated."""
        draws = self.stack(name)
        return draws.reshape(-1, *draws.shape[2:])

    def posterior_mean(self):
        """Posterior mean of the coefficients. Shape is (n_blocks, p)."""
        return self.pooled("beta").mean(axis=0)

    def summary(self):
        """Posterior summary table.

        Returns
        -------
        summary : pd.DataFrame
            Mean, standard deviation and quantiles of each parameter.
        """
        pooled = np.concatenate(self.chains)
        return pd.DataFrame(
            {
                "mean": pooled.mean(axis=0),
                "sd": pooled.std(axis=0, ddof=1) if len(pooled) > 1 else 0.0,
                "q2.5": np.quantile(pooled, 0.025, axis=0),
                "q50": np.quantile(pooled, 0.5, axis=0),
                "q97.5": np.quantile(pooled, 0.975, axis=0),
            },
            index=pd.Index(self.names, name="parameter"),
        )

    def to_frame(self):
        frames = []
        for i, chain in enumerate(self.chains):
            frame = pd.DataFrame(chain, columns=self.names)
            frame.insert(0, "draw", np.arange(chain.shape[0]))
            frame.insert(0, "chain", i)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def header(self):
        return {
            "names": self.names,
            "family": self.family,
            "n_blocks": self.n_blocks,
            "seeds": self.seeds,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "verified": self.verified,
            "metadata": self.metadata,
        }

    def save(self, filename):
        """Save as CSV (:code:`.csv`) or in the binary format (otherwise)."""
        if Path(filename).suffix == ".csv":
            rw.save_draws_csv(filename, self)
        else:
            rw.save_draws_binary(filename, self)

    @classmethod
    def from_frame(cls, frame, **kwargs):
        """Draws from a table with :code:`chain` and :code:`draw` columns."""
        if "chain" not in frame.columns:
            raise ValueError("frame must have a 'chain' column.")
        names = [c for c in frame.columns if c not in ("chain", "draw")]
        chains = [
            group.sort_values("draw")[names].to_numpy(dtype=float)
            if "draw" in group.columns
            else group[names].to_numpy(dtype=float)
            for _, group in frame.groupby("chain", sort=True)
        ]
        if "n_blocks" not in kwargs:
            prefixes = {n.split("|")[0] for n in names if "|" in n}
            kwargs["n_blocks"] = max(len(prefixes), 1)
        return cls(names=names, chains=chains, **kwargs)

    @classmethod
    def load(cls, filename):
        """Load draws saved with :code:`save`."""
        if Path(filename).suffix == ".csv":
            return cls.from_frame(rw.load_csv(filename))
        header, blocks = rw.load_draws_binary(filename)
        return cls(
            names=header["names"],
            chains=blocks,
            family=header.get("family", "linear"),
            n_blocks=header.get("n_blocks", 1),
            seeds=header.get("seeds"),
            burn_in=header.get("burn_in", 0),
            thin=header.get("thin", 1),
            verified=header.get("verified", True),
            metadata=header.get("metadata", {}),
        )


def lambda2_shape(K, L, m, prior, p=None, n_blocks=1):
    """Shape of the Gamma full conditional of lambda^2."""
    if prior.lambda_shape == "rank":
        return prior.lambda_a + n_blocks * (K + L + m) / 2
    if p is None:
        raise ValueError("p must be passed if lambda_shape='dimension'.")
    return prior.lambda_a + n_blocks * (p + K + L) / 2


def lambda2_rate(taus, xis, prior):
    """Rate of the Gamma full conditional of lambda^2."""
    return prior.lambda_b + 0.5 * np.sum(taus) + 0.5 * np.sum(xis)


def sample_lambda2(taus, xis, m, prior, rng, p=None, n_blocks=1):
    """Draw lambda^2 from its full conditional.

    Parameters
    ----------
    taus : np.ndarray
        Latent variances of the linear rows (all blocks).
    xis : np.ndarray
        Latent variances of the quadratic terms (all blocks).
    m : int
        Rank of D̄.
    prior : PriorSpec
        Prior settings.
    rng : np.random.Generator
        Random number generator.
    p : int, optional
        Number of coefficients. Needed if :code:`prior.lambda_shape` is
        :code:`'dimension'`.
    n_blocks : int, optional
        Number of coefficient blocks sharing lambda.

    Returns
    -------
    lambda2 : float
        Draw.
    """
    taus = np.asarray(taus, dtype=float).reshape(-1)
    xis = np.asarray(xis, dtype=float).reshape(-1)
    if np.any(taus <= 0) or np.any(xis <= 0):
        raise ValueError("taus and xis must be positive.")
    K = taus.size // n_blocks
    L = xis.size // n_blocks
    shape = lambda2_shape(K, L, m, prior, p, n_blocks)
    rate = lambda2_rate(taus, xis, prior)
    return float(rng.gamma(shape, 1 / rate))


def _draw_inverse_variances(beta, scale, lam2, cset, rng):
    """Draw 1/tau^2 and 1/xi^2 given the coefficients of one block."""
    gaps = np.maximum(np.abs(cset.linear_values(beta)), GAP_FLOOR)
    inv_tau2 = samplers.draw_inverse_gaussian(scale / gaps, lam2, rng)
    if cset.L:
        norms = np.maximum(cset.quad_values(beta), GAP_FLOOR)
        inv_xi2 = samplers.draw_inverse_gaussian(scale / norms, lam2, rng)
    else:
        inv_xi2 = np.empty(0)
    return np.atleast_1d(inv_tau2), np.atleast_1d(inv_xi2)


class LinearGibbs:
    """Gibbs sampler for the linear family.

    The state is a dict with keys :code:`beta`, :code:`sigma2`,
    :code:`lam2`, :code:`inv_tau2` and :code:`inv_xi2`. Each step method
    updates the state in place.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p). May have zero rows (prior only).
    y : np.ndarray
        Outcome. Shape is (N,).
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    prior : PriorSpec
        Prior settings.
    """

    family = "linear"

    def __init__(self, X, y, cset, prior):
        if cset.ridge is not None and cset.ridge_scales_with_lambda:
            raise ValueError("a lambda-scaled ridge is not supported when sampling.")
        self.X = np.asarray(X, dtype=float).reshape(-1, cset.n_coefs)
        self.cset = cset
        self.prior = prior
        self.R = cset.ridge_matrix()
        self.m = numerical_rank(cset.Dbar)
        self.m_sigma = numerical_rank(cset.prior_rows)
        self.XtX = self.X.T @ self.X
        self.set_outcome(y)

    @property
    def n_coefs(self):
        return self.cset.n_coefs

    def set_outcome(self, y):
        self.y = np.asarray(y, dtype=float).reshape(-1)
        if self.y.shape[0] != self.X.shape[0]:
            raise ValueError(f"y must have {self.X.shape[0]} entries.")
        self.Xty = self.X.T @ self.y

    def initial_state(self, rng):
        p = self.n_coefs
        beta, _ = solve_psd(self.XtX + np.eye(p), self.Xty)
        beta = beta + 0.1 * rng.standard_normal(p)
        if self.prior.sigma2 is not None:
            sigma2 = self.prior.sigma2
        elif self.y.size > 1:
            sigma2 = max(float(np.var(self.y)), 1e-8)
        else:
            sigma2 = 1.0
        state = {
            "beta": beta,
            "sigma2": sigma2,
            "lam2": self.prior.lam**2 if self.prior.lam is not None else 1.0,
        }
        self.step_augmentation(state, rng)
        return state

    def precision(self, state):
        return self.cset.precision(state["inv_tau2"], state["inv_xi2"]) + self.R

    def step_beta(self, state, rng):
        A = self.XtX + self.precision(state)
        state["beta"] = sample_mvn_precision(
            self.Xty, A, rng, scale=np.sqrt(state["sigma2"])
        )

    def step_sigma2(self, state, rng):
        if self.prior.sigma2 is not None:
            return
        beta = state["beta"]
        rss = float(np.sum((self.y - self.X @ beta) ** 2))
        quad = float(beta @ self.precision(state) @ beta)
        shape = self.prior.sigma_a + (self.y.size + self.m_sigma) / 2
        rate = self.prior.sigma_b + 0.5 * (rss + quad)
        state["sigma2"] = 1 / rng.gamma(shape, 1 / rate)

    def step_augmentation(self, state, rng):
        scale = np.sqrt(state["lam2"] * state["sigma2"])
        state["inv_tau2"], state["inv_xi2"] = _draw_inverse_variances(
            state["beta"], scale, state["lam2"], self.cset, rng
        )

    def step_lambda2(self, state, rng):
        if self.prior.lambda_mode == "fixed":
            return
        state["lam2"] = sample_lambda2(
            1 / state["inv_tau2"],
            1 / state["inv_xi2"],
            self.m,
            self.prior,
            rng,
            p=self.n_coefs,
        )

    def step(self, state, rng):
        self.step_beta(state, rng)
        self.step_sigma2(state, rng)
        self.step_augmentation(state, rng)
        self.step_lambda2(state, rng)

    def record(self, state):
        return np.concatenate(
            [state["beta"], [state["lam2"], state["sigma2"]]]
        )

    def names(self):
        return list(self.cset.labels) + ["lambda2", "sigma2"]


class MultinomialGibbs:
    """Gibbs sampler for the multinomial family.

    Coefficients of the last (reference) category are fixed at zero. Each
    of the C - 1 remaining blocks has its own latent variances for the same
    constraint set. Lambda is shared by all blocks.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Category codes 0, ..., C-1.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set applied to every block.
    prior : PriorSpec
        Prior settings.
    n_categories : int, optional
        Number of categories C.
    category_names : list of str, optional
        Names of the non-reference categories.
    """

    family = "multinomial"

    def __init__(self, X, y, cset, prior, n_categories=None, category_names=None):
        if cset.ridge is not None and cset.ridge_scales_with_lambda:
            raise ValueError("a lambda-scaled ridge is not supported when sampling.")
        self.X = np.asarray(X, dtype=float).reshape(-1, cset.n_coefs)
        self.cset = cset
        self.prior = prior
        self.R = cset.ridge_matrix()
        self.m = numerical_rank(cset.Dbar)
        self.multinomial = families.Multinomial()
        if n_categories is None:
            y = self.multinomial.validate(y)
        elif n_categories < 2:
            raise ValueError("n_categories must be two or greater.")
        self.n_blocks = self.multinomial.n_blocks(y, n_categories)
        self.category_names = category_names or [str(c) for c in range(self.n_blocks)]
        if len(self.category_names) != self.n_blocks:
            raise ValueError(f"category_names must have {self.n_blocks} entries.")
        self.set_outcome(y)

    @property
    def n_coefs(self):
        return self.cset.n_coefs

    def set_outcome(self, y):
        self.y = np.asarray(y, dtype=int).reshape(-1)
        if self.y.shape[0] != self.X.shape[0]:
            raise ValueError(f"y must have {self.X.shape[0]} entries.")
        if self.y.size and (self.y.min() < 0 or self.y.max() > self.n_blocks):
            raise ValueError(f"y must hold codes below {self.n_blocks + 1}.")
        self.kappa = (
            self.y[:, None] == np.arange(self.n_blocks)[None, :]
        ).astype(float) - 0.5

    def initial_state(self, rng):
        state = {
            "beta": 0.1 * rng.standard_normal((self.n_blocks, self.n_coefs)),
            "lam2": self.prior.lam**2 if self.prior.lam is not None else 1.0,
        }
        self.step_augmentation(state, rng)
        return state

    def step_beta(self, state, rng):
        beta = state["beta"]
        for c in range(self.n_blocks):
            eta = self.X @ beta.T
            offset = self.multinomial.offsets(eta, c)
            omega = samplers.draw_polya_gamma(eta[:, c] - offset, rng)
            P = (
                self.cset.precision(state["inv_tau2"][c], state["inv_xi2"][c])
                + self.R
            )
            A = (self.X.T * omega) @ self.X + P
            rhs = self.X.T @ (self.kappa[:, c] + omega * offset)
            beta[c] = sample_mvn_precision(rhs, A, rng)

    def step_augmentation(self, state, rng):
        scale = np.sqrt(state["lam2"])
        draws = [
            _draw_inverse_variances(b, scale, state["lam2"], self.cset, rng)
            for b in state["beta"]
        ]
        state["inv_tau2"] = np.array([d[0] for d in draws]).reshape(self.n_blocks, -1)
        state["inv_xi2"] = np.array([d[1] for d in draws]).reshape(self.n_blocks, -1)

    def step_lambda2(self, state, rng):
        if self.prior.lambda_mode == "fixed":
            return
        state["lam2"] = sample_lambda2(
            1 / state["inv_tau2"],
            1 / state["inv_xi2"],
            self.m,
            self.prior,
            rng,
            p=self.n_coefs,
            n_blocks=self.n_blocks,
        )

    def step(self, state, rng):
        self.step_beta(state, rng)
        self.step_augmentation(state, rng)
        self.step_lambda2(state, rng)

    def record(self, state):
        return np.concatenate([state["beta"].reshape(-1), [state["lam2"]]])

    def names(self):
        if self.n_blocks == 1 and self.category_names == ["0"]:
            beta_names = list(self.cset.labels)
        else:
            beta_names = [
                f"{name}|{label}"
                for name in self.category_names
                for label in self.cset.labels
            ]
        return beta_names + ["lambda2"]


def _run_chain(sampler, seed, config, chain):
    rng = np.random.default_rng(seed)
    state = sampler.initial_state(rng)
    kept = []
    for iteration in range(config.n_iter):
        try:
            sampler.step(state, rng)
        except linalg.LinAlgError as e:
            raise FloatingPointError(
                f"chain {chain} failed at iteration {iteration}: {e}"
            ) from e
        record = sampler.record(state)
        if not np.all(np.isfinite(record)):
            raise FloatingPointError(
                f"chain {chain} produced a non-finite draw at iteration {iteration}."
            )
        if iteration >= config.burn_in and (iteration - config.burn_in) % config.thin == 0:
            kept.append(record)
    return np.array(kept)


def _verify(X, y, cset, family, force):
    report = propriety.check_posterior(X, y, cset, family)
    if report.posterior_proper:
        return True
    if not force:
        raise ValueError(
            f"Posterior propriety could not be verified: {report.details} "
            "Pass force=True to sample anyway."
        )
    _logger.warning(
        f"Sampling an unverified posterior (forced): {report.details}"
    )
    return False


def _as_config(config, kwargs):
    if config is None:
        return GibbsConfig(**kwargs)
    if isinstance(config, dict):
        return GibbsConfig(**{**config, **kwargs})
    if kwargs:
        raise ValueError("pass either config or keyword settings, not both.")
    return config


def _run(sampler, config, verified, metadata):
    seed_sequence = np.random.SeedSequence(config.seed)
    children = seed_sequence.spawn(config.n_chains)
    n_jobs = min(get_n_jobs(config.n_jobs), config.n_chains)
    _logger.info(
        f"Sampling {config.n_chains} chains of {config.n_iter} iterations "
        f"({sampler.family} family)"
    )
    kwargs = [
        {"sampler": sampler, "seed": child, "config": config, "chain": i}
        for i, child in enumerate(children)
    ]
    chains = parallel_map(_run_chain, kwargs, n_jobs=n_jobs, desc="Sampling")
    for chain in chains:
        if isinstance(chain, Exception):
            raise chain

    metadata = {
        **metadata,
        "prior": sampler.prior.to_dict(),
        "n_iter": config.n_iter,
        "entropy": str(seed_sequence.entropy),
    }
    return PosteriorDraws(
        names=sampler.names(),
        chains=chains,
        family=metadata.get("family", sampler.family),
        n_blocks=getattr(sampler, "n_blocks", 1),
        seeds=[
            {"entropy": str(child.entropy), "spawn_key": list(child.spawn_key)}
            for child in children
        ],
        burn_in=config.burn_in,
        thin=config.thin,
        verified=verified,
        metadata=metadata,
    )


def sample_linear(X, y, cset, prior=None, config=None, force=False, **kwargs):
    """Sample the posterior of the linear family.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Outcome. Shape is (N,).
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    prior : PriorSpec or dict, optional
        Prior settings.
    config : GibbsConfig or dict, optional
        Run settings. Alternatively pass them as keyword arguments.
    force : bool, optional
        Sample even if posterior propriety cannot be verified. The draws are
        then marked :code:`verified=False`.

    Returns
    -------
    draws : PosteriorDraws
        Post burn-in draws.
    """
    prior = _as_prior(prior)
    config = _as_config(config, kwargs)
    verified = _verify(X, y, cset, "linear", force)
    sampler = LinearGibbs(X, y, cset, prior)
    return _run(sampler, config, verified, {"family": "linear"})


def sample_multinomial(
    X,
    y,
    cset,
    prior=None,
    config=None,
    force=False,
    n_categories=None,
    category_names=None,
    **kwargs,
):
    """Sample the posterior of the multinomial family.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Category codes 0, ..., C-1 with the reference category last.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set shared by all categories.
    prior : PriorSpec or dict, optional
        Prior settings.
    config : GibbsConfig or dict, optional
        Run settings. Alternatively pass them as keyword arguments.
    force : bool, optional
        Sample even if posterior propriety cannot be verified.
    n_categories : int, optional
        Number of categories C.
    category_names : list of str, optional
        Names of the C - 1 non-reference categories.

    Returns
    -------
    draws : PosteriorDraws
        Post burn-in draws. Coefficients have n_blocks = C - 1.
    """
    prior = _as_prior(prior)
    config = _as_config(config, kwargs)
    verified = _verify(X, y, cset, "multinomial", force)
    sampler = MultinomialGibbs(X, y, cset, prior, n_categories, category_names)
    return _run(sampler, config, verified, {"family": "multinomial"})


def sample_logistic(X, y, cset, prior=None, config=None, force=False, **kwargs):
    """Sample the posterior of the logistic family.

    Runs the multinomial sampler with two categories. The success category
    (y = 1) is the modelled category and y = 0 is the reference, so the
    coefficients are the usual logistic regression coefficients.

    Parameters
    ----------
    X : np.ndarray
        Design matrix. Shape is (N, p).
    y : np.ndarray
        Binary outcome.
    cset : fusionlasso.structure.ConstraintSet
        Constraint set.
    prior : PriorSpec or dict, optional
        Prior settings.
    config : GibbsConfig or dict, optional
        Run settings. Alternatively pass them as keyword arguments.
    force : bool, optional
        Sample even if posterior propriety cannot be verified.

    Returns
    -------
    draws : PosteriorDraws
        Post burn-in draws.
    """
    prior = _as_prior(prior)
    config = _as_config(config, kwargs)
    y = families.Logistic().validate(y)
    verified = _verify(X, y, cset, "logistic", force)
    sampler = MultinomialGibbs(X, 1 - y, cset, prior, n_categories=2)
    return _run(sampler, config, verified, {"family": "logistic"})


def _as_prior(prior):
    if prior is None:
        return PriorSpec()
    if isinstance(prior, dict):
        return PriorSpec(**prior)
    return prior


SAMPLERS = {
    "linear": sample_linear,
    "logistic": sample_logistic,
    "multinomial": sample_multinomial,
}
