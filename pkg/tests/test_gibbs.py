import numpy as np
import pytest
from scipy import stats
from scipy.special import expit

from fusionlasso.analysis.diagnostics import spectrum0
from fusionlasso.models import gibbs
from fusionlasso.models.gibbs import (
    GibbsConfig,
    LinearGibbs,
    MultinomialGibbs,
    PosteriorDraws,
    PriorSpec,
)
from fusionlasso.structure import ConstraintSet, StructureGraph, compile_constraints


def _chain(p=3):
    return compile_constraints(StructureGraph(p, [(i, i + 1) for i in range(p - 1)]))


def _grouped_data(seed=0, n_per_level=10):
    rng = np.random.default_rng(seed)
    levels = np.repeat(np.arange(3), n_per_level)
    X = np.eye(3)[levels]
    y = np.array([0.0, 0.0, 2.0])[levels] + 0.5 * rng.standard_normal(levels.size)
    return X, y


def _z_score(mc, sc):
    se = np.sqrt(np.var(mc, ddof=1) / mc.size + spectrum0(sc) / sc.size)
    return (np.mean(sc) - np.mean(mc)) / se


def test_lambda2_shape():
    assert gibbs.lambda2_shape(3, 0, 2, PriorSpec()) == 3.5
    prior = PriorSpec(lambda_shape="dimension")
    assert gibbs.lambda2_shape(3, 0, 2, prior, p=4) == 1 + 7 / 2
    assert gibbs.lambda2_shape(3, 0, 2, PriorSpec(), n_blocks=2) == 1 + 5
    with pytest.raises(ValueError):
        gibbs.lambda2_shape(3, 0, 2, prior)


def test_sample_lambda2_mean():
    rng = np.random.default_rng(0)
    taus = np.array([0.5, 1.5])
    prior = PriorSpec(lambda_a=2.0, lambda_b=1.0)
    draws = [gibbs.sample_lambda2(taus, [], 2, prior, rng) for _ in range(20000)]
    # Gamma(2 + (2 + 2) / 2, 1 + 1)
    assert np.mean(draws) == pytest.approx(4 / 2, rel=0.03)
    with pytest.raises(ValueError):
        gibbs.sample_lambda2([0.0, 1.0], [], 2, prior, rng)


def test_prior_and_config_validation():
    with pytest.raises(ValueError):
        PriorSpec(lambda_mode="fixed")
    with pytest.raises(ValueError):
        PriorSpec(lambda_mode="uniform")
    with pytest.raises(ValueError):
        PriorSpec(sigma_a=0.0)
    with pytest.raises(ValueError):
        GibbsConfig(n_iter=10, burn_in=10)
    with pytest.raises(ValueError):
        GibbsConfig(thin=0)


def test_linear_draws_layout_and_reproducibility():
    X, y = _grouped_data()
    cset = _chain(3)
    kwargs = {"n_chains": 2, "n_iter": 300, "burn_in": 100, "thin": 2, "seed": 11, "n_jobs": 1}
    draws = gibbs.sample_linear(X, y, cset, **kwargs)
    assert draws.names == ["0", "1", "2", "lambda2", "sigma2"]
    assert draws.n_chains == 2
    assert draws.n_draws == 100
    assert draws.stack("beta").shape == (2, 100, 1, 3)
    assert draws.stack("sigma2").shape == (2, 100)
    assert np.all(draws.pooled("sigma2") > 0)
    assert np.all(draws.pooled("lambda2") > 0)
    assert draws.verified

    again = gibbs.sample_linear(X, y, cset, **kwargs)
    for a, b in zip(draws.chains, again.chains):
        np.testing.assert_array_equal(a, b)

    # Chains are not copies of each other
    assert not np.array_equal(draws.chains[0], draws.chains[1])


def test_linear_posterior_mean_near_truth():
    X, y = _grouped_data(n_per_level=40)
    draws = gibbs.sample_linear(
        X, y, _chain(3), n_chains=2, n_iter=2000, burn_in=500, seed=3, n_jobs=1
    )
    np.testing.assert_allclose(draws.posterior_mean()[0], [0.0, 0.0, 2.0], atol=0.3)


def test_improper_posterior_needs_force():
    X = np.ones((5, 2))
    y = np.arange(5, dtype=float)
    cset = compile_constraints(StructureGraph(2))
    with pytest.raises(ValueError):
        gibbs.sample_linear(X, y, cset, n_chains=1, n_iter=20, burn_in=10, seed=0)


def test_forced_draws_are_marked_unverified():
    # Every outcome is a success and the intercept is unpenalised
    x = np.array([-2.0, -1.0, 1.0, 2.0])
    X = np.column_stack([np.ones(4), x])
    y = np.ones(4, dtype=int)
    cset = ConstraintSet.from_rows(np.array([[0.0, 1.0]]))
    with pytest.raises(ValueError):
        gibbs.sample_logistic(X, y, cset, n_chains=1, n_iter=20, burn_in=10, seed=0)
    draws = gibbs.sample_logistic(
        X, y, cset, force=True, n_chains=1, n_iter=20, burn_in=10, seed=0
    )
    assert not draws.verified


def test_lambda_scaled_ridge_is_rejected():
    X, y = _grouped_data()
    cset = _chain(3).with_ridge(np.eye(3), scales_with_lambda=True)
    with pytest.raises(ValueError):
        LinearGibbs(X, y, cset, PriorSpec())


def test_logistic_names_and_direction():
    rng = np.random.default_rng(4)
    levels = np.repeat(np.arange(3), 60)
    X = np.eye(3)[levels]
    y = (rng.random(180) < expit(np.array([-1.5, 0.0, 1.5])[levels])).astype(int)
    draws = gibbs.sample_logistic(
        X, y, _chain(3), n_chains=1, n_iter=1500, burn_in=500, seed=5
    )
    assert draws.family == "logistic"
    assert draws.names == ["0", "1", "2", "lambda2"]
    mean = draws.posterior_mean()[0]
    assert mean[0] < mean[1] < mean[2]


def test_multinomial_names_and_shapes():
    rng = np.random.default_rng(6)
    levels = np.repeat(np.arange(3), 30)
    X = np.eye(3)[levels]
    y = rng.integers(0, 3, 90)
    draws = gibbs.sample_multinomial(
        X,
        y,
        _chain(3),
        category_names=["a", "b"],
        n_chains=2,
        n_iter=200,
        burn_in=100,
        seed=7,
        n_jobs=1,
    )
    assert draws.n_blocks == 2
    assert draws.names[:4] == ["a|0", "a|1", "a|2", "b|0"]
    assert draws.names[-1] == "lambda2"
    assert draws.stack("beta").shape == (2, 100, 2, 3)


@pytest.mark.parametrize("suffix", ["bin", "csv"])
def test_draws_save_load(tmp_path, suffix):
    X, y = _grouped_data()
    draws = gibbs.sample_linear(
        X, y, _chain(3), n_chains=2, n_iter=60, burn_in=10, seed=1, n_jobs=1
    )
    filename = tmp_path / f"draws.{suffix}"
    draws.save(filename)
    loaded = PosteriorDraws.load(filename)
    assert loaded.names == draws.names
    for a, b in zip(draws.chains, loaded.chains):
        np.testing.assert_array_equal(a, b)
    if suffix == "bin":
        assert loaded.seeds == draws.seeds
        assert loaded.metadata["prior"] == draws.metadata["prior"]


def test_truncated_binary_draws(tmp_path):
    X, y = _grouped_data()
    draws = gibbs.sample_linear(X, y, _chain(3), n_chains=1, n_iter=60, burn_in=10, seed=1)
    filename = tmp_path / "draws.bin"
    draws.save(filename)
    content = filename.read_bytes()
    filename.write_bytes(content[:-8])
    with pytest.raises(ValueError):
        PosteriorDraws.load(filename)


def _prior_only_beta(lam, n_iter, thin, seed):
    cset = ConstraintSet.from_rows(np.array([[1.0]]))
    prior = PriorSpec(lambda_mode="fixed", lam=lam, sigma2=1.0)
    draws = gibbs.sample_linear(
        np.empty((0, 1)),
        np.empty(0),
        cset,
        prior=prior,
        n_chains=1,
        n_iter=n_iter,
        burn_in=1000,
        thin=thin,
        seed=seed,
    )
    return draws.pooled("0")


def test_prior_only_laplace_moments():
    beta = _prior_only_beta(2.0, 21000, 5, seed=8)
    # Laplace with scale 1 / lambda
    assert np.mean(np.abs(beta)) == pytest.approx(0.5, abs=0.05)
    assert abs(np.mean(beta)) < 0.05


@pytest.mark.slow
@pytest.mark.parametrize("seed", [9, 19, 29])
def test_prior_only_laplace_distribution(seed):
    beta = _prior_only_beta(2.0, 251000, 25, seed=seed)
    assert beta.size == 10000
    assert stats.kstest(beta, stats.laplace(scale=0.5).cdf).pvalue > 0.01


@pytest.mark.slow
def test_linear_joint_distribution():
    """Successive-conditional draws match independent draws from the joint."""
    rng = np.random.default_rng(10)
    N, p = 5, 2
    X = rng.standard_normal((N, p))
    cset = ConstraintSet.from_rows(np.eye(p))
    prior = PriorSpec(lambda_a=5.0, lambda_b=5.0, sigma_a=5.0, sigma_b=4.0)
    n = 20000

    def draw_joint(rng):
        lam2 = rng.gamma(5.0, 1 / 5.0)
        sigma2 = 1 / rng.gamma(5.0, 1 / 4.0)
        tau = rng.exponential(2 / lam2, p)
        beta = rng.standard_normal(p) * np.sqrt(sigma2 * tau)
        y = X @ beta + np.sqrt(sigma2) * rng.standard_normal(N)
        return beta, sigma2, lam2, tau, y

    marginal = []
    for _ in range(n):
        beta, sigma2, lam2, _, _ = draw_joint(rng)
        marginal.append([beta[0], beta[0] ** 2, sigma2, lam2])
    marginal = np.array(marginal)

    beta, sigma2, lam2, tau, y = draw_joint(rng)
    sampler = LinearGibbs(X, y, cset, prior)
    state = {
        "beta": beta,
        "sigma2": sigma2,
        "lam2": lam2,
        "inv_tau2": 1 / tau,
        "inv_xi2": np.empty(0),
    }
    successive = []
    for i in range(5 * n):
        sampler.step(state, rng)
        sampler.set_outcome(X @ state["beta"] + np.sqrt(state["sigma2"]) * rng.standard_normal(N))
        if i % 5 == 0:
            b = state["beta"][0]
            successive.append([b, b**2, state["sigma2"], state["lam2"]])
    successive = np.array(successive)

    for j in range(4):
        assert abs(_z_score(marginal[:, j], successive[:, j])) < 4


@pytest.mark.slow
def test_logistic_joint_distribution():
    """Successive-conditional draws match independent draws from the joint."""
    rng = np.random.default_rng(11)
    N, p = 5, 2
    X = rng.standard_normal((N, p))
    cset = ConstraintSet.from_rows(np.eye(p))
    prior = PriorSpec(lambda_a=5.0, lambda_b=5.0)
    n = 20000

    def draw_joint(rng):
        lam2 = rng.gamma(5.0, 1 / 5.0)
        tau = rng.exponential(2 / lam2, p)
        beta = rng.standard_normal(p) * np.sqrt(tau)
        y = (rng.random(N) < expit(X @ beta)).astype(int)
        return beta, lam2, tau, y

    marginal = []
    for _ in range(n):
        beta, lam2, _, _ = draw_joint(rng)
        marginal.append([beta[0], beta[0] ** 2, lam2])
    marginal = np.array(marginal)

    beta, lam2, tau, y = draw_joint(rng)
    sampler = MultinomialGibbs(X, 1 - y, cset, prior, n_categories=2)
    state = {
        "beta": beta[None, :].copy(),
        "lam2": lam2,
        "inv_tau2": (1 / tau)[None, :],
        "inv_xi2": np.empty((1, 0)),
    }
    successive = []
    for i in range(5 * n):
        sampler.step(state, rng)
        y = (rng.random(N) < expit(X @ state["beta"][0])).astype(int)
        sampler.set_outcome(1 - y)
        if i % 5 == 0:
            b = state["beta"][0, 0]
            successive.append([b, b**2, state["lam2"]])
    successive = np.array(successive)

    for j in range(3):
        assert abs(_z_score(marginal[:, j], successive[:, j])) < 4
