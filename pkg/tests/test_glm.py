import numpy as np
import pytest
from scipy.special import expit

from fusionlasso.models import families, glm


def test_get_family():
    assert families.get_family("logistic").name == "logistic"
    family = families.Multinomial()
    assert families.get_family(family) is family
    with pytest.raises(ValueError):
        families.get_family("poisson")


def test_validate_outcomes():
    with pytest.raises(ValueError):
        families.Logistic().validate([0, 2])
    with pytest.raises(ValueError):
        families.Linear().validate([0.0, np.inf])
    with pytest.raises(ValueError):
        families.Multinomial().validate([0, 0, 0])


def test_multinomial_mean_rows_sum_to_one():
    rng = np.random.default_rng(0)
    mean = families.Multinomial().mean(rng.standard_normal((10, 2)))
    assert mean.shape == (10, 3)
    np.testing.assert_allclose(mean.sum(axis=1), np.ones(10))


def test_linear_mle_is_least_squares():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 3))
    y = X @ [1.0, -2.0, 0.5] + rng.standard_normal(50)
    fit = glm.fit_mle(X, y, "linear")
    np.testing.assert_allclose(fit.beta[0], np.linalg.lstsq(X, y, rcond=None)[0])
    assert fit.converged


def test_logistic_mle_recovers_truth():
    rng = np.random.default_rng(2)
    X = np.column_stack([np.ones(2000), rng.standard_normal(2000)])
    truth = np.array([-0.5, 1.0])
    y = (rng.random(2000) < expit(X @ truth)).astype(int)
    fit = glm.fit_mle(X, y, "logistic")
    assert fit.converged
    assert not fit.diverged
    np.testing.assert_allclose(fit.beta[0], truth, atol=0.2)

    # Score equations hold at the optimum
    grad = X.T @ (y - expit(X @ fit.beta[0]))
    np.testing.assert_allclose(grad, 0.0, atol=1e-3)


def test_logistic_mle_separated():
    x = np.array([-2.0, -1.0, 1.0, 2.0])
    X = np.column_stack([np.ones(4), x])
    fit = glm.fit_mle(X, (x > 0).astype(int), "logistic")
    assert fit.diverged
    assert not fit.converged


def test_multinomial_mle():
    rng = np.random.default_rng(3)
    X = np.column_stack([np.ones(600), rng.standard_normal(600)])
    truth = np.array([[0.5, 1.0], [-0.5, -1.0]])
    probs = families.Multinomial().mean(X @ truth.T)
    y = np.array([rng.choice(3, p=row) for row in probs])
    fit = glm.fit_mle(X, y, "multinomial")
    assert fit.converged
    assert fit.beta.shape == (2, 2)
    np.testing.assert_allclose(fit.beta, truth, atol=0.35)


def test_ridge_pilot_is_finite_on_separated_data():
    x = np.array([-2.0, -1.0, 1.0, 2.0])
    X = np.column_stack([np.ones(4), x])
    beta = glm.ridge_pilot(X, (x > 0).astype(int), "logistic", strength=0.1)
    assert beta.shape == (1, 2)
    assert np.all(np.isfinite(beta))
    assert beta[0, 1] > 0


def test_penalty_matrix_ridge():
    rng = np.random.default_rng(7)
    X = np.column_stack([np.ones(60), rng.standard_normal((60, 2))])
    R = np.diag([0.0, 5.0, 2.0])

    y = X @ [0.5, 1.0, -1.0] + rng.standard_normal(60)
    fit = glm.fit_mle(X, y, "linear", ridge=R)
    np.testing.assert_allclose(fit.beta[0], np.linalg.solve(X.T @ X + R, X.T @ y))
    pilot = glm.ridge_pilot(X, y, "linear", strength=0.0, penalty=R)
    np.testing.assert_allclose(pilot, fit.beta)

    # Penalised score equations hold at the logistic optimum
    y = (rng.random(60) < expit(X @ [0.2, 1.0, -1.0])).astype(int)
    fit = glm.fit_mle(X, y, "logistic", ridge=R)
    assert fit.converged
    beta = fit.beta[0]
    np.testing.assert_allclose(X.T @ (y - expit(X @ beta)), R @ beta, atol=1e-6)

    with pytest.raises(ValueError):
        glm.fit_mle(X, y, "logistic", ridge=np.eye(2))


def _treated_design():
    treated = np.tile([1, 1, 0, 0], 2)
    return np.column_stack([np.ones(8), treated]), treated


def test_separation_score():
    X, treated = _treated_design()
    assert glm.separation_score(X, treated, "logistic") > 0
    assert glm.is_separated(X, treated, "logistic")

    # Quasi-complete: treated records are all 1, untreated overlap
    assert glm.is_separated(X, [1, 1, 0, 1, 1, 1, 1, 0], "logistic")

    assert glm.separation_score(X, [1, 0, 0, 1, 1, 0, 1, 0], "logistic") == pytest.approx(0.0, abs=1e-9)
    assert not glm.is_separated(X, [1, 0, 0, 1, 1, 0, 1, 0], "logistic")

    with pytest.raises(ValueError):
        glm.separation_score(X, treated.astype(float), "linear")


def test_separation_score_multinomial():
    x = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    X = np.column_stack([np.ones(6), x])
    assert glm.is_separated(X, [0, 0, 1, 1, 2, 2], "multinomial")
    assert not glm.is_separated(X, [0, 1, 2, 2, 1, 0], "multinomial")

    rng = np.random.default_rng(3)
    X = np.column_stack([np.ones(300), rng.standard_normal(300)])
    probs = families.Multinomial().mean(X @ np.array([[0.5, 1.0], [-0.5, -1.0]]).T)
    y = np.array([rng.choice(3, p=row) for row in probs])
    assert not glm.is_separated(X, y, "multinomial")

    # A category which is never observed has an infinite MLE
    assert glm.is_separated(X, y, "multinomial", n_categories=4)


def test_logistic_mle_quasi_separated():
    X, _ = _treated_design()
    fit = glm.fit_mle(X, [1, 1, 0, 1, 1, 1, 1, 0], "logistic")
    assert fit.diverged
    assert not fit.converged

    fit = glm.fit_mle(X, [1, 0, 0, 1, 1, 0, 1, 0], "logistic")
    assert fit.converged
    assert not fit.diverged
    np.testing.assert_allclose(fit.beta[0], [0.0, 0.0], atol=1e-8)

    # A ridge keeps the estimate finite
    fit = glm.fit_mle(X, [1, 1, 0, 1, 1, 1, 1, 0], "logistic", ridge=0.1)
    assert fit.converged
    assert not fit.diverged
