from types import SimpleNamespace

import numpy as np
import pytest
from scipy import stats

from fusionlasso.analysis import calibrate
from fusionlasso.models import gibbs
from fusionlasso.models.gibbs import PosteriorDraws
from fusionlasso.structure import (
    ConstraintSet,
    StructureGraph,
    build_agnostic,
    compile_constraints,
)


def _chain(p=3):
    return compile_constraints(StructureGraph(p, [(i, i + 1) for i in range(p - 1)]))


def _grouped_data(seed=0, n_per_level=4):
    rng = np.random.default_rng(seed)
    levels = np.repeat(np.arange(3), n_per_level)
    X = np.eye(3)[levels]
    y = np.array([0.0, 0.2, 2.0])[levels] + 0.3 * rng.standard_normal(levels.size)
    return X, y


def test_df_estimate():
    cset = _chain(3)
    assert calibrate.df_estimate(SimpleNamespace(binding_set=[], n_blocks=1), cset) == 3
    assert calibrate.df_estimate(SimpleNamespace(binding_set=[0], n_blocks=1), cset) == 2
    assert calibrate.df_estimate(SimpleNamespace(binding_set=[0, 1], n_blocks=1), cset) == 1
    multinomial = SimpleNamespace(binding_set=[[0], []], n_blocks=2)
    assert calibrate.df_estimate(multinomial, cset) == 5


def test_df_estimate_redundant_rows():
    # Binding all three agnostic rows only removes two dimensions
    cset = compile_constraints(build_agnostic(range(3)))
    sol = SimpleNamespace(binding_set=[0, 1, 2], n_blocks=1)
    assert calibrate.df_estimate(sol, cset) == 1


def test_default_grid():
    X, y = _grouped_data()
    grid = calibrate.default_grid(X, y, n=5)
    scale = np.max(np.abs(X.T @ y)) / X.shape[0]
    assert grid.shape == (5,)
    np.testing.assert_allclose(grid[[0, -1]], [1e-3 * scale, 1e3 * scale])
    assert np.all(np.diff(grid) > 0)
    with pytest.raises(ValueError):
        calibrate.default_grid(X, y, n=1)


def test_aic_grid():
    X, y = _grouped_data(n_per_level=10)
    result = calibrate.aic_grid(X, y, _chain(3), n_grid=10)
    assert len(result.grid) == 10
    assert result.lambda_star in result.lambdas
    assert result.solution.lam == result.lambda_star
    best = np.nanmin([point["aic"] for point in result.grid])
    assert result.solution.aic == pytest.approx(best)
    assert result.anchored_prior == calibrate.anchor_prior(result.lambda_star)
    assert list(result.path_frame().columns) == ["lam", "df", "log_lik", "aic", "converged"]
    assert result.to_dict()["df_star"] == result.solution.df


def test_aic_tie_picks_largest_lambda():
    X, y = _grouped_data()
    result = calibrate.aic_grid(X, y, _chain(3), grid=[1e5, 1e6])
    assert result.grid[0]["aic"] == pytest.approx(result.grid[1]["aic"])
    assert result.lambda_star == 1e6
    assert result.solution.df == 1


def test_cold_start_matches_warm_start():
    X, y = _grouped_data(n_per_level=10)
    grid = np.geomspace(0.01, 10, 4)
    warm = calibrate.aic_grid(X, y, _chain(3), grid=grid)
    cold = calibrate.aic_grid(X, y, _chain(3), grid=grid, warm_start=False, n_jobs=1)
    np.testing.assert_allclose(
        [p["df"] for p in warm.grid], [p["df"] for p in cold.grid]
    )
    assert warm.lambda_star == cold.lambda_star


@pytest.mark.parametrize("grid", [[1.0], [2.0, 1.0], [0.0, 1.0]])
def test_invalid_grid(grid):
    X, y = _grouped_data()
    with pytest.raises(ValueError):
        calibrate.aic_grid(X, y, _chain(3), grid=grid)


def test_anchor_prior():
    assert calibrate.anchor_prior(1.0) == (2.0, 2.0)
    shape, rate = calibrate.anchor_prior(3.0)
    assert shape == 2.0
    assert rate == pytest.approx(2 / 9)
    with pytest.raises(ValueError):
        calibrate.anchor_prior(0.0)


def _constant_draws(beta, sigma2, n_draws):
    row = np.concatenate([beta, [1.0, sigma2]])
    names = [str(i) for i in range(len(beta))] + ["lambda2", "sigma2"]
    return PosteriorDraws(names=names, chains=[np.tile(row, (n_draws, 1))], family="linear")


def test_waic_of_point_mass():
    X, y = _grouped_data()
    beta = np.array([0.0, 0.2, 2.0])
    draws = _constant_draws(beta, 0.09, 100)
    expected = -2 * np.sum(stats.norm.logpdf(y, X @ beta, 0.3))
    assert calibrate.waic(draws, X, y) == pytest.approx(expected)

    with pytest.raises(ValueError):
        calibrate.waic(_constant_draws(beta, 0.09, 50), X, y)


def test_leave_one_out_matches_direct_refits():
    X, y = _grouped_data()
    cset = _chain(3)
    grid = np.geomspace(0.01, 10, 5)
    cv = calibrate.kfold_cv(X, y, cset, folds=len(y), grid=grid, seed=0, n_jobs=1)

    errors = []
    for i in range(len(y)):
        train = np.delete(np.arange(len(y)), i)
        result = calibrate.aic_grid(X[train], y[train], cset, grid=grid, check=False)
        errors.append(y[i] - result.solution.predict(X[[i]])[0])
    np.testing.assert_allclose(cv, np.sqrt(np.mean(np.square(errors))), rtol=1e-8)


def test_kfold_cv_is_seeded():
    X, y = _grouped_data(n_per_level=6)
    grid = np.geomspace(0.01, 10, 4)
    a = calibrate.kfold_cv(X, y, _chain(3), folds=3, grid=grid, seed=4, n_jobs=1)
    b = calibrate.kfold_cv(X, y, _chain(3), folds=3, grid=grid, seed=4, n_jobs=1)
    assert a == b


def test_kfold_cv_invalid_folds():
    X, y = _grouped_data()
    with pytest.raises(ValueError):
        calibrate.kfold_cv(X, y, _chain(3), folds=1)
    with pytest.raises(ValueError):
        calibrate.kfold_cv(X, y, _chain(3), folds=len(y) + 1)


def _waic_of(X, y, seed):
    cset = ConstraintSet.from_rows(np.eye(X.shape[1]))
    draws = gibbs.sample_linear(
        X, y, cset, n_chains=1, n_iter=1500, burn_in=500, seed=seed, n_jobs=1
    )
    return calibrate.waic(draws, X, y, "linear")


@pytest.mark.slow
def test_waic_prefers_generating_model():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((100, 2))
        y = 1 + x[:, 0] + 0.5 * x[:, 1] + rng.standard_normal(100)
        full = np.column_stack([np.ones(100), x])
        wins += _waic_of(full, y, seed) < _waic_of(full[:, :2], y, seed)
    assert wins >= 18
