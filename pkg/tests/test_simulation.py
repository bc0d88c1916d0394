import logging

import numpy as np
import pandas as pd
import pytest

from fusionlasso.data import expand_design
from fusionlasso.simulation import (
    METHODS,
    FittedMethod,
    GroupedHeterogeneity,
    SimulationSpec,
    fit_method,
    generate,
    mc_treatment_effects,
    run_benchmark,
    unit_effects,
)
from fusionlasso.simulation.benchmark import (
    HETEROGENEOUS_FORMULA,
    unit_precision,
    unit_variance,
)


def _small_spec(family="linear", **kwargs):
    return SimulationSpec(G=6, r=10, S=2, family=family, seed=1, replicates=2, **kwargs)


@pytest.mark.parametrize("G, S, counts", [(25, 12, (12, 1, 12)), (25, 6, (6, 13, 6))])
def test_unit_effects(G, S, counts):
    tau = unit_effects(G, S)
    assert tau.shape == (G,)
    assert (np.sum(tau == -1), np.sum(tau == 0), np.sum(tau == 1)) == counts


def test_invalid_spec():
    with pytest.raises(ValueError):
        SimulationSpec(G=4, S=3)
    with pytest.raises(ValueError):
        SimulationSpec(family="poisson")
    with pytest.raises(ValueError):
        unit_effects(4, 3)


def test_generate(tmp_path):
    spec = _small_spec()
    sim = generate(spec, 3)
    assert len(sim) == spec.N
    assert sim.shape == (spec.N, 4)
    assert list(sim.frame.columns) == ["unit", "treated", "x", "y"]
    treated_per_unit = sim.frame.groupby("unit")["treated"].sum()
    assert np.all(treated_per_unit == spec.r // 2)
    assert sim.units == ["u1", "u2", "u3", "u4", "u5", "u6"]

    again = generate(spec, 3)
    pd.testing.assert_frame_equal(sim.frame, again.frame)

    sim.save(tmp_path / "sim" / "records.csv")
    saved = pd.read_csv(tmp_path / "sim" / "records.csv")
    np.testing.assert_allclose(saved["x"], sim.frame["x"])

    with pytest.raises(NameError):
        GroupedHeterogeneity(spec).shape


def test_generate_binomial():
    sim = generate(_small_spec("binomial"), 4)
    assert set(sim.frame["y"].unique()) <= {0, 1}
    assert sim.dataset().family == "logistic"


def test_design_layout():
    spec = _small_spec()
    design = expand_design(generate(spec, 5).dataset(), HETEROGENEOUS_FORMULA, intercept=False)
    assert design.n_coefs == 2 * spec.G + 1
    assert design.terms == [("unit",), ("x",), ("treated", "unit")]


def test_linear_effects_are_coefficients():
    spec = _small_spec()
    sim = generate(spec, 6)
    G = spec.G
    rng = np.random.default_rng(0)
    beta = rng.standard_normal(2 * G + 1)
    model = FittedMethod("fe", beta, "linear", HETEROGENEOUS_FORMULA, sim.columns_config())
    effects = mc_treatment_effects(model, sim.units, rng.standard_normal(50))
    np.testing.assert_allclose(effects, beta[G + 1 :])


def test_logistic_effects_have_coefficient_signs():
    spec = _small_spec("binomial")
    sim = generate(spec, 7)
    G = spec.G
    beta = np.concatenate([np.zeros(G), [1.0], np.linspace(-2, 2, G)])
    model = FittedMethod("fe", beta, "logistic", HETEROGENEOUS_FORMULA, sim.columns_config())
    effects = mc_treatment_effects(model, sim.units, np.random.default_rng(1).standard_normal(200))
    np.testing.assert_array_equal(np.sign(effects), np.sign(beta[G + 1 :]))
    assert np.all(np.abs(effects) < 1)


@pytest.mark.parametrize("method", METHODS)
def test_fit_method(method):
    sim = generate(_small_spec(), 8)
    model = fit_method(sim, method, n_grid=5)
    assert model.name == method
    assert np.all(np.isfinite(model.beta))
    effects = mc_treatment_effects(model, sim.units, np.zeros(1))
    assert effects.shape == (6,)
    if method == "pooled":
        assert np.ptp(effects) < 1e-12
    if method in ["ssp", "assp"]:
        assert model.details["lambda_star"] > 0


def test_fit_method_invalid():
    with pytest.raises(ValueError):
        fit_method(generate(_small_spec(), 9), "lasso")


def test_run_benchmark():
    spec = _small_spec()
    result = run_benchmark(spec, n_grid=5, n_mc=50, n_jobs=1)
    assert len(result.rmse) == spec.replicates * len(METHODS)
    assert len(result.effects) == spec.replicates * len(METHODS) * spec.G

    summary = result.summary_frame()
    assert list(summary["method"]) == METHODS
    assert np.all(summary["n_ok"] + summary["n_failed"] == spec.replicates)
    assert set(result.to_dict()) == {"spec", "summary"}

    again = run_benchmark(spec, n_grid=5, n_mc=50, n_jobs=1)
    pd.testing.assert_frame_equal(result.rmse, again.rmse)


def test_run_benchmark_invalid_method():
    with pytest.raises(ValueError):
        run_benchmark(_small_spec(), methods=["ssp", "lasso"])


def _gap_exceeds_noise(summary, better, worse):
    low, high = summary.loc[better], summary.loc[worse]
    gap = high["mean_rmse"] - low["mean_rmse"]
    return gap > 2 * np.hypot(low["se"], high["se"])


def test_unit_variance():
    spec = SimulationSpec(G=25, r=20, S=6, seed=2024, replicates=1)
    sim = generate(spec, 0)
    design = expand_design(sim.dataset(), HETEROGENEOUS_FORMULA, intercept=False)
    unit = design.term_indices("unit")
    X, y = design.values, sim.dataset().outcome_array()

    # Simulated units share a zero intercept
    variance, scale = unit_variance(X, y, "linear", unit)
    assert 0 <= variance < 0.1
    assert 0.7 < scale < 1.3

    shift = np.repeat(np.linspace(-3, 3, spec.G), spec.r)
    variance, _ = unit_variance(X, y + shift, "linear", unit)
    assert 2 < variance < 5
    assert unit_precision(X, y + shift, "linear", unit) < 1

    assert unit_precision(X, y, "linear", unit) <= spec.N


def test_fit_ssp_logs_unit_penalty(caplog):
    sim = generate(_small_spec(), 10)
    with caplog.at_level(logging.INFO, logger="fusionlasso"):
        model = fit_method(sim, "ssp", n_grid=5)
    assert "in place of a unit random effect" in caplog.text
    assert model.details["unit_precision"] > 0


@pytest.mark.slow
def test_grouped_effects_rmse():
    spec = SimulationSpec(G=25, r=20, S=12, seed=2024, replicates=100)
    result = run_benchmark(spec, methods=["ssp", "assp", "fe"], n_grid=50, n_mc=1000)
    summary = result.summary_frame().set_index("method")
    assert np.all(summary["n_failed"] == 0)

    rmse = summary["mean_rmse"]
    assert 0.18 <= rmse["assp"] <= 0.28
    assert 0.23 <= rmse["ssp"] <= 0.33
    assert 0.39 <= rmse["fe"] <= 0.50
    assert _gap_exceeds_noise(summary, "assp", "ssp")
    assert _gap_exceeds_noise(summary, "ssp", "fe")


@pytest.mark.slow
def test_sparse_effects_rmse():
    spec = SimulationSpec(G=25, r=20, S=6, seed=2024, replicates=100)
    result = run_benchmark(spec, methods=["ssp", "fe"], n_grid=50, n_mc=1000)
    summary = result.summary_frame().set_index("method")
    assert np.all(summary["n_failed"] == 0)

    assert 0.24 <= summary.loc["ssp", "mean_rmse"] <= 0.34
    assert _gap_exceeds_noise(summary, "ssp", "fe")
