import numpy as np
import pytest

from fusionlasso.analysis import diagnostics
from fusionlasso.models.gibbs import PosteriorDraws


def test_gelman_rubin_iid_chains():
    rng = np.random.default_rng(0)
    rhat = diagnostics.gelman_rubin(rng.standard_normal((4, 1000)))
    assert rhat.point < 1.05
    assert rhat.upper >= rhat.point
    assert not rhat.degenerate


def test_gelman_rubin_shifted_chains():
    rng = np.random.default_rng(1)
    chains = rng.standard_normal((4, 1000)) + np.array([0.0, 0.0, 0.0, 5.0])[:, None]
    assert diagnostics.gelman_rubin(chains).point > 1.5


def test_gelman_rubin_split_detects_drift():
    rng = np.random.default_rng(2)
    chains = rng.standard_normal((2, 1000)) + np.linspace(0, 5, 1000)
    assert diagnostics.gelman_rubin(chains, split=True).point > 1.5
    assert diagnostics.gelman_rubin(chains, split=False).point < 1.1


def test_gelman_rubin_degenerate():
    rng = np.random.default_rng(3)
    chain = rng.standard_normal(100)
    rhat = diagnostics.gelman_rubin(np.stack([chain, chain]))
    assert rhat.degenerate
    assert rhat.point == 1.0
    assert diagnostics.gelman_rubin(np.ones((3, 100))).degenerate


def test_gelman_rubin_invalid():
    with pytest.raises(ValueError):
        diagnostics.gelman_rubin(np.zeros((1, 100)))
    with pytest.raises(ValueError):
        diagnostics.gelman_rubin(np.random.default_rng(0).standard_normal((2, 10)))


def test_spectrum0_of_white_noise():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(10000)
    assert 0.3 < diagnostics.spectrum0(x) < 1.8


def test_spectrum0_of_ar1():
    rng = np.random.default_rng(5)
    rho = 0.5
    x = np.zeros(20000)
    for t in range(1, x.size):
        x[t] = rho * x[t - 1] + rng.standard_normal()
    # Long-run variance of an AR(1) with unit innovations is 4
    assert 1.5 < diagnostics.spectrum0(x) < 8.0


def test_geweke():
    rng = np.random.default_rng(6)
    stationary = rng.standard_normal(1000)
    assert abs(diagnostics.geweke(stationary)) < 3
    trend = stationary + np.linspace(0, 3, 1000)
    assert abs(diagnostics.geweke(trend)) > 1.96


@pytest.mark.slow
def test_geweke_null_pass_rate():
    passes = 0
    for seed in range(100):
        chain = np.random.default_rng(seed).standard_normal(2000)
        passes += abs(diagnostics.geweke(chain)) < 1.96
    assert passes >= 90


def test_geweke_invalid():
    with pytest.raises(ValueError):
        diagnostics.geweke(np.ones(500))
    with pytest.raises(ValueError):
        diagnostics.geweke(np.random.default_rng(0).standard_normal(100))
    with pytest.raises(ValueError):
        diagnostics.geweke(np.random.default_rng(0).standard_normal(500), first=0.6, last=0.6)


def test_diagnose_flags_stuck_parameter():
    rng = np.random.default_rng(7)
    n = 1000
    good = rng.standard_normal((2, n))
    stuck = rng.standard_normal((2, n)) + np.array([0.0, 4.0])[:, None]
    chains = [np.column_stack([good[i], stuck[i], np.full(n, 1.0)]) for i in range(2)]
    draws = PosteriorDraws(names=["a", "b", "lambda2"], chains=chains)

    report = diagnostics.diagnose(draws)
    assert list(report.rhat_flags) == [False, True, False]
    assert list(report.degenerate) == [False, False, True]
    flagged = report.flagged_frame()
    assert "b" in list(flagged["parameter"])
    assert "lambda2" not in list(flagged["parameter"])
    assert report.to_dict()["n_flagged"] == len(flagged)


def test_diagnose_short_chains_skip_geweke():
    rng = np.random.default_rng(8)
    chains = [rng.standard_normal((100, 2)) for _ in range(2)]
    report = diagnostics.diagnose(PosteriorDraws(names=["a", "lambda2"], chains=chains))
    assert np.all(np.isnan(report.geweke))
    assert not report.geweke_flags.any()
