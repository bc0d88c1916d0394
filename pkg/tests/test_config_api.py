import json

import numpy as np
import pandas as pd
import pytest

from fusionlasso.config_api import pipeline, wrappers


@pytest.fixture
def records(tmp_path):
    rng = np.random.default_rng(4)
    n = 60
    frame = pd.DataFrame(
        {
            "Type": rng.choice(["A", "B", "C"], size=n),
            "x": rng.normal(size=n),
        }
    )
    means = frame["Type"].map({"A": 0.0, "B": 0.0, "C": 2.0})
    frame["y"] = means + 0.5 * frame["x"] + rng.normal(scale=0.5, size=n)
    frame.to_csv(tmp_path / "records.csv", index=False)

    config = {
        "columns": {"Type": "categorical", "x": "numeric", "y": "numeric"},
        "outcome": "y",
        "family": "linear",
        "formula": "Type + x",
        "intercept": False,
    }
    with open(tmp_path / "columns.json", "w") as f:
        json.dump(config, f)
    return tmp_path / "records.csv", tmp_path / "columns.json"


def test_load_data(records):
    inputs, config = records
    problem = wrappers.load_data(str(inputs), str(config))
    assert problem.X.shape == (60, 4)
    assert problem.family == "linear"
    assert problem.n_categories is None
    # Three levels fused agnostically
    assert problem.cset.K == 3

    sized = wrappers.load_data(str(inputs), str(config), weights="size")
    assert sized.cset.K == 3
    assert not np.allclose(sized.cset.weights, 1)

    with pytest.raises(ValueError):
        wrappers.load_data(str(inputs), str(config), weights="other")

    with pytest.raises(FileNotFoundError):
        wrappers.load_data(str(inputs), str(config.parent / "missing.json"))


def test_check_propriety_and_fit_em(records, tmp_path):
    problem = wrappers.load_data(*map(str, records))
    output_dir = tmp_path / "out"

    report = wrappers.check_propriety(problem, str(output_dir))
    assert report.posterior_proper
    with open(output_dir / "propriety.json") as f:
        assert json.load(f)["prior_proper"] is False

    solution = wrappers.fit_em(problem, str(output_dir), lam=0.5)
    assert solution.labels == list(problem.design.labels)
    with open(output_dir / "em_solution.json") as f:
        saved = json.load(f)
    assert saved["lambda"] == 0.5
    np.testing.assert_allclose(saved["beta_hat"], solution.beta_hat)

    table = pd.read_csv(output_dir / "coefficients.csv")
    assert len(table) == 4

    wrappers.fit_em(problem, str(output_dir), n_grid=5, n_jobs=1)
    assert (output_dir / "calibration.json").exists()
    assert len(pd.read_csv(output_dir / "path.csv")) == 5

    with pytest.raises(ValueError):
        wrappers.fit_em(None, str(output_dir), lam=1.0)


def test_sample_and_diagnose(records, tmp_path):
    problem = wrappers.load_data(*map(str, records))
    output_dir = tmp_path / "out"

    draws = wrappers.sample(
        problem,
        str(output_dir),
        seed=5,
        n_chains=2,
        n_iter=400,
        burn_in=100,
        n_jobs=1,
        draws_format="csv",
    )
    assert draws.n_draws == 300
    summary = pd.read_csv(output_dir / "summary.csv")
    assert list(summary["parameter"]) == draws.parameter_names()

    report = wrappers.diagnose(None, str(output_dir), draws=str(output_dir / "draws.csv"))
    assert report.parameters == draws.parameter_names()
    with open(output_dir / "diagnostics.json") as f:
        saved = json.load(f)
    assert len(saved["parameters"]) == len(report.parameters)
    assert (output_dir / "flagged.csv").exists()

    with pytest.raises(ValueError):
        wrappers.sample(problem, str(output_dir), seed=5, draws_format="parquet")


def test_load_config():
    config = pipeline.load_config("check_propriety:\nfit_em:\n  lam: 2.0\n")
    assert config == {"check_propriety": None, "fit_em": {"lam": 2.0}}
    assert pipeline.load_config({"a": {}}) == {"a": {}}

    with pytest.raises(ValueError):
        pipeline.load_config(["fit_em"])
    with pytest.raises(ValueError):
        pipeline.load_config("just a string")


def test_find_function():
    assert pipeline.find_function("fit_em") is wrappers.fit_em

    def custom(data, output_dir):
        return output_dir

    assert pipeline.find_function("custom", extra_funcs=[custom]) is custom
    with pytest.raises(ValueError):
        pipeline.find_function("load_data")
    with pytest.raises(ValueError):
        pipeline.find_function("unknown")


def test_run_config_seed(monkeypatch):
    monkeypatch.delenv("FUSIONLASSO_SEED", raising=False)
    with pytest.raises(ValueError, match="needs a seed"):
        pipeline.RunConfig(config={"sample": {}})

    # Calibration without folds is deterministic
    run = pipeline.RunConfig(config={"calibrate": {"folds": 0}})
    assert "seed" not in run.config["calibrate"]

    run = pipeline.RunConfig(config={"sample": None}, seed=9)
    assert run.config["sample"]["seed"] == 9
    assert run.seed == 9

    monkeypatch.setenv("FUSIONLASSO_SEED", "13")
    run = pipeline.RunConfig(config={"simulate": {}})
    assert run.config["simulate"]["seed"] == 13


def test_run_pipeline(records, tmp_path):
    inputs, config = records
    output_dir = tmp_path / "out"
    results = pipeline.run_pipeline(
        {
            "load_data": {"inputs": str(inputs), "config": str(config)},
            "check_propriety": {},
            "fit_em": {"lam": 1.0},
        },
        str(output_dir),
        strict=True,
    )
    assert list(results) == ["check_propriety", "fit_em"]
    assert results["check_propriety"].posterior_proper
    assert results["fit_em"].lam == 1.0

    with open(output_dir / "run.json") as f:
        record = json.load(f)
    assert record["config"]["load_data"]["inputs"] == str(inputs.resolve())
    assert "numpy" in record["versions"]

    # Errors are logged and the remaining steps run unless strict
    results = pipeline.run_pipeline(
        {"fit_em": {"lam": 1.0}, "check_propriety": {}}, str(output_dir)
    )
    assert results == {}
    with pytest.raises(ValueError):
        pipeline.run_pipeline({"fit_em": {"lam": 1.0}}, str(output_dir), strict=True)


def test_cli_simulate_reproducible(tmp_path):
    argv = [
        "simulate",
        "--seed", "3",
        "--G", "6",
        "--r", "10",
        "--S", "2",
        "--reps", "1",
        "--grid", "5",
        "--mc-draws", "20",
        "--threads", "1",
    ]
    assert pipeline.main(argv + ["-o", str(tmp_path / "a")]) == 0
    assert pipeline.main(argv + ["-o", str(tmp_path / "b")]) == 0

    rmse_a = (tmp_path / "a" / "rmse.csv").read_bytes()
    assert rmse_a == (tmp_path / "b" / "rmse.csv").read_bytes()

    with open(tmp_path / "a" / "run.json") as f:
        record = json.load(f)
    assert record["subcommand"] == "simulate"
    assert record["seed"] == 3
    assert record["config"]["simulate"]["G"] == 6

    rerun = ["simulate", "--from-run", str(tmp_path / "a" / "run.json")]
    assert pipeline.main(rerun + ["-o", str(tmp_path / "c")]) == 0
    assert rmse_a == (tmp_path / "c" / "rmse.csv").read_bytes()


def test_cli_errors(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("FUSIONLASSO_SEED", raising=False)
    assert pipeline.main(["simulate", "-o", str(tmp_path)]) == 2
    assert "needs a seed" in capsys.readouterr().err

    assert pipeline.main(["fit-em", "-o", str(tmp_path)]) == 2
    assert pipeline.main(["diagnose", "-o", str(tmp_path)]) == 2
    assert pipeline.main(["check-propriety", "-o", str(tmp_path)]) == 2

    missing = ["--data", str(tmp_path / "missing.csv"), "--config", str(tmp_path / "c.json")]
    assert pipeline.main(["fit-em", "-o", str(tmp_path)] + missing) == 2


def test_cli_fit_em(records, tmp_path):
    inputs, config = records
    argv = [
        "fit-em",
        "--data", str(inputs),
        "--config", str(config),
        "--lambda", "0.5",
        "-o", str(tmp_path / "out"),
    ]
    assert pipeline.main(argv) == 0
    with open(tmp_path / "out" / "em_solution.json") as f:
        assert json.load(f)["lambda"] == 0.5

    with pytest.raises(SystemExit):
        pipeline.main(argv[:-2] + ["--lambda", "big"])
