import csv
import json

import numpy as np
import pytest

import medshrink as ms
from medshrink.cli import main
from medshrink.io import write_dataset_csv


@pytest.fixture
def trial_csv(tmp_path):
    spec = ms.ScenarioSpec(eta=0.0, kappa=0.5, n=240)
    data = ms.generate_dataset(spec, seed=14)
    path = tmp_path / "trial.csv"
    write_dataset_csv(data, path)
    return str(path)


FIT_ARGS = [
    "--outcome", "y", "--treatment", "r", "--mediator", "m",
    "--covariates", "x",
]


def test_fit_runs_and_emits_table_and_json(trial_csv, tmp_path, capsys):
    out = tmp_path / "fit.json"
    code = main(
        ["fit", "--input", trial_csv, *FIT_ARGS,
         "--bootstrap-b", "40", "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    stdout = capsys.readouterr().out
    assert "NDE" in stdout and "shrinkage alpha" in stdout
    payload = json.loads(out.read_text())
    assert payload["seed"] == 3
    assert payload["config"]["covariates"] == ["x"]
    assert payload["config"]["cse_mode"] == "hausman"  # defaulted and echoed
    estimators = {row["estimator"] for row in payload["coefficients"]}
    assert estimators == {"ols", "tsls", "spsl"}
    assert "alpha_hat" in payload


def test_fit_byte_identical_under_same_seed(trial_csv, tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    for out in (out1, out2):
        assert main(
            ["fit", "--input", trial_csv, *FIT_ARGS,
             "--bootstrap-b", "40", "--seed", "9", "--out", str(out)]
        ) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_fit_config_file_with_flag_override(trial_csv, tmp_path, capsys):
    config = {
        "input": trial_csv,
        "outcome": "y",
        "treatment": "r",
        "mediator": "m",
        "covariates": ["x"],
        "bootstrap_b": 30,
        "seed": 1,
    }
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "fit.json"
    code = main(["fit", "--config", str(cfg), "--seed", "77", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["seed"] == 77  # flag wins over the file


def test_simulate_grid_row_count(tmp_path):
    out = tmp_path / "grid.json"
    code = main(["simulate", "--replications", "3", "--seed", "1", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    # Default grid: 3 etas x 3 kappas x 3 ns x 3 estimators x 2 estimands.
    assert len(payload["cells"]) == 162
    assert payload["config"]["replications"] == 3
    assert payload["cells"][0]["scenario"] == {"eta": 0.0, "kappa": 0.01, "n": 100}


def test_simulate_csv_output_and_replicate_dump(tmp_path):
    out = tmp_path / "grid.csv"
    dump = tmp_path / "reps.csv"
    code = main(
        ["simulate", "--etas", "0.25", "--kappas", "0.5", "--ns", "120",
         "--replications", "5", "--format", "csv", "--out", str(out),
         "--dump-replicates", str(dump)]
    )
    assert code == 0
    with open(out) as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 6
    with open(dump) as handle:
        reps = list(csv.DictReader(handle))
    assert len(reps) == 6 * 5


def test_diagnose_reports_f_statistic(trial_csv, tmp_path, capsys):
    out = tmp_path / "diag.json"
    code = main(["diagnose", "--input", trial_csv, *FIT_ARGS, "--out", str(out)])
    assert code == 0
    assert "first-stage F" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert {"f", "df1", "df2", "p"} <= set(payload)
    assert payload["df1"] == 1


def test_exit_code_2_on_config_error(trial_csv, capsys):
    code = main(
        ["fit", "--input", trial_csv, "--outcome", "y", "--treatment", "r",
         "--mediator", "nope", "--covariates", "x"]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("error:config:")


def test_exit_code_3_on_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,r,m,x\n1.0,2,0.5,0.1\n2.0,0,0.2,0.4\n")
    code = main(["fit", "--input", str(bad), *FIT_ARGS])
    assert code == 3
    assert capsys.readouterr().err.startswith("error:data:")


def test_exit_code_4_on_numeric_error(tmp_path, capsys):
    # Duplicated covariate column: the design is exactly collinear.
    rng = np.random.default_rng(0)
    rows = ["y,r,m,x,x2"]
    for i in range(40):
        x = rng.normal()
        rows.append(
            f"{rng.normal()!r},{i % 2},{rng.normal()!r},{x!r},{2 * x!r}"
        )
    bad = tmp_path / "collinear.csv"
    bad.write_text("\n".join(rows) + "\n")
    code = main(
        ["fit", "--input", str(bad), "--outcome", "y", "--treatment", "r",
         "--mediator", "m", "--covariates", "x,x2"]
    )
    assert code == 4
    assert capsys.readouterr().err.startswith("error:numeric:")


def test_missing_input_is_config_error(capsys):
    code = main(["fit", "--outcome", "y", "--treatment", "r", "--mediator", "m"])
    assert code == 2
