# tests/test_cli.py - Command-line surface and exit codes

import json

import numpy as np
import pandas as pd
import pytest

from mcsense.api.commands import solve as solve_command
from mcsense.api.services.errors import NumericalFailureError
from mcsense.api.services.grid_field import diagnose, energy_fraction, generate_field
from mcsense.api.services.matrix_io import read_matrix
from mcsense.config import CORRELATION_LENGTHS
from mcsense.main import main


def _gen_field(path, *extra):
    return main(["gen-field", "--n", "16", "--level", "high", "--seed", "1", "--out", str(path), *extra])


def test_gen_field_is_reproducible(tmp_path):
    assert _gen_field(tmp_path / "a.csv") == 0
    assert _gen_field(tmp_path / "b.csv") == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    header = json.loads((tmp_path / "a.csv.json").read_text())
    assert header["subcommand"] == "gen-field"
    assert header["resolved"]["length_scale"] == CORRELATION_LENGTHS["high"]
    assert header["correlation_lengths"] == CORRELATION_LENGTHS


def test_gen_field_binary(tmp_path):
    assert _gen_field(tmp_path / "f.bin", "--noise", "0.05") == 0
    assert read_matrix(tmp_path / "f.bin").shape == (16, 16)


def test_solve_pipeline(tmp_path):
    field, mask, estimate, trace = (tmp_path / name for name in ("f.csv", "m.csv", "est.csv", "trace.csv"))
    assert _gen_field(field) == 0
    assert main(["gen-mask", "--rows", "16", "--ratio", "0.5", "--scheme", "quasi-crystal",
                 "--seed", "2", "--out", str(mask)]) == 0
    assert (tmp_path / "m.csv.json").exists()

    code = main(["solve", "--field", str(field), "--mask", str(mask), "--p", "1", "--sigma", "auto",
                 "--truth", str(field), "--out", str(estimate), "--trace", str(trace)])
    assert code == 0
    assert read_matrix(estimate).shape == (16, 16)
    assert list(pd.read_csv(trace).columns) == ["outer", "inner", "lambda", "objective", "residual"]

    header = json.loads((tmp_path / "est.csv.json").read_text())
    assert header["resolved"]["nmse"] < 0.5
    assert header["resolved"]["sigma"] > 0


def test_bench_writes_schemas(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({
        "n": 10,
        "correlation_levels": ["high"],
        "schemes": ["random", "farthest-point"],
        "ratios": [0.3, 0.6],
        "noise_levels": [0.0],
        "algorithms": [{"name": "shrinkage", "p": 1.0}],
    }))
    out = tmp_path / "results"
    assert main(["bench", "--plan", str(plan), "--trials", "2", "--out", str(out)]) == 0

    records = pd.read_csv(out / "records.csv")
    assert len(records) == 2 * 2 * 2
    assert (out / "aggregates.csv").exists()
    assert json.loads((out / "run_config.json").read_text())["plan"]["trials"] == 2
    trends = json.loads((out / "trends.json").read_text())
    assert {check["name"] for check in trends["checks"]} >= {"ratio_monotone", "blue_noise_vs_random"}


def test_diagnose_matches_services(capsys):
    assert main(["diagnose", "--n", "32", "--level", "high", "--seed", "3", "--top-k", "6"]) == 0
    report = json.loads(capsys.readouterr().out)

    diag = diagnose(generate_field(32, "high", seed=3))
    assert report["coherence_mu"] == pytest.approx(diag.coherence_mu, abs=1e-12)
    for k in range(1, 7):
        assert report["energy_fractions"][str(k)] == pytest.approx(energy_fraction(diag, k), abs=1e-12)


def test_version_prints_correlation_lengths(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["--version"])
    assert exit_info.value.code == 0
    assert "correlation lengths" in capsys.readouterr().out


def test_unknown_flag_exits_with_one():
    with pytest.raises(SystemExit) as exit_info:
        main(["gen-field", "--bogus", "1", "--out", "x.csv"])
    assert exit_info.value.code == 1


def test_invalid_argument_exits_with_one(tmp_path):
    assert main(["gen-mask", "--rows", "8", "--ratio", "0", "--scheme", "random", "--out", str(tmp_path / "m.csv")]) == 1
    assert main(["gen-field", "--n", "1", "--out", str(tmp_path / "f.csv")]) == 1


def test_numerical_failure_exits_with_two(tmp_path, monkeypatch):
    field, mask = tmp_path / "f.csv", tmp_path / "m.csv"
    _gen_field(field)
    main(["gen-mask", "--rows", "16", "--ratio", "0.5", "--scheme", "random", "--out", str(mask)])

    def broken(obs, cfg):
        raise NumericalFailureError("SVD did not converge")

    monkeypatch.setattr(solve_command, "solve", broken)
    assert main(["solve", "--field", str(field), "--mask", str(mask), "--out", str(tmp_path / "e.csv")]) == 2


def test_config_file_overrides_flags(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"seed": 5, "n": 12}))
    out = tmp_path / "f.csv"
    assert main(["--config", str(config), "gen-field", "--n", "16", "--out", str(out)]) == 0
    assert np.array_equal(read_matrix(out), generate_field(12, "high", seed=5).values)


def test_config_file_unknown_key(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"ratio": 0.5}))
    assert main(["--config", str(config), "gen-field", "--out", str(tmp_path / "f.csv")]) == 1


def test_bench_rejects_empty_plan_axis(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"n": 8, "schemes": [], "trials": 1}))
    out = tmp_path / "results"
    assert main(["bench", "--plan", str(plan), "--out", str(out)]) == 1
    assert not (out / "records.csv").exists()


def test_solve_accepts_hard_rule_alias(tmp_path):
    field, mask = tmp_path / "f.csv", tmp_path / "m.csv"
    _gen_field(field)
    main(["gen-mask", "--rows", "16", "--ratio", "0.5", "--scheme", "random", "--seed", "3", "--out", str(mask)])
    for rule in ("paper", "half"):
        out = tmp_path / f"{rule}.csv"
        assert main(["solve", "--field", str(field), "--mask", str(mask), "--p", "0", "--hard-rule", rule,
                     "--out", str(out)]) == 0
    assert np.array_equal(read_matrix(tmp_path / "paper.csv"), read_matrix(tmp_path / "half.csv"))
