import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest
import yaml

from didsens import cli
from didsens.cli import read_quadruples_csv

SCHEMA = json.loads(
    (Path(cli.__file__).parent / "schemas" / "report.schema.json").read_text()
)


def _validate(report):
    jsonschema.validate(report, SCHEMA)


def write_dataset(path, n_treated=14, n_control=20, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    uid = 0
    for period in (1, 2):
        for z, count in ((1, n_treated), (0, n_control)):
            for _ in range(count):
                x = float(rng.normal(0.3 * z, 1.0))
                site = str(rng.choice(["a", "b"]))
                y = float(rng.normal(0.8 * z * (period - 1), 1.0) + 0.5 * x)
                rows.append([f"u{uid}", period, z, round(y, 4), round(x, 4), site])
                uid += 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["unit", "period", "z", "y", "x", "site"])
        w.writerows(rows)


def write_config(path, data_path, out_dir, **overrides):
    cfg = {
        "input": str(data_path),
        "output_dir": str(out_dir),
        "seed": 7,
        "outcome": {"column": "y", "kind": "continuous"},
        "period": {"column": "period"},
        "treatment": {"column": "z"},
        "id": {"column": "unit"},
        "covariates": {
            "x": {"role": "continuous", "threshold": 0.2},
            "site": {"role": "nominal", "balance": "fine"},
        },
        "test": "signed_rank",
        "alpha": 0.05,
        "gammas": [1.0, 1.3, 1.6, 2.0],
        "amplification_lambdas": [3.0],
    }
    cfg.update(overrides)
    path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
    return path


@pytest.fixture
def matched(tmp_path):
    data = tmp_path / "data.csv"
    write_dataset(data)
    out = tmp_path / "out"
    config = write_config(tmp_path / "config.yaml", data, out)
    assert cli.main(["match", "--config", str(config)]) == 0
    return config, out


def test_match_writes_all_artifacts(matched):
    _, out = matched
    for name in ("pairs_pre.csv", "pairs_post.csv", "quadruples.csv", "balance.csv"):
        assert (out / name).exists()
    with (out / "quadruples.csv").open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) >= 5
    for row in rows:
        post_diff = float(row["post_treated_outcome"]) - float(row["post_control_outcome"])
        pre_diff = float(row["pre_treated_outcome"]) - float(row["pre_control_outcome"])
        assert float(row["d"]) == post_diff - pre_diff
    with (out / "balance.csv").open(newline="") as fh:
        stages = {r["stage"] for r in csv.DictReader(fh)}
    assert stages == {"period1", "period2", "cross"}


def test_match_is_byte_deterministic(tmp_path):
    data = tmp_path / "data.csv"
    write_dataset(data)
    outs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        config = write_config(tmp_path / f"c_{tag}.yaml", data, out)
        assert cli.main(["match", "--config", str(config)]) == 0
        outs.append(out)
    for name in ("pairs_pre.csv", "pairs_post.csv", "quadruples.csv", "balance.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_quadruples_csv_round_trips(matched):
    _, out = matched
    quads = read_quadruples_csv(str(out / "quadruples.csv"), "continuous")
    with (out / "quadruples.csv").open(newline="") as fh:
        stored = [float(r["d"]) for r in csv.DictReader(fh)]
    assert quads.d_values().tolist() == stored


def test_test_command_report_validates(matched):
    config, out = matched
    assert cli.main(["test", "--config", str(config)]) == 0
    report = json.loads((out / "test_report.json").read_text())
    _validate(report)
    assert report["command"] == "test"
    assert report["test"] == "signed_rank"
    assert 0.0 <= report["p_value"] <= 1.0
    assert report["method"].startswith("wilcoxon:")
    assert "hl_estimate" in report and "ci" in report


def test_tau0_override_is_reflected(matched):
    config, out = matched
    assert cli.main(["test", "--config", str(config), "--tau0", "0.5"]) == 0
    report = json.loads((out / "test_report.json").read_text())
    assert report["tau0"] == 0.5
    _validate(report)


def test_sens_report_grid_monotone_and_validates(matched):
    config, out = matched
    assert cli.main(["sens", "--config", str(config)]) == 0
    report = json.loads((out / "sens_report.json").read_text())
    _validate(report)
    gammas = [row["gamma"] for row in report["grid"]]
    assert gammas == sorted(gammas) == [1.0, 1.3, 1.6, 2.0]
    ps = [row["p_upper"] for row in report["grid"]]
    assert all(b >= a - 1e-15 for a, b in zip(ps, ps[1:]))
    los = [row["bound_lower"] for row in report["grid"]]
    his = [row["bound_upper"] for row in report["grid"]]
    assert all(b <= a + 1e-9 for a, b in zip(los, los[1:]))
    assert all(b >= a - 1e-9 for a, b in zip(his, his[1:]))
    for row in report["grid"]:
        for amp in row["amplification"]:
            assert amp["lam"] > row["gamma"] or row["gamma"] == 1.0


def test_sens_gamma_override(matched):
    config, out = matched
    assert cli.main(["sens", "--config", str(config), "--gammas", "1.5,1.1"]) == 0
    report = json.loads((out / "sens_report.json").read_text())
    assert [row["gamma"] for row in report["grid"]] == [1.1, 1.5]


def test_amplify_command_values(tmp_path, capsys):
    json_path = tmp_path / "amp.json"
    assert cli.main(["amplify", "--gamma", "2", "--lambdas", "3", "--json", str(json_path)]) == 0
    report = json.loads(json_path.read_text())
    _validate(report)
    row = report["rows"][0]
    assert row["lam"] == 3.0
    assert row["delta_did"] == pytest.approx(math.sqrt(7.0), abs=1e-9)
    assert row["delta_paired"] == pytest.approx(5.0, abs=1e-9)
    capsys.readouterr()
    assert cli.main(["amplify", "--gamma", "2", "--lambdas", "1.5"]) == 2
    assert "asymptote" in capsys.readouterr().err


def test_exit_2_on_missing_column(tmp_path, capsys):
    data = tmp_path / "data.csv"
    write_dataset(data)
    out = tmp_path / "out"
    config = write_config(tmp_path / "config.yaml", data, out, outcome={"column": "wage"})
    assert cli.main(["match", "--config", str(config)]) == 2
    assert "missing column 'wage'" in capsys.readouterr().err


def test_exit_3_on_infeasible_match(tmp_path, capsys):
    data = tmp_path / "data.csv"
    rows = []
    for period in (1, 2):
        for i in range(4):
            rows.append([f"t{period}{i}", period, 1, 1.0 + i, 0.1 * i, "a"])
            rows.append([f"c{period}{i}", period, 0, 1.0 + i, 0.1 * i, "b"])
    with open(data, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["unit", "period", "z", "y", "x", "site"])
        w.writerows(rows)
    out = tmp_path / "out"
    config = write_config(
        tmp_path / "config.yaml", data, out,
        covariates={
            "x": {"role": "continuous"},
            "site": {"role": "nominal", "balance": "exact"},
        },
    )
    assert cli.main(["match", "--config", str(config)]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_exit_4_on_unparseable_data(tmp_path, capsys):
    data = tmp_path / "data.csv"
    data.write_text("unit,period,z,y,x,site\nu1,1,1,not_a_number,0.5,a\n")
    out = tmp_path / "out"
    config = write_config(tmp_path / "config.yaml", data, out)
    assert cli.main(["match", "--config", str(config)]) == 4
    assert "line 2" in capsys.readouterr().err


def test_exit_2_on_zero_reps(tmp_path, capsys):
    config = write_config(
        tmp_path / "config.yaml", tmp_path / "unused.csv", tmp_path / "out",
        simulate={"design": "continuous", "reps": 0, "params": {"n_quadruples": 10}},
    )
    assert cli.main(["simulate", "--config", str(config)]) == 2
    assert "reps" in capsys.readouterr().err


def test_simulate_writes_deterministic_csv(tmp_path):
    sims = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        config = write_config(
            tmp_path / f"c_{tag}.yaml", tmp_path / "unused.csv", out,
            simulate={
                "design": "continuous",
                "reps": 4,
                "params": {"n_quadruples": 20, "tau": 1.0},
                "plan": {"test": "signed_rank", "compute_hl": True},
            },
        )
        assert cli.main(["simulate", "--config", str(config)]) == 0
        sims.append(out / "simulation.csv")
    assert sims[0].read_bytes() == sims[1].read_bytes()
    with sims[0].open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "rep"
    assert rows[-1][0] == "summary"
    assert len(rows) == 1 + 4 + 1


def _write_binary_quadruples(path, n_pos, n_neg, n_flat=0):
    header = [
        "quad", "pre_treated_id", "pre_control_id", "post_treated_id", "post_control_id",
        "pre_treated_outcome", "pre_control_outcome", "post_treated_outcome",
        "post_control_outcome", "d",
    ]
    rows = []
    patterns = [(0, 1, 1, 0)] * n_pos + [(1, 0, 0, 1)] * n_neg + [(1, 1, 1, 1)] * n_flat
    for i, (a, b, c, d) in enumerate(patterns):
        contrast = (c - d) - (a - b)
        rows.append(
            [i, f"q{i}pt", f"q{i}pc", f"q{i}ot", f"q{i}oc",
             repr(float(a)), repr(float(b)), repr(float(c)), repr(float(d)), repr(float(contrast))]
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def test_binary_test_command(tmp_path):
    quads = tmp_path / "quadruples.csv"
    _write_binary_quadruples(quads, n_pos=9, n_neg=3, n_flat=4)
    out = tmp_path / "out"
    config = write_config(
        tmp_path / "config.yaml", tmp_path / "unused.csv", out,
        outcome={"column": "y", "kind": "binary"}, test="mcnemar",
    )
    assert cli.main(["test", "--config", str(config), "--quadruples", str(quads)]) == 0
    report = json.loads((out / "test_report.json").read_text())
    _validate(report)
    assert report["statistic"] == 9.0
    assert report["eligibility"]["n_eligible"] == 12
    assert report["eligibility"]["n_total"] == 16


def test_binary_without_eligible_quadruples_exits_4(tmp_path, capsys):
    quads = tmp_path / "quadruples.csv"
    _write_binary_quadruples(quads, n_pos=0, n_neg=0, n_flat=6)
    config = write_config(
        tmp_path / "config.yaml", tmp_path / "unused.csv", tmp_path / "out",
        outcome={"column": "y", "kind": "binary"}, test="mcnemar",
    )
    assert cli.main(["test", "--config", str(config), "--quadruples", str(quads)]) == 4
    assert "no informative quadruples" in capsys.readouterr().err


def test_kind_test_mismatch_exits_2(matched, capsys):
    config, _ = matched
    assert cli.main(["test", "--config", str(config), "--test", "mcnemar"]) == 2
    assert "mcnemar" in capsys.readouterr().err


def test_binary_sens_report(tmp_path):
    quads = tmp_path / "quadruples.csv"
    _write_binary_quadruples(quads, n_pos=11, n_neg=2)
    out = tmp_path / "out"
    config = write_config(
        tmp_path / "config.yaml", tmp_path / "unused.csv", out,
        outcome={"column": "y", "kind": "binary"}, test="mcnemar",
    )
    assert cli.main(["sens", "--config", str(config), "--quadruples", str(quads)]) == 0
    report = json.loads((out / "sens_report.json").read_text())
    _validate(report)
    assert report["outcome_kind"] == "binary"
    for row in report["grid"]:
        assert row["bound_lower"] is None and row["bound_upper"] is None
    ps = [row["p_upper"] for row in report["grid"]]
    assert all(b >= a - 1e-15 for a, b in zip(ps, ps[1:]))


def test_patterns_command(tmp_path):
    assert cli.main(["patterns", "--outdir", str(tmp_path / "svg")]) == 0
    assert len(list((tmp_path / "svg").glob("pattern_*.svg"))) == 8
