import csv
import io
import json

import pytest

from mfbst.cli import ExperimentSpec, UsageError, main, run_experiment


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_and_bounds_roundtrip(tmp_path, capsys):
    seq = tmp_path / "x.json"
    assert main(["gen", "random", "--n", "10", "--m", "30", "--seed", "4",
                 "--format", "json", "--out", str(seq)]) == 0
    assert json.loads(seq.read_text())["n"] == 10
    assert main(["bounds", "--input", str(seq)]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert row["m"] == "30" and row["version"]


def test_bounds_tilted_grid_row(capsys):
    assert main(["bounds", "--kind", "tilted", "--n", "8", "--k", "2", "--l", "1,2,3"]) == 0
    (row,) = rows(capsys.readouterr().out)
    for col in ("ws", "df", "sf", "so", "ub_1", "ub_2", "ub_3"):
        assert row[col] not in ("", "None")
    ub = [float(row[f"ub_{i}"]) for i in (1, 2, 3)]
    assert ub == sorted(ub, reverse=True)


def test_missing_input_is_usage_error(capsys):
    assert main(["bounds", "--input", "/nonexistent/seq.json"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "no such file" in err["detail"]


def test_seed_required(capsys):
    assert main(["gen", "random", "--n", "5"]) == 2


def test_bad_flag_exits_2():
    with pytest.raises(SystemExit) as e:
        main(["bounds", "--format", "xml"])
    assert e.value.code == 2


def test_fingeropt_json(capsys):
    assert main(["fingeropt", "--kind", "tilted", "--n", "6", "--k", "2", "--format", "json"]) == 0
    out = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert [r["k"] for r in out] == [1, 2] and out[0]["cost"] >= out[1]["cost"]


@pytest.mark.parametrize("cmd", [
    ["kserver", "--n", "8", "--k", "2", "--m", "20", "--seed", "3"],
    ["mw", "--n", "4", "--k", "1", "--eps", "0.5", "--seed", "2"],
    ["vtree", "--n", "20", "--m", "40", "--l", "3", "--seed", "1"],
    ["simulate", "--n", "60", "--k", "3", "--m", "600", "--seed", "5"],
])
def test_runner_commands_pass(cmd, capsys):
    assert main(cmd + ["--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out.splitlines()[0])


@pytest.mark.parametrize("args", [
    ["vtree", "--l", "2"],
    ["hand", "--k", "8", "--n", "100", "--m", "3000"],
    ["monotone-chain", "--n", "6"],
])
def test_verify(args, capsys):
    assert main(["verify"] + args) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_verify_unknown(capsys):
    assert main(["verify", "nosuch"]) == 2


def test_experiment_deterministic(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"name": "dc_vs_dp", "seed": 9, "params": {"count": 15}}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["experiment", str(spec), "--out", str(a)]) == 0
    assert main(["experiment", str(spec), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.jsonl").exists()
    table = rows(a.read_text())
    assert len(table) == 15 and all(r["within"] == "True" for r in table)
    assert {r["seed"] for r in table} == {"9"}


def test_experiment_hierarchy_trend():
    got = run_experiment(ExperimentSpec("hierarchy", {"ns": [4, 6, 8], "k": 2}))
    ratios = [r["ratio"] for r in got]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))


def test_experiment_spec_validation(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"name": "vtree"}))
    with pytest.raises(UsageError):
        ExperimentSpec.from_file(spec)
    assert main(["experiment", str(spec)]) == 2
    assert main(["experiment", str(tmp_path / "missing.json")]) == 2


def test_calibrate_writes_all_constants(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["calibrate", "--quick", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data) >= {"c_sim", "c_dq", "c_switch", "c_strip", "c_hier"}
    assert all(v > 0 for v in data.values())
