import csv
import json

import pytest

from lpmbc.cli import run


@pytest.fixture
def synth_csv(tmp_path):
    path = tmp_path / "s.csv"
    assert run(["synth", "--c", "1.0", "--n", "30", "--seed", "2", "--out", str(path)]) == 0
    return path


def test_synth_is_deterministic(tmp_path, synth_csv):
    other = tmp_path / "t.csv"
    run(["synth", "--c", "1.0", "--n", "30", "--seed", "2", "--out", str(other)])
    assert other.read_bytes() == synth_csv.read_bytes()
    assert synth_csv.read_text().splitlines()[0] == "x1,x2,class"


def test_predict(tmp_path, synth_csv, capsys):
    query = tmp_path / "q.csv"
    query.write_text("x1,x2\n0,4\n0,-4\n")
    out = tmp_path / "p.csv"
    assert run(["predict", "--train", str(synth_csv), "--query", str(query), "--k", "5", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["label", "p_1", "p_2"]
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    for r in rows[1:]:
        assert sum(float(v) for v in r[1:]) == pytest.approx(1.0, abs=1e-9)


def test_predict_accepts_labeled_queries(tmp_path, synth_csv, capsys):
    assert run(["predict", "--train", str(synth_csv), "--query", str(synth_csv), "--mode", "global"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 61


def test_bench_writes_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = run(["bench", "--data", "iris", "--repeats", "1", "--seed", "3", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert len(report["cells"]) == 5
    assert "mean ACC" in capsys.readouterr().out
    again = tmp_path / "r2.json"
    run(["bench", "--data", "iris", "--repeats", "1", "--seed", "3", "--out", str(again)])
    assert again.read_bytes() == out.read_bytes()


def test_bench_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["bench", "--data", "iris", "--repeats", "1", "--assumption", "lga", "--format", "csv",
                "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 6


def test_sweep(tmp_path, synth_csv):
    out = tmp_path / "curve.csv"
    assert run(["sweep", "--data", str(synth_csv), "--k-fracs", "0.2,1.0", "--assumption", "lua,lga",
                "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["k_fraction", "assumption", "mean_acc", "mean_mse"]
    assert [(r[0], r[1]) for r in rows[1:]] == [("0.2", "LUA"), ("0.2", "LGA"), ("1.0", "LUA"), ("1.0", "LGA")]


@pytest.mark.parametrize("argv", [[], ["bench"], ["predict", "--train", "x"], ["frobnicate"],
                                  ["sweep", "--data", "iris", "--k-fracs", "a,b"]])
def test_usage_errors(argv, capsys):
    assert run(argv) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: usage:") and err.count("\n") == 1


def test_io_errors(tmp_path, capsys):
    assert run(["bench", "--data", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,class\nfoo,x\n")
    assert run(["bench", "--data", str(bad)]) == 2
    assert capsys.readouterr().err.startswith("error: io:")


def test_numeric_errors(tmp_path, synth_csv, capsys):
    assert run(["synth", "--c", "3", "--out", str(tmp_path / "x.csv")]) == 3
    assert run(["predict", "--train", str(synth_csv), "--query", str(synth_csv), "--mode", "global",
                "--assumption", "lua"]) == 3
    assert run(["predict", "--train", str(synth_csv), "--query", str(synth_csv), "--k", "500"]) == 3
    assert run(["bench", "--data", "iris", "--assumption", "xyz"]) == 3
    err = capsys.readouterr().err.splitlines()
    assert len(err) == 4 and all(line.startswith("error: numeric:") for line in err)
