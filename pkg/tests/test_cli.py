import csv
import hashlib
import json

import numpy as np
import pytest

from funcpd.cli import main
from funcpd.core import read_csv, read_manifest, write_csv


@pytest.fixture
def sample_csv(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.standard_normal((40, 3))
    X[20:] += 2.0
    path = tmp_path / "sample.csv"
    write_csv(X, path)
    return path


def test_constant_input_does_not_reject(tmp_path, capsys):
    path = tmp_path / "c.csv"
    path.write_text("\n".join(["1.0,2.0,3.0"] * 12) + "\n")
    out = tmp_path / "r.json"
    assert main(["test", "--input", str(path), "--reps", "50", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["p_value"] == 1.0 and rep["reject"] is False
    assert "do not reject" in capsys.readouterr().out


def test_report_contents_and_checksum(sample_csv, tmp_path):
    out = tmp_path / "r.json"
    main(["test", "--input", str(sample_csv), "--reps", "80", "--seed", "3", "--out", str(out)])
    rep = json.loads(out.read_text())
    m = rep["manifest"]
    assert m["input_sha256"] == hashlib.sha256(sample_csv.read_bytes()).hexdigest()
    assert m["seed"] == 3 and m["command"] == "test" and "duration_s" not in m
    assert rep["conventions"]["lag_convention"] == "standard"
    assert rep["conventions"]["p_value_rule"] == "plain"
    assert rep["conventions"]["weighting"] == "euclidean"
    for key in ("statistic", "critical_value", "p_value", "reject", "k_hat", "q_used", "kernel", "alpha", "m", "seed"):
        assert key in rep


def test_seeded_runs_are_byte_identical(sample_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p, threads in ((a, "1"), (b, "3")):
        main(["test", "--input", str(sample_csv), "--reps", "130", "--seed", "8", "--threads", threads, "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()


def test_timing_flag_adds_duration(sample_csv, tmp_path):
    out = tmp_path / "r.json"
    main(["test", "--input", str(sample_csv), "--reps", "20", "--timing", "--out", str(out)])
    assert json.loads(out.read_text())["manifest"]["duration_s"] >= 0


def test_exit_on_reject(sample_csv):
    assert main(["test", "--input", str(sample_csv), "--reps", "100", "--bandwidth", "1", "--exit-on-reject"]) == 2


def test_malformed_row_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,5,6\n7,8\n1,1,1\n")
    assert main(["test", "--input", str(path), "--reps", "10"]) == 1
    err = capsys.readouterr().err
    assert "line 3" in err and err.startswith("funcpd: error:")


@pytest.mark.parametrize("content, needle", [
    ("1,2\n3,\n5,6\n", "missing value"),
    ("1,2\n3,x\n5,6\n", "not a number"),
    ("1,2\n", "at least 2"),
])
def test_bad_values(tmp_path, capsys, content, needle):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    assert main(["test", "--input", str(path)]) == 1
    assert needle in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["bandwidth", "--input", str(tmp_path / "nope.csv")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_bad_bandwidth_flag(sample_csv, capsys):
    assert main(["test", "--input", str(sample_csv), "--bandwidth", "0.5"]) == 1
    assert main(["test", "--input", str(sample_csv), "--kernel", "clipped", "--clip-c", "0"]) == 1


def test_bandwidth_constant_sample(tmp_path, capsys):
    path = tmp_path / "c.csv"
    path.write_text("\n".join(["0.5,0.5"] * 30) + "\n")
    assert main(["bandwidth", "--input", str(path), "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["q_adpt"] == 1 and rep["clamped"] is True
    assert main(["bandwidth", "--input", str(path)]) == 0
    assert "clamped   true" in capsys.readouterr().out


def test_date_column_label(tmp_path, capsys):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 2))
    X[15:] += 4
    lines = ["date,a,b"] + [f"2020-01-{i + 1:02d},{float(r[0])!r},{float(r[1])!r}" for i, r in enumerate(X)]
    path = tmp_path / "d.csv"
    path.write_text("\n".join(lines) + "\n")
    out = tmp_path / "r.json"
    assert main(["test", "--input", str(path), "--date-column", "date", "--reps", "50", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["n"] == 30 and rep["d"] == 2
    assert rep["k_hat_label"] == f"2020-01-{rep['k_hat']:02d}"


def test_simulate_round_trip(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--scenario", "s1", "--n", "30", "--d", "5", "--seed", "7", "--out", str(out)]) == 0
    s = read_csv(out)
    assert (s.n, s.d) == (30, 5)
    man = read_manifest(out)
    assert man["flags"]["scenario"] == "s1_uniform_jump" and man["seed"] == 7
    again = tmp_path / "t.csv"
    main(["simulate", "--scenario", "s1", "--n", "30", "--d", "5", "--seed", "7", "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_simulate_s6_shape(tmp_path):
    out = tmp_path / "s6.csv"
    assert main(["simulate", "--scenario", "s6", "--burn-in", "3", "--out", str(out)]) == 0
    s = read_csv(out)
    assert (s.n, s.d) == (150, 350)


def test_simulate_to_stdout(capsys):
    assert main(["simulate", "--n", "4", "--d", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# funcpd-manifest:") and len(lines) == 5


def test_unknown_scenario(tmp_path, capsys):
    assert main(["simulate", "--scenario", "s9"]) == 1
    err = capsys.readouterr().err
    assert "s4_heavy_jump" in err and "null_outliers" in err


def test_mc_tables(tmp_path):
    out = tmp_path / "table.csv"
    args = ["mc", "--scenario", "s4", "--n", "20", "--d", "3", "--burn-in", "5",
            "--studies", "2", "--reps", "20", "--out", str(out)]
    assert main(args) == 0
    with open(out) as fh:
        next(fh)
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 4
    assert set(rows[0]) == {"scenario", "kernel", "alpha", "rejection_rate", "mc_stderr"}
    assert {r["kernel"] for r in rows} == {"cusum", "spatial_sign"}
    assert all(float(r["rejection_rate"]) in (0.0, 0.5, 1.0) for r in rows)
    sp = tmp_path / "table_sizepower.csv"
    with open(sp) as fh:
        next(fh)
        sp_rows = list(csv.DictReader(fh))
    assert len(sp_rows) == 8 and sp_rows[0]["null_scenario"] == "null_heavy"
    assert read_manifest(out)["command"] == "mc"
