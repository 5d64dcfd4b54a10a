"""Command-line interface smoke tests."""

import json

from spmtop.cli import main
from spmtop.harness import CSV_HEADER


def test_simulate_csv(capsys):
    rc = main(["simulate", "--k", "8", "--p", "0.11", "--epsilon", "1e-3",
               "--trials", "200", "--seed", "42"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert lines[1].startswith("8,0.11,0.001,200,42,standard,")


def test_simulate_json_randomized(capsys):
    rc = main(["simulate", "--k", "6", "--p", "0.11", "--epsilon", "1e-3",
               "--trials", "100", "--seed", "1", "--stopping", "randomized",
               "--format", "json"])
    out = capsys.readouterr().out
    assert rc == 0
    rows = json.loads(out)
    assert rows[0]["stopping"] == "randomized"


def test_simulate_out_file(tmp_path, capsys):
    target = tmp_path / "report.csv"
    rc = main(["simulate", "--k", "5", "--p", "0.3", "--epsilon", "1e-2",
               "--trials", "50", "--seed", "3", "--out", str(target)])
    assert rc == 0
    assert capsys.readouterr().out == ""
    assert target.read_text().startswith(CSV_HEADER)


def test_bounds_table(capsys):
    rc = main(["bounds", "--k-min", "99", "--k-max", "101", "--p", "0.11",
               "--epsilon", "1e-3"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("K,p,epsilon,N,p_f,")
    assert len(lines) == 4
    assert lines[1].startswith("99,")


def test_selftest(capsys):
    rc = main(["selftest"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "selftest: OK" in out


def test_invalid_parameters_exit_code(capsys):
    rc = main(["simulate", "--k", "5", "--p", "0.7", "--epsilon", "1e-3",
               "--trials", "10", "--seed", "1"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
