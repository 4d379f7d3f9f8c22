import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from hvzkit.cli import main, read_csv_table
from hvzkit.problem import ProblemError, dump_problem, load_problem, parse_problem
from hvzkit.tasks import table_to_csv

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def _write(tmp_path, data, name="p.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return p


@pytest.mark.parametrize("name", sorted(p.name for p in PROBLEMS.glob("*.json")))
def test_examples_round_trip_exactly(name):
    P = load_problem(PROBLEMS / name)
    once = dump_problem(P)
    again = dump_problem(parse_problem(json.loads(json.dumps(once))))
    assert json.dumps(once, sort_keys=True) == json.dumps(again, sort_keys=True)


@given(
    st.lists(
        st.lists(st.fractions(min_value=-50, max_value=50, max_denominator=97), min_size=3, max_size=3),
        min_size=1,
        max_size=2,
    )
)
def test_rational_subspaces_round_trip(rows):
    raw = [[str(x) for x in r] for r in rows]
    data = {"version": "hvzkit/1", "dimension": 3, "subspaces": [raw]}
    P = parse_problem(data)
    Q = parse_problem(dump_problem(P))
    assert Q.family == P.family
    assert dump_problem(Q) == dump_problem(P)


def test_unknown_fields_rejected_with_location():
    with pytest.raises(ProblemError, match=r"/tasks/0"):
        parse_problem({"version": "hvzkit/1", "dimension": 1, "tasks": [{"task": "hvz", "bogus": 1}]})
    with pytest.raises(ProblemError, match="version"):
        parse_problem({"version": "hvzkit/0", "dimension": 1})
    with pytest.raises(ProblemError, match=r"/terms/0/potential"):
        parse_problem(
            {"version": "hvzkit/1", "dimension": 2,
             "terms": [{"subspace": [[1, 0]], "potential": {"family": "poschl_teller", "params": {}}}]}
        )
    with pytest.raises(ProblemError, match=r"/tasks/0/element"):
        parse_problem({"version": "hvzkit/1", "dimension": 1, "tasks": [{"task": "fredholm", "element": "nope"}]})


def test_malformed_file_exit_2(tmp_path, capsys):
    p = _write(tmp_path, '{"version": "hvzkit/1",\n  "dimension": }')
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 2
    assert ":2:" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["strata", str(tmp_path / "absent.json")]) == 2


def test_run_msc_with_flags(tmp_path, capsys):
    assert main(["run", str(PROBLEMS / "msc.json"), "--n", "2", "--d", "1", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "00_lattice-check.json").read_text())
    assert rep["result"]["size"] == 4 and rep["result"]["checks"]["symmetric_action"]["ok"]


def test_exit_code_for_failure(tmp_path):
    data = json.loads((PROBLEMS / "pt1d.json").read_text())
    data["tasks"] = [{"task": "spectrum", "spacing": 0.1, "half_width": 8.0, "expect": -2.0, "tol": 1e-3}]
    assert main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "o")]) == 1


def test_exit_code_for_inconclusive(tmp_path):
    data = json.loads((PROBLEMS / "pt1d.json").read_text())
    # 24 million nodes: over the grid cap, so the numerics cannot decide
    data["tasks"] = [{"task": "spectrum", "spacing": 1e-6, "half_width": 12.0}]
    assert main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "o")]) == 3
    rep = json.loads((tmp_path / "o" / "00_spectrum.json").read_text())
    assert "GridCapExceeded" in rep["result"]["error"]


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("HVZKIT_OUT", str(tmp_path / "env"))
    assert main(["run", str(PROBLEMS / "msc.json")]) == 0
    assert (tmp_path / "env" / "run_report.json").exists()


def test_subcommands(capsys):
    assert main(["tau", str(PROBLEMS / "hvz2d.json"), "--direction", "1,0", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)[0]["result"]
    assert out["retained"] == ["1 0"] and out["shift"] == 0.0 and out["invariant_subspace"] == "1 0"
    assert main(["strata", str(PROBLEMS / "hvz2d.json"), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["result"]["count"] == 3
    assert main(["spectrum", str(PROBLEMS / "pt1d.json"), "--format", "json", "-k", "1"]) == 0
    assert abs(json.loads(capsys.readouterr().out)[0]["result"]["eigenvalues"][0] + 1) < 1e-3
    assert main(["lattice", "check-msc", "--n", "3", "--d", "1", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["result"]["size"] == 14
    assert main(["lattice", "gen", str(PROBLEMS / "msc.json")]) == 0
    capsys.readouterr()
    assert main(["fredholm-check", str(PROBLEMS / "fredholm1d.json"), "--element", "degenerate", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["result"]["verdict"] == "evidence-not-Fredholm"
    assert main(["tau", str(PROBLEMS / "hvz2d.json"), "--direction", "1,x"]) == 2


def test_jobs_keep_declared_order_and_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(PROBLEMS / "fredholm1d.json"), "--out", str(a)]) == 0
    assert main(["run", str(PROBLEMS / "fredholm1d.json"), "--out", str(b), "--jobs", "3"]) == 0
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes()
    order = [t["task"] for t in json.loads((b / "run_report.json").read_text())["tasks"]]
    assert order == ["fredholm"] * 3


def test_report_rereads_outputs(tmp_path, capsys):
    assert main(["run", str(PROBLEMS / "hvz2d.json"), "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["lossless"] is True
    for f in tmp_path.glob("*.csv"):
        header, rows = read_csv_table(f)
        assert table_to_csv(header, rows) == f.read_text()


def test_report_detects_tampering(tmp_path):
    assert main(["run", str(PROBLEMS / "msc.json"), "--out", str(tmp_path)]) == 0
    f = next(tmp_path.glob("*.csv"))
    f.write_text(f.read_text().replace("\n", "\n ", 1))
    assert main(["report", str(tmp_path)]) == 4
