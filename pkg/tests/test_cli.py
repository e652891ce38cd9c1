import json

import jsonschema
import pytest

from lore.cli import main
from lore.corpus import corpus_path
from lore.schemas import load_schema

from conftest import DATA, GOLDEN

CALENDAR = corpus_path("calendar.lore")
ACCOUNTS = str(DATA / "accounts.lore")
ANOMALY = corpus_path("calendar-anomaly.json")


def valid(doc, schema):
    jsonschema.validate(doc, load_schema(schema))
    return doc


@pytest.fixture(scope="module")
def calendar_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("check") / "report.json"
    code = main(["check", CALENDAR, "--format", "json", "--out", str(out)])
    return code, json.loads(out.read_text())


def test_check_calendar_succeeds(calendar_report):
    code, doc = calendar_report
    assert code == 0
    valid(doc, "check")


def test_check_without_days_clause_exits_one(tmp_path, capsys):
    text = open(CALENDAR).read()
    clause = "  .requires{ cal => a => remaining_vacation - a.days >= 0}\n"
    assert clause in text
    broken = tmp_path / "calendar.lore"
    broken.write_text(text.replace(clause, ""))
    assert main(["check", str(broken)]) == 1
    out = capsys.readouterr().out
    assert "preservation-add_vacation: refuted" in out
    assert "no conflict table" in out


def test_malformed_program_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.lore"
    bad.write_text("val x: Source[Int] = \n")
    assert main(["check", str(bad)]) == 2
    assert "bad.lore:" in capsys.readouterr().err


def test_missing_file_exits_two(tmp_path):
    assert main(["check", str(tmp_path / "nope.lore")]) == 2


def test_conflicts_json(capsys):
    assert main(["conflicts", ACCOUNTS, "--format", "json"]) == 0
    doc = valid(json.loads(capsys.readouterr().out), "conflicts")
    assert doc["program"] == "accounts"


def test_conflicts_text(capsys):
    assert main(["conflicts", ACCOUNTS]) == 0
    assert capsys.readouterr().out.startswith("conflicts(")


def test_anomaly_script_exits_three(tmp_path, capsys):
    trace = tmp_path / "anomaly.json"
    code = main(["simulate", CALENDAR, "--script", ANOMALY, "--no-coordination", "--trace-out", str(trace)])
    assert code == 3
    out = capsys.readouterr().out
    assert "invariant 2 violated at step" in out
    valid(json.loads(trace.read_text()), "trace")
    assert (tmp_path / "anomaly.log").exists()

    assert main(["serialize", str(trace), "--format", "json"]) == 4
    doc = valid(json.loads(capsys.readouterr().out), "serialize")
    assert all("error" in r for r in doc["results"])


def test_simulate_json_validates(tmp_path, capsys):
    table = tmp_path / "conflicts.json"
    assert main(["conflicts", ACCOUNTS, "--format", "json", "--out", str(table)]) == 0
    argv = ["simulate", ACCOUNTS, "--seed", "42", "--conflicts", str(table), "--format", "json"]
    assert main(argv) == 0
    first = valid(json.loads(capsys.readouterr().out), "sim")
    assert first["validity"]["valid"]
    assert main(argv) == 0
    assert json.loads(capsys.readouterr().out) == first
    assert main(argv[:3] + ["43"] + argv[4:]) == 0
    assert json.loads(capsys.readouterr().out)["digest"] != first["digest"]


def test_coordinated_trace_serializes(tmp_path, capsys):
    table = tmp_path / "conflicts.json"
    trace = tmp_path / "run.json"
    assert main(["conflicts", ACCOUNTS, "--format", "json", "--out", str(table)]) == 0
    assert main(["simulate", ACCOUNTS, "--seed", "7", "--conflicts", str(table), "--trace-out", str(trace)]) == 0
    capsys.readouterr()
    assert main(["serialize", str(trace), "--format", "json"]) == 0
    doc = valid(json.loads(capsys.readouterr().out), "serialize")
    assert len(doc["results"]) == 3


def test_schedule_file_validates():
    valid(json.load(open(ANOMALY)), "schedule")


def test_emit_smt_writes_one_file_per_obligation(tmp_path, capsys):
    assert main(["emit-smt", CALENDAR, "--out", str(tmp_path)]) == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 5
    assert all(f.endswith(".smt2") for f in files)
    assert capsys.readouterr().out.count("\n") == 5


def test_emit_smt_tpcc_is_not_encodable(tmp_path):
    assert main(["emit-smt", corpus_path("tpcc-mini.lore"), "--out", str(tmp_path)]) == 6


def test_emit_graph_matches_golden(tmp_path):
    out = tmp_path / "calendar.dot"
    assert main(["emit-graph", CALENDAR, "--out", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "calendar.dot").read_text()


def test_emit_graph_to_stdout(capsys):
    assert main(["emit-graph", ACCOUNTS]) == 0
    assert capsys.readouterr().out.startswith('digraph "accounts"')
