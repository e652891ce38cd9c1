"""SMT-LIB emission of the proof obligations."""

import pytest

from lore.errors import NotEncodable
from lore.syntax import load_program
from lore.verify.smt import emit_all, emit_smt, obligations

from conftest import DATA

TRIVIAL = """val x: Source[PNCounter] = Source(PNCounter())
val inc: Unit = Interaction[PNCounter][Int]
  .modifies(x)
  .executes{ c => n => c.inc(n) }
invariant true
"""


def test_calendar_has_five_obligations(calendar):
    names = [o.filename(calendar.name) for o in emit_all(calendar)]
    assert names == [
        "calendar.preservation-add_vacation.smt2",
        "calendar.preservation-add_work.smt2",
        "calendar.confluence-add_vacation-add_vacation.smt2",
        "calendar.confluence-add_vacation-add_work.smt2",
        "calendar.confluence-add_work-add_work.smt2",
    ]


def test_one_declaration_per_source(calendar):
    text = emit_smt(calendar, "preservation-add_vacation")
    assert "(declare-const |vacation@pre| (Array Appointment Bool))" in text
    assert "(declare-const |work@pre| (Array Appointment Bool))" in text
    assert text.rstrip().endswith("(check-sat)")


def test_unused_records_are_not_declared(accounts):
    text = emit_smt(accounts, "preservation-withdraw_x")
    assert "Appointment" not in text and "sumDays" not in text


def test_unknown_obligation(calendar):
    with pytest.raises(KeyError):
        emit_smt(calendar, "preservation-add_appointment")


def test_closures_are_outside_the_fragment(tpcc):
    with pytest.raises(NotEncodable):
        emit_all(tpcc)


def test_trivial_invariant_program():
    p = load_program(TRIVIAL, "trivial.lore")
    assert [ob for ob, _ in obligations(p)] == ["preservation-inc"]
    assert "(assert (not true))" in emit_smt(p, "preservation-inc")


# -- with a solver -------------------------------------------------------------


def _check(text):
    z3 = pytest.importorskip("z3")
    s = z3.Solver()
    s.set("timeout", 20_000)
    s.from_string(text)
    return str(s.check())


def test_trivial_invariant_is_unsat():
    assert _check(emit_smt(load_program(TRIVIAL), "preservation-inc")) == "unsat"


@pytest.mark.parametrize("ob", ["preservation-add_vacation", "preservation-add_work", "confluence-add_work-add_work"])
def test_calendar_obligations_discharge(calendar, ob):
    assert _check(emit_smt(calendar, ob)) == "unsat"


def test_solver_agrees_with_bounded_checker_on_counters(accounts):
    from lore.verify import check_program

    report = check_program(accounts)
    for v in report.verdicts:
        expected = "sat" if v.status == "refuted" else "unsat"
        assert _check(emit_smt(accounts, v.obligation)) == expected, v.obligation


def test_missing_precondition_is_satisfiable():
    text = (DATA / "accounts.lore").read_text().replace("  .requires{ c => n => c.count + y.count - n >= 0 }\n", "")
    assert _check(emit_smt(load_program(text), "preservation-withdraw_x")) == "sat"
