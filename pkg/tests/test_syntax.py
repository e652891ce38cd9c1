"""Parsing, checking and printing of programs."""

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lore.corpus import corpus_path
from lore.errors import ArityError, CycleError, DuplicateName, ParseError, TypingError, UnknownIdentifier
from lore.syntax import load_file, load_program, parse_expr, parse_program, print_program, print_term
from lore.syntax.ast import Binary, Call, Field, If, Lit, Quant, Ref, TupleExpr, Type, Unary

from conftest import DATA

CORPUS = ["calendar.lore", "calendar-extended.lore", "tpcc-mini.lore"]


def test_listing_counts(calendar):
    p = calendar.program
    assert [s.name for s in p.sources] == ["work", "vacation"]
    assert [d.name for d in p.deriveds] == ["all_appointments", "remaining_vacation"]
    assert sorted(calendar.executable) == ["add_vacation", "add_work"]
    assert sorted(calendar.templates) == ["add_appointment"]
    assert [i.id for i in p.invariants] == [1, 2]


def test_specialisation_copies_base_and_appends(calendar):
    vac = calendar.interaction("add_vacation")
    work = calendar.interaction("add_work")
    assert vac.modifies == ("vacation",) and work.modifies == ("work",)
    assert len(vac.requires) == 3 and len(work.requires) == 2
    assert vac.requires[:2] == work.requires
    assert vac.executes == work.executes and len(vac.ensures) == 1


def test_glue_lines_are_kept_but_inert(calendar):
    assert len(calendar.program.glue) == 2
    assert calendar.program.glue[0].text.startswith("UI.display")


def test_empty_program():
    p = load_program("")
    assert not (p.program.sources or p.program.deriveds or p.program.interactions or p.program.invariants)
    assert p.executable == {}


def test_comments_and_whitespace_are_ignored():
    a = load_program("val x: Source[PNCounter] = Source(PNCounter(3))")
    b = load_program("// budget\nval   x :\n Source[PNCounter]=Source( PNCounter( 3 ) ) // end\n")
    assert a.program == b.program


def _fails(text, cls):
    with pytest.raises(cls) as info:
        load_program(text, "f.lore")
    return info.value


def test_duplicate_name():
    e = _fails("val x: Source[AWSet[Int]] = Source(AWSet())\n" * 2, DuplicateName)
    assert (e.line, e.col) == (2, 5)
    assert str(e).startswith("f.lore:2:5: ")


def test_unknown_identifier_position():
    text = "val x: Source[AWSet[Int]] = Source(AWSet())\nval d: Derived[Int] = Derived{ y.size }\n"
    e = _fails(text, UnknownIdentifier)
    assert (e.line, e.col) == (2, 32)


def test_parse_error_at_end_of_input():
    e = _fails("val x: Source[PNCounter] = Source(PNCounter(\n", ParseError)
    assert e.line == 2 and "end of input" in e.message


def test_self_cycle():
    e = _fails("val d: Derived[Int] = Derived{ d + 1 }\n", CycleError)
    assert e.cycle == ["d", "d"]


def test_two_cycle_lists_members():
    text = "val a: Derived[Int] = Derived{ b + 1 }\nval b: Derived[Int] = Derived{ a + 1 }\n"
    e = _fails(text, CycleError)
    assert set(e.cycle) == {"a", "b"} and e.cycle[0] == e.cycle[-1]


def test_executes_arity_must_match_modifies():
    text = """type Calendar = AWSet[Appointment]
val work: Source[Calendar] = Source(AWSet())
val vacation: Source[Calendar] = Source(AWSet())
val f: Unit = Interaction[Calendar, Calendar][Appointment]
  .modifies(work, vacation)
  .executes{ w => v => a => w.add(a) }
"""
    _fails(text, ArityError)


def test_ill_typed_invariant():
    e = _fails("val x: Source[PNCounter] = Source(PNCounter())\ninvariant x.count + true >= 0\n", TypingError)
    assert e.line == 2


def test_source_kind_must_match_declaration():
    _fails("val x: Source[PNCounter] = Source(AWSet())\n", TypingError)


def test_precondition_must_be_boolean():
    text = """val x: Source[PNCounter] = Source(PNCounter())
val f: Unit = Interaction[PNCounter][Int]
  .modifies(x)
  .requires{ c => n => n + 1 }
  .executes{ c => n => c.inc(n) }
"""
    _fails(text, TypingError)


def test_partial_interaction_is_a_template_only():
    text = """val x: Source[PNCounter] = Source(PNCounter())
val f: Unit = Interaction[PNCounter][Int]
  .requires{ c => n => n > 0 }
"""
    p = load_program(text)
    assert "f" in p.templates and "f" not in p.executable


@pytest.mark.parametrize("name", CORPUS + ["accounts.lore"])
def test_print_parse_round_trip(name):
    path = DATA / name if (DATA / name).exists() else Path(corpus_path(name))
    ast = parse_program(path.read_text())
    again = parse_program(print_program(ast))
    assert again == ast
    assert load_program(print_program(ast)).executable.keys() == load_file(path).executable.keys()


@pytest.mark.parametrize("name", CORPUS)
def test_checked_programs_type_their_clauses(name):
    p = load_file(corpus_path(name))
    for a in p.executable.values():
        assert len(a.modifies) >= 1 and len(a.executes) == 1


# -- generated expressions ---------------------------------------------------

NAMES = st.sampled_from(["a", "b", "cal", "xs"])
LEAVES = st.one_of(
    st.integers(-5, 50).map(Lit),
    st.booleans().map(Lit),
    st.sampled_from(["", "x", "two words"]).map(Lit),
    NAMES.map(Ref),
)
OPS = st.sampled_from(["+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||", "==>", "<==>"])


def _compound(sub):
    return st.one_of(
        st.builds(Binary, OPS, sub, sub),
        st.builds(Unary, st.just("!"), sub),
        st.builds(lambda t: Call("in", t), st.tuples(sub, sub)),
        st.builds(lambda a: Call("size", (a,)), sub),
        st.builds(lambda a, b: Call("union", (a, b)), sub, sub),
        st.builds(Field, NAMES.map(Ref), st.sampled_from(["start", "id", "days"])),
        st.builds(lambda xs: TupleExpr(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
        st.builds(If, sub, sub, sub),
        st.builds(Quant, st.sampled_from(["forall", "exists"]), NAMES, st.just(Type("Appointment")), sub),
    )


TERMS = st.recursive(LEAVES, _compound, max_leaves=12)


@settings(max_examples=500, deadline=None)
@given(TERMS)
def test_expression_print_parse_round_trip(t):
    assert parse_expr(print_term(t)) == t
