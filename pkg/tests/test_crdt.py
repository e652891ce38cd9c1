"""Merge-semilattice laws and operation examples for the replicated data types."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lore.crdt import AWSet, LWWRegister, PNCounter, leq_value, merge_value
from lore.errors import StaleDot

from laws import LAWS, TYPES, count_failures, history

LAW = settings(max_examples=300, deadline=None)
REPLICAS = st.integers(1, 3)
ELEMS = st.integers(0, 3)


def _history(kinds, apply, initial):
    """Run random local operations and pairwise merges on three replicas."""
    op = st.one_of(
        st.tuples(st.just("sync"), REPLICAS, REPLICAS),
        st.tuples(st.sampled_from(kinds), REPLICAS, ELEMS),
    )

    @st.composite
    def states(draw):
        reps = {r: initial for r in (1, 2, 3)}
        for kind, r, x in draw(st.lists(op, max_size=12)):
            if kind == "sync":
                reps[r] = reps[r].merge(reps[x])
            else:
                reps[r] = apply(reps[r], kind, r, x)
        return reps[1], reps[2], reps[3]

    return states()


def _awset(s, kind, r, e):
    return s.add_from(e, r) if kind == "add" else s.remove(e)


def _counter(c, kind, r, n):
    return c.increment(n, r) if kind == "inc" else c.decrement(n, r)


def _register(reg, kind, r, v):
    return reg.write(v, r)


SYSTEMS = {
    "AWSet": _history(["add", "add", "remove"], _awset, AWSet()),
    "PNCounter": _history(["inc", "dec"], _counter, PNCounter()),
    "LWWRegister": _history(["write"], _register, LWWRegister(0)),
}
KINDS = sorted(SYSTEMS)


@pytest.mark.parametrize("kind", KINDS)
def test_merge_commutative(kind):
    @LAW
    @given(SYSTEMS[kind])
    def law(states):
        a, b, _ = states
        assert merge_value(a, b) == merge_value(b, a)

    law()


@pytest.mark.parametrize("kind", KINDS)
def test_merge_associative(kind):
    @LAW
    @given(SYSTEMS[kind])
    def law(states):
        a, b, c = states
        assert merge_value(merge_value(a, b), c) == merge_value(a, merge_value(b, c))

    law()


@pytest.mark.parametrize("kind", KINDS)
def test_merge_idempotent(kind):
    @LAW
    @given(SYSTEMS[kind])
    def law(states):
        a, _, _ = states
        assert merge_value(a, a) == a

    law()


@pytest.mark.parametrize("kind", KINDS)
def test_update_inflates(kind):
    apply = {"AWSet": _awset, "PNCounter": _counter, "LWWRegister": _register}[kind]
    ops = {"AWSet": ["add", "remove"], "PNCounter": ["inc", "dec"], "LWWRegister": ["write"]}[kind]

    @LAW
    @given(SYSTEMS[kind], st.sampled_from(ops), REPLICAS, ELEMS)
    def law(states, op, r, x):
        a = states[0]
        assert leq_value(a, apply(a, op, r, x))

    law()


@pytest.mark.parametrize("kind", KINDS)
def test_merge_is_upper_bound(kind):
    @LAW
    @given(SYSTEMS[kind])
    def law(states):
        a, b, _ = states
        m = merge_value(a, b)
        assert leq_value(a, m) and leq_value(b, m)

    law()


def test_add_wins_over_concurrent_remove():
    base = AWSet().add_from("x", 1)
    removed = base.remove("x")
    readded = base.add_from("x", 2)
    assert "x" in removed.merge(readded).elements()


def test_observed_remove_drops_seen_adds():
    a = AWSet().add_from("x", 1)
    b = a.merge(AWSet()).remove("x")
    assert b.merge(a).elements() == frozenset()


def test_reusing_a_dot_is_rejected():
    s = AWSet().add("x", (1, 1))
    with pytest.raises(StaleDot):
        s.add("y", (1, 1))


def test_next_dot_counts_per_replica():
    s = AWSet().add_from("a", 1).add_from("b", 1).add_from("c", 2)
    assert s.next_dot(1) == (1, 3)
    assert s.next_dot(2) == (2, 2)


def test_counter_value_and_merge():
    a = PNCounter.of(5).decrement(3, 1)
    b = PNCounter.of(5).decrement(4, 2)
    assert a.value == 2 and b.value == 1
    assert a.merge(b).value == -2


def test_register_last_writer_wins():
    r1 = LWWRegister(0).write("a", 1)
    r2 = LWWRegister(0).write("b", 2)
    assert r1.merge(r2).value == r2.merge(r1).value == "b"
    assert r1.merge(r2).write("c", 1).merge(r2).value == "c"


def test_of_builds_initial_set():
    s = AWSet.of([2, 1])
    assert s.elements() == frozenset({1, 2})
    assert AWSet.of([1, 2]) == s


@pytest.mark.parametrize("law", sorted(LAWS))
@pytest.mark.parametrize("kind", sorted(TYPES))
def test_law_holds_on_ten_thousand_histories(law, kind):
    assert count_failures(law, kind, 10_000) == 0


def test_seeded_histories_catch_a_broken_merge(monkeypatch):
    # summing counter vectors instead of taking the pointwise max is not idempotent
    def summing(self, other):
        out = PNCounter()
        for src in (self, other):
            for r, n in src.incs:
                out = out.increment(n, r)
            for r, n in src.decs:
                out = out.decrement(n, r)
        return out

    monkeypatch.setattr(PNCounter, "merge", summing)
    assert count_failures("idempotent", "PNCounter", 200) > 0


def test_histories_are_reproducible():
    import random

    assert history(random.Random(7), "AWSet") == history(random.Random(7), "AWSet")
