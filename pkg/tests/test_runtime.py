"""Interact/Sync transitions and the token protocol."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lore.errors import LockNotHeld, ProtocolViolation, Refusal
from lore.eval import Evaluator, leq_store, merge_store
from lore.runtime import (
    Grant,
    Release,
    Request,
    Sync,
    TimeoutFired,
    acquire,
    crash,
    init_program,
    interact,
    lock_protocol_step,
    reclaim,
    recover,
    sync,
    token_holders,
)
from lore.values import appointment
from lore.verify import ConflictTable

from conftest import program

TWENTY = appointment(1, 0, 20)
TWELVE = appointment(2, 0, 12)
MEETING = appointment(3, 1, 2)


def remaining(p, d):
    return Evaluator(p).value_of("remaining_vacation", d.store)


def test_init_gives_device_one_every_token(calendar):
    ds = init_program(calendar, 3)
    assert ds[0].locks == {"add_vacation", "add_work"}
    assert ds[1].locks == ds[2].locks == frozenset()
    assert len({d.store for d in ds}) == 1
    ev = Evaluator(calendar)
    assert all(ev.valid(d.store) for d in ds)


def test_single_device(calendar):
    (d,) = init_program(calendar, 1)
    assert d.locks == {"add_vacation", "add_work"}
    with pytest.raises(ValueError):
        init_program(calendar, 0)


def test_interact_with_all_tokens(calendar, calendar_conflicts):
    ds = interact(calendar, init_program(calendar, 3), 1, "add_vacation", TWENTY, calendar_conflicts)
    assert TWENTY in ds[0].store["vacation"].elements()
    assert remaining(calendar, ds[0]) == 10
    assert ds[1:] == init_program(calendar, 3)[1:]
    assert ds[0].dot_counter == 1


def test_interact_without_token_is_refused(calendar, calendar_conflicts):
    ds = init_program(calendar, 3)
    with pytest.raises(Refusal) as info:
        interact(calendar, ds, 2, "add_vacation", TWENTY, calendar_conflicts)
    assert info.value.reason == Refusal.MISSING_LOCKS


def test_unconflicted_interaction_needs_no_token(calendar, calendar_conflicts):
    ds = interact(calendar, init_program(calendar, 3), 2, "add_work", MEETING, calendar_conflicts)
    assert MEETING in ds[1].store["work"].elements()


def test_false_precondition_is_refused(calendar, calendar_conflicts):
    ds = interact(calendar, init_program(calendar, 2), 1, "add_vacation", TWENTY, calendar_conflicts)
    with pytest.raises(Refusal) as info:
        interact(calendar, ds, 1, "add_vacation", TWELVE, calendar_conflicts)
    assert info.value.reason == Refusal.PRECONDITION_FALSE


def test_plain_sync_merges_without_moving_tokens(calendar, calendar_conflicts):
    ds = interact(calendar, init_program(calendar, 2), 1, "add_vacation", TWENTY, calendar_conflicts)
    out = sync(ds, 1, 2)
    assert out[1].store == merge_store(ds[1].store, ds[0].store)
    assert out[0] == ds[0]
    assert out[1].locks == frozenset()


def test_sync_moves_token_with_state(calendar, calendar_conflicts):
    ds = interact(calendar, init_program(calendar, 2), 1, "add_vacation", TWENTY, calendar_conflicts)
    out = sync(ds, 1, 2, frozenset({"add_vacation"}))
    assert out[1].locks == {"add_vacation"} and out[0].locks == {"add_work"}
    assert TWENTY in out[1].store["vacation"].elements()
    with pytest.raises(Refusal) as info:
        interact(calendar, out, 2, "add_vacation", TWELVE, calendar_conflicts)
    assert info.value.reason == Refusal.PRECONDITION_FALSE


def test_sync_of_unheld_token(calendar):
    with pytest.raises(LockNotHeld):
        sync(init_program(calendar, 2), 2, 1, frozenset({"add_vacation"}))
    with pytest.raises(ProtocolViolation):
        sync(init_program(calendar, 2), 1, 1)


# -- protocol -------------------------------------------------------------------


def test_lowest_requester_wins(calendar):
    d1 = init_program(calendar, 3)[0]
    d1, out = lock_protocol_step(d1, Request("add_vacation", 3))
    assert out == []
    d1, _ = lock_protocol_step(d1, Request("add_vacation", 2))
    d1, out = lock_protocol_step(d1, Release("add_vacation"))
    (g,) = out
    assert isinstance(g, Grant) and (g.receiver, g.queue) == (2, (3,))
    assert "add_vacation" not in d1.locks


def test_grant_is_a_sync(calendar, calendar_conflicts):
    ds = interact(calendar, init_program(calendar, 3), 1, "add_vacation", TWENTY, calendar_conflicts)
    after, steps = acquire(ds, 2, {"add_vacation"})
    (label, mid), = steps
    assert label == Sync(1, 2, frozenset({"add_vacation"}))
    assert after == mid == sync(ds, 1, 2, frozenset({"add_vacation"}))


def test_holder_needs_no_messages(calendar):
    ds = init_program(calendar, 2)
    after, steps = acquire(ds, 1, {"add_vacation", "add_work"})
    assert after == ds and steps == []
    d1, out = lock_protocol_step(ds[0], Request("add_vacation", 1))
    assert d1 == ds[0] and out == []


def test_tokens_move_in_ascending_order(calendar):
    _, steps = acquire(init_program(calendar, 2), 2, {"add_work", "add_vacation"})
    assert [sorted(l.locks) for l, _ in steps] == [["add_vacation"], ["add_work"]]


def test_protocol_violations(calendar):
    d1, d2 = init_program(calendar, 2)
    with pytest.raises(ProtocolViolation):
        lock_protocol_step(d2, Release("add_vacation"))
    with pytest.raises(ProtocolViolation):
        lock_protocol_step(d1, Grant("add_vacation", 2, 1, d2.store))


def test_crash_timeout_recover(calendar, calendar_conflicts):
    ds = init_program(calendar, 3)
    ds, _ = acquire(ds, 2, {"add_vacation"})
    ds = interact(calendar, ds, 2, "add_vacation", TWENTY, calendar_conflicts)
    ds = crash(ds, 2)
    with pytest.raises(ProtocolViolation):
        acquire(ds, 3, {"add_vacation"})
    with pytest.raises(ProtocolViolation):
        recover(calendar, ds, 2)  # tokens not reclaimed yet
    ds, label = reclaim(ds, 2)
    assert (label.device, label.taker, label.locks) == (2, 1, {"add_vacation"})
    assert token_holders(ds) == {"add_vacation": [1], "add_work": [1]}
    ds = recover(calendar, ds, 2)
    assert ds[1].alive and ds[1].locks == frozenset()
    assert not ds[1].store["vacation"].elements()


def test_timeout_drops_queued_requests_of_the_crashed(calendar):
    d1 = init_program(calendar, 3)[0]
    d1, _ = lock_protocol_step(d1, Request("add_vacation", 2))
    d1, _ = lock_protocol_step(d1, TimeoutFired(2))
    assert d1.requesters("add_vacation") == []


# -- random walks -----------------------------------------------------------------

ARGS = [TWENTY, TWELVE, MEETING, appointment(4, 0, 31)]
STEP = st.one_of(
    st.tuples(st.just("interact"), st.integers(1, 3), st.sampled_from(["add_vacation", "add_work"]), st.sampled_from(ARGS)),
    st.tuples(st.just("sync"), st.integers(1, 3), st.integers(1, 3), st.booleans()),
)


WALK_PROGRAM = program("calendar.lore")
WALK_TABLE = ConflictTable(["add_vacation", "add_work"], [("add_vacation", "add_vacation")])


@settings(max_examples=200, deadline=None)
@given(st.lists(STEP, max_size=15))
def test_walks_keep_tokens_unique_and_stores_growing(walk):
    p, table = WALK_PROGRAM, WALK_TABLE
    ds = init_program(p, 3)
    for step in walk:
        before = ds
        try:
            if step[0] == "interact":
                _, i, a, arg = step
                ds, _ = acquire(ds, i, table[a])
                ds = interact(p, ds, i, a, arg, table)
            else:
                _, s, r, move = step
                if s == r:
                    continue
                ds = sync(ds, s, r, ds[s - 1].locks if move else frozenset())
        except Refusal:
            pass
        assert all(len(h) == 1 for h in token_holders(ds).values())
        assert set(token_holders(ds)) == {"add_vacation", "add_work"}
        assert all(leq_store(b.store, d.store) for b, d in zip(before, ds))
