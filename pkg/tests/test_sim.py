"""Scheduled runs, trace checks and the serialization oracle."""

import dataclasses
import json

import pytest

from lore.corpus import corpus_path
from lore.errors import NoSerialization
from lore.eval import Evaluator
from lore.runtime import Interact, Sync
from lore.sim import (
    Attempt,
    RandomSpec,
    Schedule,
    SyncStep,
    Trace,
    check_conflict_order,
    check_monotonic,
    check_token_uniqueness,
    check_validity,
    random_schedule,
    run_schedule,
    serialize_device,
)
from lore.sim.explore import explore, run_random
from lore.values import appointment
from lore.verify import ConflictTable

from conftest import VACATION_ARGS, WORK_ARGS

ANOMALY = Schedule.load(corpus_path("calendar-anomaly.json"))
COORDINATED = dataclasses.replace(ANOMALY, coordination=True)


def remaining(trace):
    ev = Evaluator(trace.program)
    return [ev.value_of("remaining_vacation", d.store) for d in trace.final]


def test_uncoordinated_anomaly(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, ANOMALY)
    assert remaining(t) == [-2, -2]
    r = check_validity(t)
    assert (r.first.step, r.first.device, r.first.invariant) == (3, 2, 2)
    assert isinstance(t.steps[2].label, Sync)


def test_anomaly_has_no_serialization(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, ANOMALY)
    for d in (1, 2):
        with pytest.raises(NoSerialization):
            serialize_device(t, d)


def test_coordinated_anomaly_refuses_second_vacation(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, COORDINATED)
    outcomes = [(str(s.label), s.outcome) for s in t.steps]
    assert ("Sync D1->D2", "ok") in outcomes  # token grant before D2's attempt
    refused = [s for s in t.steps if isinstance(s.label, Interact) and not s.applied]
    assert len(refused) == 1 and "PreconditionFalse" in refused[0].outcome
    assert remaining(t) == [10, 10]
    assert check_validity(t).valid
    assert check_token_uniqueness(t) == [] and check_conflict_order(t) == []


def test_coordinated_anomaly_serializes(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, COORDINATED)
    for d in (1, 2):
        s = serialize_device(t, d)
        assert s.store == t.final[d - 1].store
        assert 1 <= len(s.steps) <= 2
        assert [x.interaction for x in s.steps] == ["add_vacation"]


def test_empty_schedule(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, Schedule(3, ()))
    assert t.steps == [] and t.final == t.initial
    r = check_validity(t)
    assert r.valid and r.states == 1


def test_syncs_only_serialize_to_nothing(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, Schedule(3, (SyncStep(1, 2), SyncStep(3, 1), SyncStep(2, 3))))
    for d in (1, 2, 3):
        s = serialize_device(t, d)
        assert s.steps == [] and s.store == t.initial[0].store


def test_refused_attempts_change_nothing(calendar, calendar_conflicts):
    big = appointment(9, 0, 31)
    t = run_schedule(calendar, calendar_conflicts, Schedule(2, (Attempt(1, "add_vacation", big),)))
    (step,) = t.steps
    assert not step.applied and step.devices == t.initial


def test_replay_is_deterministic(calendar, calendar_conflicts):
    spec = RandomSpec({"add_vacation": VACATION_ARGS, "add_work": WORK_ARGS}, devices=3, length=25)
    a = run_schedule(calendar, calendar_conflicts, random_schedule(spec, 42))
    b = run_schedule(calendar, calendar_conflicts, random_schedule(spec, 42))
    assert a.digests() == b.digests() and a.dumps() == b.dumps() and a.log() == b.log()
    c = run_schedule(calendar, calendar_conflicts, random_schedule(spec, 43))
    assert c.digests() != a.digests()


def test_schedule_json_round_trip():
    text = ANOMALY.dumps()
    assert Schedule.from_json(json.loads(text)) == ANOMALY
    spec = RandomSpec({"add_vacation": VACATION_ARGS}, crash_ratio=0.2, length=30)
    s = random_schedule(spec, 5)
    assert Schedule.from_json(json.loads(s.dumps())) == s


def test_trace_json_round_trip(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, COORDINATED)
    again = Trace.from_json(json.loads(t.dumps()))
    assert again.digests() == t.digests()
    assert again.log() == t.log()
    assert again.conflicts == t.conflicts
    assert serialize_device(again, 2).store == t.final[1].store


def test_log_format(calendar, calendar_conflicts):
    t = run_schedule(calendar, calendar_conflicts, ANOMALY)
    lines = t.log_lines()
    assert len(lines) == 5
    assert lines[0].split("\t")[:2] == ["0", "Init"]
    fields = lines[3].split("\t")
    assert fields[:4] == ["3", "Sync D1->D2", "D1,D2", "{}"]
    assert fields[4] == t.digests()[3] and fields[5] == "ok"


def test_random_coordinated_runs(calendar, calendar_conflicts):
    spec = RandomSpec({"add_vacation": VACATION_ARGS, "add_work": WORK_ARGS}, devices=3, length=20)
    r = run_random(calendar, calendar_conflicts, spec, range(150))
    assert r.ok, (r.violations[:1], r.serialization_failures[:1], r.protocol_problems[:1])


def test_crash_schedules(calendar, calendar_conflicts):
    spec = RandomSpec({"add_vacation": VACATION_ARGS, "add_work": WORK_ARGS}, devices=3, length=25, crash_ratio=0.15)
    scheds = [random_schedule(spec, s) for s in range(150)]
    assert sum(any(type(x).__name__ == "CrashStep" for x in s.steps) for s in scheds) > 100
    r = run_random(calendar, calendar_conflicts, spec, range(150))
    assert not r.violations and not r.serialization_failures and not r.protocol_problems
    for sched in scheds[:30]:
        t = run_schedule(calendar, calendar_conflicts, sched)
        assert check_monotonic(t) == []


def test_small_exhaustive_exploration(calendar, calendar_conflicts):
    args = {"add_vacation": VACATION_ARGS[:2], "add_work": WORK_ARGS[:1]}
    r = explore(calendar, calendar_conflicts, args, devices=2, depth=5)
    assert r.ok and r.states > 50


def test_wrong_table_is_caught(calendar):
    empty = ConflictTable(calendar.executable)
    args = {"add_vacation": VACATION_ARGS[:2]}
    r = explore(calendar, empty, args, devices=2, depth=3)
    assert r.violations and r.serialization_failures


def test_adversarial_uncoordinated_random_runs(calendar, calendar_conflicts):
    spec = RandomSpec({"add_vacation": VACATION_ARGS}, devices=3, length=12)
    r = run_random(calendar, calendar_conflicts, spec, range(100), coordination=False)
    assert r.violations and r.serialization_failures


def test_tpcc_runs(tpcc, tpcc_conflicts):
    from lore.values import make_record

    pay = [make_record("Payment", ("id", "district", "amount"), (i, d, 5)) for i, d in [(1, 1), (2, 2), (3, 1)]]
    orders = [make_record("Order", ("id", "carrier_id"), (i, 0)) for i in (1, 2)]
    deliveries = [make_record("Delivery", ("id", "carrier"), (i, 1)) for i in (1, 2)]
    spec = RandomSpec({"payment": pay, "new_order": orders, "delivery": deliveries}, devices=3, length=20)
    r = run_random(tpcc, tpcc_conflicts, spec, range(40))
    assert r.ok
