"""End-to-end acceptance checks, one per criterion.

Each check prints a single ``PASS``/``FAIL`` line; run this file directly
(``python3 tests/test_acceptance.py``) for just those lines, or through
pytest where the same lines appear in the ``-s``/``-v`` output.
"""

from __future__ import annotations

import functools
import json
import sys
import time
from collections import Counter
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import GOLDEN, VACATION_ARGS, WORK_ARGS, program  # noqa: E402
from laws import LAWS, TYPES, count_failures  # noqa: E402
from lore.corpus import corpus_path  # noqa: E402
from lore.eval import Evaluator  # noqa: E402
from lore.graph import build_graph, overlapping_pairs  # noqa: E402
from lore.runtime import Sync  # noqa: E402
from lore.sim import RandomSpec, Schedule, check_validity, random_schedule, run_schedule  # noqa: E402
from lore.sim.explore import ExplorationResult, explore, run_random  # noqa: E402
from lore.values import make_record  # noqa: E402
from lore.verify import ConflictTable, check_program  # noqa: E402

LAW_CASES = 10_000
RANDOM_SCHEDULES = 1_000
DESK = {"add_vacation": VACATION_ARGS, "add_work": WORK_ARGS}  # vacation lengths 12, 20 and 31 days
# one work meeting keeps the exhaustive state space to a few thousand configurations
EXHAUSTIVE = {"add_vacation": VACATION_ARGS, "add_work": WORK_ARGS[:1]}


@functools.lru_cache(maxsize=None)
def calendar():
    return program("calendar.lore")


@functools.lru_cache(maxsize=None)
def calendar_report():
    t0 = time.perf_counter()
    report = check_program(calendar())
    return report, time.perf_counter() - t0


def merged(*results: ExplorationResult) -> ExplorationResult:
    out = ExplorationResult()
    for r in results:
        out.states += r.states
        out.violations += r.violations
        out.serialization_failures += r.serialization_failures
        out.protocol_problems += r.protocol_problems
        out.absorbed += r.absorbed
    return out


@functools.lru_cache(maxsize=None)
def desk_suite(coordinated: bool) -> tuple[ExplorationResult, float, int]:
    """Exhaustive small configurations plus random schedules; returns result, seconds, trace count."""
    p = calendar()
    table = calendar_report()[0].conflicts if coordinated else ConflictTable(p.executable)
    t0 = time.perf_counter()
    exhaustive = explore(p, table, EXHAUSTIVE, devices=3, depth=8, serialize=coordinated)
    spec = RandomSpec(DESK, devices=3, length=20)
    rand = run_random(p, table, spec, range(RANDOM_SCHEDULES), serialize=coordinated)
    return merged(exhaustive, rand), time.perf_counter() - t0, exhaustive.states + RANDOM_SCHEDULES


def criterion_1():
    p = calendar()
    sched = Schedule.load(corpus_path("calendar-anomaly.json"))
    t0 = time.perf_counter()
    trace = run_schedule(p, ConflictTable(p.executable), sched)
    report = check_validity(trace)
    elapsed = time.perf_counter() - t0
    ev = Evaluator(p)
    remaining = [ev.value_of("remaining_vacation", d.store) for d in trace.final]
    first = report.first
    merge_step = next(k for k, s in enumerate(trace.steps, start=1) if isinstance(s.label, Sync))
    ok = (
        remaining == [-2, -2]
        and first is not None
        and first.invariant == 2
        and first.step == merge_step
        and elapsed < 1.0
    )
    where = f"invariant {first.invariant} at step {first.step}" if first else "no violation"
    return ok, f"remaining_vacation={remaining}, {where} (merge at step {merge_step}), {elapsed:.3f}s"


def _conflict_golden(name: str) -> dict:
    return json.loads((GOLDEN / f"{name}.conflicts.json").read_text())


def criterion_2():
    cal = calendar_report()[0].conflicts
    ext_report = check_program(program("calendar-extended.lore"))
    ext = ext_report.conflicts
    symmetric = all(a in ext[b] for a, bs in ext.items() for b in bs)
    refuted = [v.interactions for v in ext_report.confluence if not v.ok]
    covered = all(b in ext[a] and a in ext[b] for a, b in refuted)
    ok = (
        cal.to_json() == _conflict_golden("calendar")
        and cal["add_vacation"] == {"add_vacation"}
        and cal["add_work"] == frozenset()
        and ext.to_json() == _conflict_golden("calendar-extended")
        and symmetric
        and covered
    )
    return ok, f"calendar {cal.to_json()}; extended symmetric={symmetric}, refuted pairs covered={covered}"


def criterion_3():
    p = calendar()
    report = overlapping_pairs(build_graph(p), p)
    pair = tuple(sorted(("add_vacation", "add_work")))
    ok = (
        report.to_json() == json.loads((GOLDEN / "calendar.overlap.json").read_text())
        and report.reaches["add_work"] == {"work", "all_appointments"}
        and 2 not in report.invariant_overlaps["add_work"]
        and 2 not in report.pair_invariants(*pair)
    )
    return ok, f"reaches(add_work)={sorted(report.reaches['add_work'])}, invariants for pair {sorted(report.pair_invariants(*pair))}"


def criterion_4():
    failures = Counter()
    for kind in TYPES:
        for law in LAWS:
            failures[f"{law}/{kind}"] = count_failures(law, kind, LAW_CASES)
    total = sum(failures.values())
    return total == 0, f"{len(failures)} law/type combinations x {LAW_CASES} cases, {total} failures"


def criterion_5():
    good, seconds, traces = desk_suite(True)
    bad, bad_seconds, _ = desk_suite(False)
    ok = not good.violations and bad.violations and seconds + bad_seconds < 300
    return ok, (
        f"{traces} coordinated traces, {len(good.violations)} violations; "
        f"empty table: {len(bad.violations)} violating traces; {seconds + bad_seconds:.0f}s"
    )


def criterion_6():
    good, _, traces = desk_suite(True)
    failed = len(good.serialization_failures)
    return failed == 0, f"{traces} traces x 3 devices, {failed} without a serialization matching the final store"


def criterion_7():
    good, _, traces = desk_suite(True)
    problems = good.protocol_problems
    detail = problems[0][1] if problems else "tokens unique and conflicting steps ordered"
    return not problems, f"{traces} crash-free traces: {detail}"


def _ytd(store) -> set[tuple[int, int]]:
    """District balances recomputed straight from the payment rows."""
    totals = {d: 0 for d in store["districts"].elements()}
    for h in store["payments"].elements():
        if h.get("district") in totals:
            totals[h.get("district")] += h.get("amount")
    return set(totals.items())


def criterion_8():
    p = program("tpcc-mini.lore")
    table = check_program(p).conflicts
    pay = [make_record("Payment", ("id", "district", "amount"), (i, 1 + i % 2, 3 + i)) for i in range(1, 5)]
    orders = [make_record("Order", ("id", "carrier_id"), (i, 0)) for i in (1, 2, 3)]
    deliveries = [make_record("Delivery", ("id", "carrier"), (i, 1 + i % 2)) for i in (1, 2, 3)]
    spec = RandomSpec({"payment": pay, "new_order": orders, "delivery": deliveries}, devices=3, length=20)
    ev = Evaluator(p)
    checked = mismatches = 0
    for seed in range(RANDOM_SCHEDULES):
        trace = run_schedule(p, table, random_schedule(spec, seed), ev=ev)
        for devices in trace.states():
            for d in devices:
                checked += 1
                derived = set(ev.value_of("DistrictYTD", d.store))
                mismatches += derived != _ytd(d.store) or bool(ev.violated(d.store))
    return mismatches == 0, f"{RANDOM_SCHEDULES} schedules, {checked} device states, {mismatches} mismatches"


def criterion_9():
    report, seconds = calendar_report()
    return report.preservation_ok and seconds < 60, f"calendar check took {seconds:.1f}s with default bounds"


CRITERIA = {
    1: ("anomaly reproduction", criterion_1),
    2: ("conflict synthesis", criterion_2),
    3: ("overlap pruning", criterion_3),
    4: ("CRDT laws", criterion_4),
    5: ("desk-scale safety", criterion_5),
    6: ("serialization oracle", criterion_6),
    7: ("token correctness", criterion_7),
    8: ("order-processing balances", criterion_8),
    9: ("checker runtime", criterion_9),
}


def verdict(n: int) -> tuple[bool, str]:
    name, fn = CRITERIA[n]
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'} criterion {n} ({name}): {detail}"
    return bool(ok), line


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, line = verdict(n)
    with capsys.disabled():
        print(f"\n{line}")
    assert ok, line


if __name__ == "__main__":
    results = [verdict(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
