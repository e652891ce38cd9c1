"""Exhaustive exploration of small configurations and bulk random runs."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any

from lore.errors import NoSerialization
from lore.eval import Evaluator
from lore.runtime import Crash, Devices, init_program
from lore.sim.checks import check_conflict_order, check_token_uniqueness, check_validity
from lore.sim.schedule import Attempt, RandomSpec, Schedule, Step, SyncStep, random_schedule
from lore.sim.serialize import serialize_device
from lore.sim.trace import Trace, _Runner, run_schedule
from lore.syntax.checker import CheckedProgram

log = logging.getLogger(__name__)


@dataclass
class ExplorationResult:
    states: int = 0
    depth: int = 0
    violations: list[tuple[Schedule, str]] = field(default_factory=list)
    serialization_failures: list[tuple[Schedule, int, str]] = field(default_factory=list)
    protocol_problems: list[tuple[Schedule, str]] = field(default_factory=list)
    absorbed: int = 0  # serializations that needed an absorbed (idempotent) step

    @property
    def ok(self) -> bool:
        return not (self.violations or self.serialization_failures or self.protocol_problems)


def _step_choices(devices: int, arguments: dict[str, list[Any]]) -> list[Step]:
    choices: list[Step] = []
    for i in range(1, devices + 1):
        for a in sorted(arguments):
            for v in arguments[a]:
                choices.append(Attempt(i, a, v))
    for s in range(1, devices + 1):
        for r in range(1, devices + 1):
            if s != r:
                choices.append(SyncStep(s, r))
    return choices


def _check_trace(trace: Trace, ev: Evaluator, result: ExplorationResult, serialize: bool) -> None:
    sched = trace.schedule
    report = check_validity(trace, ev, stop_at_first=True)
    if not report.valid:
        v = report.first
        result.violations.append((sched, f"invariant {v.invariant} violated at step {v.step} on D{v.device}"))
    if sched.coordination:
        problems = check_token_uniqueness(trace)
        # updates of a crashed device may be lost, so ordering is only checked on crash-free traces
        if not any(isinstance(s.label, Crash) for s in trace.steps):
            problems += check_conflict_order(trace)
        for problem in problems:
            result.protocol_problems.append((sched, problem))
    if serialize:
        for d in range(1, sched.devices + 1):
            try:
                s = serialize_device(trace, d, ev)
                result.absorbed += bool(s.absorbed)
            except NoSerialization as exc:
                result.serialization_failures.append((sched, d, str(exc)))


def explore(
    p: CheckedProgram,
    conflicts,
    arguments: dict[str, list[Any]],
    devices: int = 3,
    depth: int = 6,
    coordination: bool = True,
    serialize: bool = True,
    max_states: int = 200_000,
) -> ExplorationResult:
    """Breadth-first search over every schedule of up to ``depth`` steps.

    Configurations reached by different schedules are explored once; the
    first schedule reaching each is the representative that gets checked.
    """
    ev = Evaluator(p)
    start = init_program(p, devices)
    choices = _step_choices(devices, arguments)
    parent: dict[Devices, tuple[Devices, Step] | None] = {start: None}
    frontier = deque([(start, 0)])
    result = ExplorationResult()
    empty = Schedule(devices, (), coordination)
    while frontier:
        cur, k = frontier.popleft()
        result.depth = max(result.depth, k)
        steps = _path(parent, cur)
        sched = Schedule(devices, tuple(steps), coordination)
        trace = run_schedule(p, conflicts, sched, source="", ev=ev)
        _check_trace(trace, ev, result, serialize)
        if k == depth:
            continue
        for st in choices:
            runner = _Runner(p, conflicts, empty, "", ev, cur)
            nxt = runner.run([st]).final
            if nxt not in parent:
                if len(parent) >= max_states:
                    raise RuntimeError(f"more than {max_states} configurations; lower the depth")
                parent[nxt] = (cur, st)
                frontier.append((nxt, k + 1))
    result.states = len(parent)
    log.info("explored %d configurations up to depth %d", result.states, result.depth)
    return result


def _path(parent, node) -> list[Step]:
    steps = []
    while parent[node] is not None:
        node, st = parent[node]
        steps.append(st)
    return steps[::-1]


def run_random(
    p: CheckedProgram,
    conflicts,
    spec: RandomSpec,
    seeds,
    coordination: bool = True,
    serialize: bool = True,
) -> ExplorationResult:
    """Run one random schedule per seed and check every resulting trace."""
    ev = Evaluator(p)
    result = ExplorationResult()
    for seed in seeds:
        sched = random_schedule(spec, seed, coordination)
        trace = run_schedule(p, conflicts, sched, source="", ev=ev)
        result.states += len(trace.steps) + 1
        _check_trace(trace, ev, result, serialize)
    return result
