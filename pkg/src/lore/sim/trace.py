"""Running schedules against the runtime and recording traces."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

from lore.errors import ProtocolViolation, Refusal
from lore.eval import Evaluator, Store
from lore.runtime import (
    Crash,
    Device,
    Devices,
    Interact,
    Label,
    Recover,
    Sync,
    Timeout,
    acquire,
    crash,
    init_program,
    interact,
    reclaim,
    recover,
    sync,
)
from lore.sim.schedule import Attempt, CrashStep, RecoverStep, Schedule, SyncStep, TimeoutStep
from lore.syntax import load_program
from lore.syntax.checker import CheckedProgram
from lore.values import conform, from_json, show, to_json
from lore.verify import ConflictTable

OK = "ok"


@dataclass(frozen=True)
class TraceStep:
    index: int
    label: Label
    outcome: str  # "ok", "refused: <reason>" or "dropped: <why>"
    devices: Devices

    @property
    def applied(self) -> bool:
        return self.outcome == OK


def devices_digest(devices: Devices) -> str:
    text = "|".join(
        f"D{d.id}{'' if d.alive else '!'}[{','.join(sorted(d.locks))}]{d.store.canonical()}" for d in devices
    )
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def label_lockset(label: Label) -> frozenset[str]:
    return getattr(label, "locks", frozenset())


def label_devices(label: Label) -> tuple[int, ...]:
    if isinstance(label, Sync):
        return (label.sender, label.receiver)
    if isinstance(label, Timeout):
        return (label.device, label.taker)
    return (label.device,)


@dataclass
class Trace:
    program: CheckedProgram
    source: str
    schedule: Schedule
    conflicts: ConflictTable
    initial: Devices
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def final(self) -> Devices:
        return self.steps[-1].devices if self.steps else self.initial

    def states(self) -> list[Devices]:
        return [self.initial] + [s.devices for s in self.steps]

    def transitions(self) -> list[TraceStep]:
        return [s for s in self.steps if s.applied]

    def log_lines(self) -> list[str]:
        lines = [f"0\tInit\t{','.join(f'D{d.id}' for d in self.initial)}\t{{}}\t{devices_digest(self.initial)}\tok"]
        for s in self.steps:
            devs = ",".join(f"D{d}" for d in label_devices(s.label))
            locks = ",".join(sorted(label_lockset(s.label)))
            lines.append(f"{s.index}\t{s.label}\t{devs}\t{{{locks}}}\t{devices_digest(s.devices)}\t{s.outcome}")
        return lines

    def log(self) -> str:
        return "\n".join(self.log_lines()) + "\n"

    def digests(self) -> list[str]:
        return [devices_digest(d) for d in self.states()]

    # -- JSON ---------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema": "lore-trace/1",
            "program": {"file": self.program.program.file, "source": self.source},
            "schedule": self.schedule.to_json(),
            "conflicts": self.conflicts.to_json(),
            "initial": _devices_json(self.initial),
            "steps": [
                {
                    "index": s.index,
                    "label": label_to_json(s.label),
                    "outcome": s.outcome,
                    "devices": _devices_json(s.devices),
                    "digest": devices_digest(s.devices),
                }
                for s in self.steps
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, obj: dict) -> "Trace":
        source = obj["program"]["source"]
        p = load_program(source, obj["program"].get("file", "<trace>"))
        steps = [
            TraceStep(s["index"], label_from_json(s["label"]), s["outcome"], _devices_from_json(s["devices"]))
            for s in obj["steps"]
        ]
        return cls(
            p,
            source,
            Schedule.from_json(obj["schedule"]),
            ConflictTable.from_json(obj["conflicts"]),
            _devices_from_json(obj["initial"]),
            steps,
        )

    @classmethod
    def load(cls, path) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def label_to_json(label: Label) -> dict:
    if isinstance(label, Interact):
        return {"kind": "Interact", "device": label.device, "interaction": label.interaction, "arg": to_json(label.arg)}
    if isinstance(label, Sync):
        return {"kind": "Sync", "sender": label.sender, "receiver": label.receiver, "locks": sorted(label.locks)}
    if isinstance(label, Timeout):
        return {"kind": "Timeout", "device": label.device, "taker": label.taker, "locks": sorted(label.locks)}
    return {"kind": type(label).__name__, "device": label.device}


def label_from_json(obj: dict) -> Label:
    k = obj["kind"]
    if k == "Interact":
        return Interact(obj["device"], obj["interaction"], from_json(obj["arg"]))
    if k == "Sync":
        return Sync(obj["sender"], obj["receiver"], frozenset(obj.get("locks", ())))
    if k == "Timeout":
        return Timeout(obj["device"], obj["taker"], frozenset(obj.get("locks", ())))
    if k == "Crash":
        return Crash(obj["device"])
    if k == "Recover":
        return Recover(obj["device"])
    raise ValueError(f"unknown label kind {k!r}")


def _devices_json(devices: Devices) -> list[dict]:
    return [
        {
            "id": d.id,
            "store": d.store.to_json(),
            "locks": sorted(d.locks),
            "dot_counter": d.dot_counter,
            "pending": sorted([t, r] for t, r in d.pending),
            "alive": d.alive,
        }
        for d in devices
    ]


def _devices_from_json(objs: list[dict]) -> Devices:
    return tuple(
        Device(
            o["id"],
            Store.from_json(o["store"]),
            frozenset(o["locks"]),
            o.get("dot_counter", 0),
            frozenset((t, r) for t, r in o.get("pending", [])),
            o.get("alive", True),
        )
        for o in objs
    )


class _Runner:
    def __init__(
        self,
        p: CheckedProgram,
        conflicts: ConflictTable,
        sched: Schedule,
        source: str,
        ev: Evaluator | None,
        devices: Devices | None = None,
    ):
        self.p = p
        self.ev = ev or Evaluator(p)
        self.coordinated = sched.coordination
        self.table = conflicts if sched.coordination else ConflictTable(p.executable)
        self.devices = devices if devices is not None else init_program(p, sched.devices)
        self.trace = Trace(p, source, sched, conflicts, self.devices)

    def record(self, label: Label, outcome: str = OK) -> None:
        self.trace.steps.append(TraceStep(len(self.trace.steps) + 1, label, outcome, self.devices))

    def alive(self, i: int) -> bool:
        return self.devices[i - 1].alive

    def fire_timeout(self, crashed: int) -> None:
        """Pull every live store into the lowest live device, then hand it the tokens."""
        if not self.devices[crashed - 1].locks:
            return
        taker = min(d.id for d in self.devices if d.alive)
        for d in self.devices:
            if d.alive and d.id != taker:
                self.devices = sync(self.devices, d.id, taker)
                self.record(Sync(d.id, taker))
        self.devices, label = reclaim(self.devices, crashed)
        self.record(label)

    def attempt(self, st: Attempt) -> None:
        st = Attempt(st.device, st.interaction, conform(st.arg, self.p.records))
        label = Interact(st.device, st.interaction, st.arg)
        if not self.alive(st.device):
            self.record(label, "dropped: device crashed")
            return
        if st.interaction not in self.p.executable:
            raise ProtocolViolation(f"unknown interaction {st.interaction!r}")
        if self.coordinated:
            needed = self.table[st.interaction]
            for d in self.devices:
                if not d.alive and d.locks & needed:
                    self.fire_timeout(d.id)
            self.devices, grants = acquire(self.devices, st.device, needed)
            for g, devs in grants:
                self.trace.steps.append(TraceStep(len(self.trace.steps) + 1, g, OK, devs))
        try:
            self.devices = interact(self.p, self.devices, st.device, st.interaction, st.arg, self.table, self.ev)
        except Refusal as r:
            self.record(label, f"refused: {r.reason}")
            return
        self.record(label)

    def run(self, steps) -> Trace:
        for st in steps:
            if isinstance(st, Attempt):
                self.attempt(st)
            elif isinstance(st, SyncStep):
                label = Sync(st.sender, st.receiver)
                if not (self.alive(st.sender) and self.alive(st.receiver)):
                    self.record(label, "dropped: device crashed")
                else:
                    self.devices = sync(self.devices, st.sender, st.receiver)
                    self.record(label)
            elif isinstance(st, CrashStep):
                if self.alive(st.device) and sum(d.alive for d in self.devices) > 1:
                    self.devices = crash(self.devices, st.device)
                    self.record(Crash(st.device))
                else:
                    self.record(Crash(st.device), "dropped: cannot crash")
            elif isinstance(st, TimeoutStep):
                if not self.alive(st.device):
                    self.fire_timeout(st.device)
            elif isinstance(st, RecoverStep):
                if self.alive(st.device):
                    self.record(Recover(st.device), "dropped: device is live")
                    continue
                self.fire_timeout(st.device)
                self.devices = recover(self.p, self.devices, st.device)
                self.record(Recover(st.device))
                for d in self.devices:
                    if d.alive and d.id != st.device:
                        self.devices = sync(self.devices, d.id, st.device)
                        self.record(Sync(d.id, st.device))
        return self.trace


def run_schedule(
    p: CheckedProgram,
    conflicts: ConflictTable,
    sched: Schedule,
    source: str | None = None,
    ev: Evaluator | None = None,
) -> Trace:
    """Deterministically execute ``sched``; refused attempts are recorded but change nothing."""
    from lore.syntax import print_program

    src = source if source is not None else print_program(p.program)
    return _Runner(p, conflicts, sched, src, ev).run(sched.steps)


def final_summary(trace: Trace) -> list[str]:
    ev = Evaluator(trace.program)
    out = []
    for d in trace.final:
        vals = ", ".join(f"{k}={show(v)}" for k, v in d.store.observe())
        derived = ", ".join(f"{r}={show(ev.value_of(r, d.store))}" for r in trace.program.derived_order)
        status = "" if d.alive else " (crashed)"
        out.append(f"D{d.id}{status} locks={{{', '.join(sorted(d.locks))}}} {vals}; {derived}")
    return out
