"""Schedules: replayable lists of intended events."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Union

from lore.values import from_json, show, to_json


@dataclass(frozen=True)
class Attempt:
    device: int
    interaction: str
    arg: Any


@dataclass(frozen=True)
class SyncStep:
    sender: int
    receiver: int


@dataclass(frozen=True)
class CrashStep:
    device: int


@dataclass(frozen=True)
class RecoverStep:
    device: int


@dataclass(frozen=True)
class TimeoutStep:
    device: int


Step = Union[Attempt, SyncStep, CrashStep, RecoverStep, TimeoutStep]


def step_to_json(s: Step) -> dict:
    if isinstance(s, Attempt):
        return {"op": "interact", "device": s.device, "interaction": s.interaction, "arg": to_json(s.arg)}
    if isinstance(s, SyncStep):
        return {"op": "sync", "from": s.sender, "to": s.receiver}
    op = {CrashStep: "crash", RecoverStep: "recover", TimeoutStep: "timeout"}[type(s)]
    return {"op": op, "device": s.device}


def step_from_json(obj: dict) -> Step:
    op = obj["op"]
    if op == "interact":
        return Attempt(int(obj["device"]), obj["interaction"], from_json(obj["arg"]))
    if op == "sync":
        return SyncStep(int(obj["from"]), int(obj["to"]))
    cls = {"crash": CrashStep, "recover": RecoverStep, "timeout": TimeoutStep}.get(op)
    if cls is None:
        raise ValueError(f"unknown schedule op {op!r}")
    return cls(int(obj["device"]))


def describe(s: Step) -> str:
    if isinstance(s, Attempt):
        return f"D{s.device} {s.interaction}({show(s.arg)})"
    if isinstance(s, SyncStep):
        return f"sync D{s.sender}->D{s.receiver}"
    return f"{type(s).__name__.replace('Step', '').lower()} D{s.device}"


@dataclass(frozen=True)
class Schedule:
    devices: int
    steps: tuple[Step, ...] = ()
    coordination: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.devices < 1:
            raise ValueError("a schedule needs at least one device")
        for s in self.steps:
            ids = (s.sender, s.receiver) if isinstance(s, SyncStep) else (s.device,)
            if not all(1 <= d <= self.devices for d in ids):
                raise ValueError(f"step {describe(s)} names a device outside 1..{self.devices}")

    def to_json(self) -> dict:
        return {
            "schema": "lore-schedule/1",
            "devices": self.devices,
            "coordination": self.coordination,
            "seed": self.seed,
            "steps": [step_to_json(s) for s in self.steps],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Schedule":
        return cls(
            int(obj["devices"]),
            tuple(step_from_json(s) for s in obj.get("steps", [])),
            bool(obj.get("coordination", True)),
            obj.get("seed"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def load(cls, path) -> "Schedule":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass
class RandomSpec:
    """What random schedules may contain."""

    arguments: dict[str, list[Any]]
    devices: int = 3
    length: int = 20
    sync_ratio: float = 0.4
    crash_ratio: float = 0.0
    extra: dict = field(default_factory=dict)


def random_schedule(spec: RandomSpec, seed: int, coordination: bool = True) -> Schedule:
    """Deterministic pseudo-random schedule for ``seed``."""
    rng = random.Random(seed)
    names = sorted(n for n, args in spec.arguments.items() if args)
    n = spec.devices
    steps: list[Step] = []
    down: set[int] = set()
    for _ in range(spec.length):
        roll = rng.random()
        if spec.crash_ratio and roll < spec.crash_ratio:
            d = rng.randint(1, n)
            if d in down:
                steps.append(RecoverStep(d))
                down.discard(d)
            elif len(down) < n - 1:
                steps.append(CrashStep(d))
                down.add(d)
            continue
        if n > 1 and (roll < spec.crash_ratio + spec.sync_ratio or not names):
            s, r = rng.sample(range(1, n + 1), 2)
            steps.append(SyncStep(s, r))
            continue
        if not names:
            continue
        a = rng.choice(names)
        steps.append(Attempt(rng.randint(1, n), a, rng.choice(spec.arguments[a])))
    return Schedule(n, tuple(steps), coordination, seed)
