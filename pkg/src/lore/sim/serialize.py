"""Serialization oracle: rewrite a concurrent trace, right to left, into a
sequence of local interactions that reaches the same store on one device.

Locks are disregarded throughout, but preconditions are evaluated: each
rewritten prefix is replayed to decide which case applies, and the result is
replayed from the initial store before it is returned.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any

from lore.crdt import merge_value
from lore.errors import NoSerialization
from lore.eval import Evaluator, Store, leq_store, merge_store, update_store
from lore.runtime import Interact, Recover, Sync
from lore.sim.trace import Trace
from lore.values import show


@dataclass(frozen=True)
class Op:
    kind: str  # "interact" | "sync" | "reset"
    device: int  # acting device, sync receiver, or reset device
    sender: int = 0
    interaction: str = ""
    arg: Any = None
    effect: tuple = ()  # values the interaction wrote in the original trace
    origin: int = 0  # index of the trace step this op came from

    def __str__(self) -> str:
        if self.kind == "interact":
            return f"D{self.device} {self.interaction}({show(self.arg)})"
        if self.kind == "sync":
            return f"sync D{self.sender}->D{self.device}"
        return f"reset D{self.device}"


@dataclass(frozen=True)
class SerialStep:
    replica: int
    interaction: str
    arg: Any
    absorbed: bool = False  # disabled on replay but already reflected in the store
    origin: int = 0

    def __str__(self) -> str:
        mark = " [absorbed]" if self.absorbed else ""
        return f"{self.interaction}({show(self.arg)}) as D{self.replica}{mark}"


@dataclass
class Serialization:
    device: int
    steps: list[SerialStep]
    store: Store
    cases: Counter = field(default_factory=Counter)

    @property
    def absorbed(self) -> int:
        return sum(s.absorbed for s in self.steps)

    def to_json(self) -> dict:
        return {
            "device": self.device,
            "steps": [
                {"replica": s.replica, "interaction": s.interaction, "arg": show(s.arg), "absorbed": s.absorbed, "origin": s.origin}
                for s in self.steps
            ],
            "store_digest": self.store.digest(),
            "cases": dict(sorted(self.cases.items())),
        }


def trace_ops(trace: Trace) -> list[Op]:
    ops = []
    for step in trace.transitions():
        lab = step.label
        if isinstance(lab, Interact):
            decl = trace.program.interaction(lab.interaction)
            after = step.devices[lab.device - 1].store
            effect = tuple(after[r] for r in decl.modifies)
            ops.append(Op("interact", lab.device, 0, lab.interaction, lab.arg, effect, step.index))
        elif isinstance(lab, Sync):
            ops.append(Op("sync", lab.receiver, lab.sender, origin=step.index))
        elif isinstance(lab, Recover):
            ops.append(Op("reset", lab.device, origin=step.index))
    return ops


class _Replayer:
    """Replays op lists from the initial stores, caching prefix states."""

    def __init__(self, trace: Trace, ev: Evaluator):
        self.p = trace.program
        self.ev = ev
        self.init = tuple(d.store for d in trace.initial)
        self.fresh = self.init[0]
        self._cache: list[tuple[Store, ...]] = [self.init]
        self._ops: list[Op] = []

    def apply(self, stores: tuple[Store, ...], op: Op) -> tuple[Store, ...]:
        k = op.device - 1
        if op.kind == "sync":
            new = merge_store(stores[k], stores[op.sender - 1])
        elif op.kind == "reset":
            new = self.fresh
        else:
            decl = self.p.interaction(op.interaction)
            s = stores[k]
            if self.ev.precondition(decl, s, op.arg):
                new = update_store(s, decl.modifies, self.ev.execute(decl, s, op.arg, op.device))
            else:
                new = _merge_effect(s, decl.modifies, op.effect)
        return stores[:k] + (new,) + stores[k + 1 :]

    def states(self, ops: list[Op]) -> tuple[Store, ...]:
        """Stores of all devices after ``ops``."""
        same = 0
        while same < min(len(ops), len(self._ops)) and ops[same] is self._ops[same]:
            same += 1
        del self._cache[same + 1 :]
        self._ops = list(ops[:same])
        for op in ops[same:]:
            self._cache.append(self.apply(self._cache[-1], op))
            self._ops.append(op)
        return self._cache[len(ops)]


def _merge_effect(s: Store, targets, values) -> Store:
    return update_store(s, targets, [merge_value(s[r], v) for r, v in zip(targets, values)])


def _affects(op: Op, d: int) -> bool:
    return op.device == d


def serialize_device(trace: Trace, d: int, ev: Evaluator | None = None, max_iterations: int | None = None) -> Serialization:
    """Serial order of local interactions reproducing device ``d``'s final store."""
    ev = ev or Evaluator(trace.program)
    if not 1 <= d <= len(trace.initial):
        raise ValueError(f"no device D{d}")
    C = trace_ops(trace)
    S: list[Op] = []
    cases: Counter = Counter()
    replay = _Replayer(trace, ev)
    D = d
    cap = max_iterations or 50 * (len(C) + 1) ** 2
    for _ in range(cap):
        if not C:
            break
        T = C[-1]
        if T.kind == "interact":
            if T.device == D:
                S.insert(0, C.pop())
                cases["1"] += 1
            else:
                C.pop()
                cases["2"] += 1
            continue
        if T.kind == "reset":
            if T.device == D:
                C.clear()  # everything before a restart is lost to D
                cases["reset"] += 1
            else:
                C.pop()
                cases["3"] += 1
            continue
        if T.device != D:
            C.pop()
            cases["3"] += 1
            continue
        before = replay.states(C[:-1])
        si, sd = before[T.sender - 1], before[D - 1]
        if leq_store(si, sd):
            C.pop()
            cases["4.1"] += 1
            continue
        if leq_store(sd, si):
            C.pop()
            D = T.sender
            cases["4.2"] += 1
            continue
        j = max(k for k in range(len(C) - 1) if _affects(C[k], D))
        prev = C[j]
        if prev.kind == "interact":
            C = C[:j] + C[j + 1 :] + [prev]
            cases["4.3"] += 1
        elif prev.kind == "sync":
            if prev.sender == T.sender:
                # the same device synchronized into D twice with no change of D in between
                del C[j]
                cases["4.4-same"] += 1
            else:
                C[j] = Op("sync", T.sender, prev.sender, origin=prev.origin)
                cases["4.4"] += 1
        else:
            raise NoSerialization(f"D{D} restarted yet is not below D{T.sender}")
    else:
        raise NoSerialization(f"rewriting did not terminate within {cap} iterations")
    steps, store = replay_serial(trace, S, ev)
    target = trace.final[d - 1].store
    if store != target:
        raise NoSerialization(
            f"serial replay of D{d} reaches {store.canonical()} instead of {target.canonical()}"
        )
    return Serialization(d, steps, store, cases)


def replay_serial(trace: Trace, ops: list[Op], ev: Evaluator) -> tuple[list[SerialStep], Store]:
    """Run interactions one after another on a single device holding every token."""
    p = trace.program
    s = trace.initial[0].store
    steps = []
    for op in ops:
        decl = p.interaction(op.interaction)
        if ev.precondition(decl, s, op.arg):
            s = update_store(s, decl.modifies, ev.execute(decl, s, op.arg, op.device))
            if not ev.postcondition(decl, s, op.arg):
                raise NoSerialization(f"postcondition of {op} fails in the serial order")
            steps.append(SerialStep(op.device, op.interaction, op.arg, False, op.origin))
            continue
        merged = _merge_effect(s, decl.modifies, op.effect)
        if merged.observe() != s.observe():
            raise NoSerialization(f"{op} (trace step {op.origin}) is not enabled in any serial order found")
        s = merged
        steps.append(SerialStep(op.device, op.interaction, op.arg, True, op.origin))
    return steps, s
