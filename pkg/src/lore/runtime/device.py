"""Devices and the Interact / Sync transitions over a device vector."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Union

from lore.errors import Fault, LockNotHeld, ProtocolViolation, Refusal
from lore.eval import Evaluator, Store, initial_store, merge_store, update_store
from lore.syntax.checker import CheckedProgram
from lore.values import show

Devices = tuple["Device", ...]


@dataclass(frozen=True)
class Device:
    """One replica: its source store, held tokens and protocol bookkeeping.

    ``pending`` holds (token, requester) pairs queued at the token holder.
    """

    id: int
    store: Store
    locks: frozenset[str] = frozenset()
    dot_counter: int = 0
    pending: frozenset[tuple[str, int]] = frozenset()
    alive: bool = True

    def requesters(self, token: str) -> list[int]:
        return sorted(r for t, r in self.pending if t == token)


# -- transition labels ---------------------------------------------------------


@dataclass(frozen=True)
class Interact:
    device: int
    interaction: str
    arg: Any

    def __str__(self) -> str:
        return f"Interact D{self.device} {self.interaction}({show(self.arg)})"


@dataclass(frozen=True)
class Sync:
    sender: int
    receiver: int
    locks: frozenset[str] = frozenset()

    def __str__(self) -> str:
        return f"Sync D{self.sender}->D{self.receiver}"


@dataclass(frozen=True)
class Crash:
    device: int

    def __str__(self) -> str:
        return f"Crash D{self.device}"


@dataclass(frozen=True)
class Recover:
    device: int

    def __str__(self) -> str:
        return f"Recover D{self.device}"


@dataclass(frozen=True)
class Timeout:
    """Failure detection of a crashed device: its tokens move to ``taker``."""

    device: int
    taker: int
    locks: frozenset[str] = field(default=frozenset())

    def __str__(self) -> str:
        return f"Timeout D{self.device}->D{self.taker}"


Label = Union[Interact, Sync, Crash, Recover, Timeout]


# -- operations -----------------------------------------------------------------


def init_program(p: CheckedProgram, n: int) -> Devices:
    """``n`` devices sharing the initial store; device 1 holds every token."""
    if n < 1:
        raise ValueError("a program needs at least one device")
    s = initial_store(p)
    tokens = frozenset(p.executable)
    return tuple(Device(k, s, tokens if k == 1 else frozenset()) for k in range(1, n + 1))


def _get(devices: Devices, i: int) -> Device:
    if not 1 <= i <= len(devices):
        raise ProtocolViolation(f"no device D{i}")
    d = devices[i - 1]
    if not d.alive:
        raise ProtocolViolation(f"device D{i} has crashed")
    return d


def _put(devices: Devices, d: Device) -> Devices:
    return devices[: d.id - 1] + (d,) + devices[d.id :]


def interact(
    p: CheckedProgram,
    devices: Devices,
    i: int,
    a: str,
    arg: Any,
    conflicts,
    ev: Evaluator | None = None,
) -> Devices:
    """Apply interaction ``a`` with argument ``arg`` on device ``i``.

    Raises Refusal when tokens are missing or the precondition is false and
    Fault when the postcondition is false afterwards.
    """
    ev = ev or Evaluator(p)
    d = _get(devices, i)
    decl = p.interaction(a)
    missing = conflicts[a] - d.locks
    if missing:
        raise Refusal(Refusal.MISSING_LOCKS, f"D{i} lacks {', '.join(sorted(missing))}")
    k = ev.failing_precondition(decl, d.store, arg)
    if k is not None:
        raise Refusal(Refusal.PRECONDITION_FALSE, f"{a}({show(arg)}) requirement {k + 1}")
    s2 = update_store(d.store, decl.modifies, ev.execute(decl, d.store, arg, d.id))
    if not ev.postcondition(decl, s2, arg):
        raise Fault(f"{a}({show(arg)}) on D{i}")
    return _put(devices, replace(d, store=s2, dot_counter=d.dot_counter + 1))


def sync(devices: Devices, s: int, r: int, locks: frozenset[str] = frozenset()) -> Devices:
    """Merge sender ``s``'s store into receiver ``r``, moving ``locks`` along."""
    if s == r:
        raise ProtocolViolation("a device cannot synchronize with itself")
    ds, dr = _get(devices, s), _get(devices, r)
    locks = frozenset(locks)
    if not locks <= ds.locks:
        raise LockNotHeld(f"D{s} does not hold {', '.join(sorted(locks - ds.locks))}")
    ds2 = replace(ds, locks=ds.locks - locks)
    dr2 = replace(dr, store=merge_store(dr.store, ds.store), locks=dr.locks | locks)
    return _put(_put(devices, ds2), dr2)


def crash(devices: Devices, i: int) -> Devices:
    """Crash-stop: the device keeps its tokens until a timeout reclaims them."""
    d = _get(devices, i)
    return _put(devices, replace(d, alive=False, pending=frozenset()))


def recover(p: CheckedProgram, devices: Devices, i: int) -> Devices:
    """Restart a crashed device from the initial store without tokens."""
    if not 1 <= i <= len(devices) or devices[i - 1].alive:
        raise ProtocolViolation(f"device D{i} is not crashed")
    d = devices[i - 1]
    if d.locks:
        raise ProtocolViolation(f"D{i} still owns tokens; its timeout has not fired")
    return _put(devices, Device(i, initial_store(p), frozenset(), d.dot_counter))


def timeout(devices: Devices, i: int, taker: int) -> Devices:
    """Move every token of crashed device ``i`` to live device ``taker``."""
    d = devices[i - 1]
    if d.alive:
        raise ProtocolViolation(f"timeout for live device D{i}")
    t = _get(devices, taker)
    out = _put(devices, replace(d, locks=frozenset()))
    out = tuple(replace(x, pending=frozenset(q for q in x.pending if q[1] != i)) for x in out)
    t = out[taker - 1]
    return _put(out, replace(t, locks=t.locks | d.locks))


def apply_label(p: CheckedProgram, devices: Devices, label: Label, conflicts, ev: Evaluator | None = None) -> Devices:
    if isinstance(label, Interact):
        return interact(p, devices, label.device, label.interaction, label.arg, conflicts, ev)
    if isinstance(label, Sync):
        return sync(devices, label.sender, label.receiver, label.locks)
    if isinstance(label, Crash):
        return crash(devices, label.device)
    if isinstance(label, Recover):
        return recover(p, devices, label.device)
    if isinstance(label, Timeout):
        return timeout(devices, label.device, label.taker)
    raise TypeError(f"not a transition label: {label!r}")


def token_holders(devices: Devices) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    for d in devices:
        for t in d.locks:
            out.setdefault(t, []).append(d.id)
    return out
