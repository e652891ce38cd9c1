"""Token-based locking: request, release-and-grant, and timeout reclamation.

Every interaction name is a token. A device that wants to run ``a`` acquires
the tokens of ``conflicts(a)`` one at a time in ascending name order. The
holder grants a released token to the lowest-ID requester and the grant
carries its full store, so a grant is exactly a Sync transition with a
one-token lockset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from lore.errors import ProtocolViolation
from lore.eval import Store, merge_store
from lore.runtime.device import Device, Devices, Sync, Timeout, _put, token_holders


@dataclass(frozen=True)
class Request:
    token: str
    requester: int


@dataclass(frozen=True)
class Release:
    token: str


@dataclass(frozen=True)
class Grant:
    token: str
    sender: int
    receiver: int
    store: Store
    queue: tuple[int, ...] = ()


@dataclass(frozen=True)
class TimeoutFired:
    device: int
    tokens: frozenset[str] = frozenset()


Message = Union[Request, Release, Grant, TimeoutFired]


def lock_protocol_step(node: Device, msg: Message) -> tuple[Device, list[Message]]:
    """Deliver one message to ``node``; returns its new state and outgoing messages."""
    if isinstance(msg, Request):
        if msg.token in node.locks and msg.requester != node.id:
            return replace(node, pending=node.pending | {(msg.token, msg.requester)}), []
        return node, []
    if isinstance(msg, Release):
        if msg.token not in node.locks:
            raise ProtocolViolation(f"D{node.id} releases {msg.token} without holding it")
        waiting = node.requesters(msg.token)
        if not waiting:
            return node, []
        to, rest = waiting[0], tuple(waiting[1:])
        node2 = replace(
            node,
            locks=node.locks - {msg.token},
            pending=frozenset(q for q in node.pending if q[0] != msg.token),
        )
        return node2, [Grant(msg.token, node.id, to, node.store, rest)]
    if isinstance(msg, Grant):
        if msg.receiver != node.id:
            raise ProtocolViolation(f"grant for D{msg.receiver} delivered to D{node.id}")
        if msg.token in node.locks:
            raise ProtocolViolation(f"D{node.id} granted {msg.token} which it already holds")
        return (
            replace(
                node,
                store=merge_store(node.store, msg.store),
                locks=node.locks | {msg.token},
                pending=node.pending | {(msg.token, r) for r in msg.queue},
            ),
            [],
        )
    if isinstance(msg, TimeoutFired):
        kept = frozenset(q for q in node.pending if q[1] != msg.device)
        return replace(node, locks=node.locks | msg.tokens, pending=kept), []
    raise ProtocolViolation(f"unknown message {msg!r}")


def lowest_live(devices: Devices, exclude: int | None = None) -> int:
    live = [d.id for d in devices if d.alive and d.id != exclude]
    if not live:
        raise ProtocolViolation("no live device left")
    return live[0]


def acquire(devices: Devices, i: int, tokens) -> tuple[Devices, list[tuple[Sync, Devices]]]:
    """Bring ``tokens`` to device ``i`` in ascending order.

    Returns the new devices and each grant transition performed, paired with
    the device vector right after it. Raises
    ProtocolViolation if a needed token sits on a crashed device (its timeout
    must fire first).
    """
    labels: list[tuple[Sync, Devices]] = []
    for t in sorted(tokens):
        holders = token_holders(devices).get(t, [])
        if len(holders) != 1:
            raise ProtocolViolation(f"token {t} held by {holders}")
        h = holders[0]
        if h == i:
            continue
        if not devices[h - 1].alive:
            raise ProtocolViolation(f"token {t} is on crashed device D{h}")
        out = []
        for d in devices:
            if d.alive:
                d2, msgs = lock_protocol_step(d, Request(t, i))
                devices = _put(devices, d2)
                out += msgs
        holder, msgs = lock_protocol_step(devices[h - 1], Release(t))
        devices = _put(devices, holder)
        for m in msgs:
            receiver, _ = lock_protocol_step(devices[m.receiver - 1], m)
            devices = _put(devices, receiver)
            labels.append((Sync(m.sender, m.receiver, frozenset({t})), devices))
    return devices, labels


def reclaim(devices: Devices, crashed: int) -> tuple[Devices, Timeout]:
    """Fire the timeout of ``crashed``: the lowest live device takes its tokens."""
    d = devices[crashed - 1]
    if d.alive:
        raise ProtocolViolation(f"timeout for live device D{crashed}")
    taker = lowest_live(devices)
    msg = TimeoutFired(crashed, d.locks)
    out = _put(devices, replace(d, locks=frozenset()))
    for x in out:
        if x.alive:
            x2, _ = lock_protocol_step(x, msg if x.id == taker else TimeoutFired(crashed))
            out = _put(out, x2)
    return out, Timeout(crashed, taker, d.locks)
