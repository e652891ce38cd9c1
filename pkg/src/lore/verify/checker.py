"""Bounded exhaustive checking of invariant preservation and invariant confluence."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Iterable

from lore.errors import EvalError, NotExecutable, PreservationFailed
from lore.eval import Evaluator, Store, initial_store, merge_store, update_store
from lore.graph import OverlapReport, build_graph, overlapping_pairs
from lore.syntax.ast import Call, InteractionDecl, reads, walk
from lore.syntax.checker import CheckedProgram
from lore.values import show, to_json
from lore.verify.bounds import BoundConfig, enumerate_stores, universe

log = logging.getLogger(__name__)

PROVED = "proved-bounded"
REFUTED = "refuted"
SKIPPED = "skipped-by-overlap"


@dataclass(frozen=True)
class Witness:
    """A concrete counterexample: a starting store, argument(s) and what went wrong."""

    store: Store
    args: tuple
    reason: str
    invariant: int | None = None

    def to_json(self) -> dict:
        return {
            "store": self.store.to_json(),
            "observed": {k: show(v) for k, v in self.store.observe()},
            "args": [to_json(a) for a in self.args],
            "args_text": [show(a) for a in self.args],
            "reason": self.reason,
            "invariant": self.invariant,
        }


@dataclass(frozen=True)
class Verdict:
    obligation: str
    kind: str  # "preservation" | "confluence"
    interactions: tuple[str, ...]
    status: str
    cases: int = 0
    invariants: tuple[int, ...] = ()
    witness: Witness | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status != REFUTED

    def to_json(self) -> dict:
        return {
            "obligation": self.obligation,
            "kind": self.kind,
            "interactions": list(self.interactions),
            "status": self.status,
            "cases": self.cases,
            "invariants": list(self.invariants),
            "witness": None if self.witness is None else self.witness.to_json(),
        }


class ConflictTable:
    """Symmetric map from interaction name to the interactions it must not run concurrently with.

    Both members of a refuted pair also conflict with themselves: whoever
    runs either of them must hold both tokens.
    """

    def __init__(self, names: Iterable[str], refuted: Iterable[tuple[str, str]] = ()):
        self._t: dict[str, set[str]] = {n: set() for n in names}
        for a, b in refuted:
            self._t.setdefault(a, set()).update({a, b})
            self._t.setdefault(b, set()).update({a, b})

    def __getitem__(self, a: str) -> frozenset[str]:
        return frozenset(self._t[a])

    def __iter__(self):
        return iter(sorted(self._t))

    def __eq__(self, other) -> bool:
        return isinstance(other, ConflictTable) and self._t == other._t

    def items(self):
        return [(a, self[a]) for a in self]

    def is_symmetric(self) -> bool:
        return all(a in self._t[b] for a in self._t for b in self._t[a])

    def to_json(self) -> dict[str, list[str]]:
        return {a: sorted(bs) for a, bs in sorted(self._t.items())}

    @classmethod
    def from_json(cls, obj: dict[str, list[str]]) -> "ConflictTable":
        return cls(obj, [(a, b) for a, bs in obj.items() for b in bs])

    def __repr__(self) -> str:
        return f"ConflictTable({self.to_json()})"


@dataclass
class CheckReport:
    program: str
    bounds: BoundConfig
    preservation: list[Verdict]
    confluence: list[Verdict]
    conflicts: ConflictTable
    overlap: OverlapReport
    warnings: list[str] = field(default_factory=list)

    @property
    def verdicts(self) -> list[Verdict]:
        return self.preservation + self.confluence

    @property
    def preservation_ok(self) -> bool:
        return all(v.ok for v in self.preservation)

    def to_json(self) -> dict:
        return {
            "schema": "lore-check/1",
            "program": self.program,
            "bounds": self.bounds.to_json(),
            "obligations": [v.to_json() for v in self.verdicts],
            "conflicts": self.conflicts.to_json(),
            "warnings": list(self.warnings),
        }


class BoundedChecker:
    """Shared enumeration and memoized evaluation for one program under one bound."""

    def __init__(self, p: CheckedProgram, cfg: BoundConfig | None = None):
        self.p = p
        self.cfg = cfg or BoundConfig()
        self.ev = Evaluator(p)
        self.graph = build_graph(p)
        self.overlap = overlapping_pairs(self.graph, p)
        self.init = initial_store(p)
        self._valid: dict[Store, bool] = {}
        self._stores: dict[frozenset, list[Store]] = {}
        self._args: dict[str, list[Any]] = {}
        self.warnings: list[str] = list(self.overlap.warnings)
        self._source_deps = {r: self._sources_of(r) for r in list(p.source_types) + list(p.derived_types)}
        self.add_only = add_only_sources(p)

    # -- enumeration ------------------------------------------------------------

    def _sources_of(self, r: str, seen: frozenset = frozenset()) -> frozenset[str]:
        if r in self.p.source_types:
            return frozenset({r})
        if r in seen:
            return frozenset()
        body = self.p.deriveds[r].body
        return frozenset().union(*(self._sources_of(x, seen | {r}) for x in reads(body)))

    def _closure(self, names: Iterable[str]) -> frozenset[str]:
        return frozenset().union(*(self._source_deps[r] for r in names))

    def relevant_sources(self, *interactions: InteractionDecl) -> frozenset[str]:
        """Sources an obligation over ``interactions`` can observe or change."""
        names: set[str] = set()
        for a in interactions:
            names |= set(a.modifies)
            for c in a.requires + a.ensures + a.executes:
                names |= reads(c)
            for inv in self.overlap.invariant_overlaps[a.name]:
                names |= self.graph.invariant_reads[inv]
        return self._closure(names)

    def valid(self, s: Store) -> bool:
        try:
            return self._valid[s]
        except KeyError:
            v = self._valid[s] = self.ev.valid(s)
            return v

    def stores(self, relevant: frozenset[str]) -> list[Store]:
        if relevant not in self._stores:
            all_stores = enumerate_stores(self.p, self.cfg, sorted(relevant), self.init)
            self._stores[relevant] = [s for s in all_stores if self.valid(s)]
        return self._stores[relevant]

    def arguments(self, a: InteractionDecl) -> list[Any]:
        if a.name not in self._args:
            args = universe(self.p.expand(a.arg_type), self.p, self.cfg)
            if len(args) > self.cfg.max_arguments:
                msg = f"arguments of {a.name} truncated to the first {self.cfg.max_arguments} of {len(args)}"
                log.warning(msg)
                self.warnings.append(msg)
            self._args[a.name] = args[: self.cfg.max_arguments]
        return self._args[a.name]

    def interaction(self, name: str) -> InteractionDecl:
        if name not in self.p.executable:
            raise NotExecutable(f"interaction {name!r} is not executable (missing modifies or executes)")
        return self.p.executable[name]

    # -- single steps -------------------------------------------------------------

    def step(self, a: InteractionDecl, s: Store, arg: Any, replica: int) -> Store:
        return update_store(s, a.modifies, self.ev.execute(a, s, arg, replica))

    # -- obligations --------------------------------------------------------------

    def check_preservation(self, name: str) -> Verdict:
        a = self.interaction(name)
        invs = [i for i in self.p.invariants if i.id in self.overlap.invariant_overlaps[name]]
        inv_ids = tuple(i.id for i in invs)
        started = time.perf_counter()
        cases = 0
        for s in self.stores(self.relevant_sources(a)):
            for arg in self.arguments(a):
                try:
                    if not self.ev.precondition(a, s, arg):
                        continue
                    cases += 1
                    t = self.step(a, s, arg, 1)
                    if not self.ev.postcondition(a, t, arg):
                        w = Witness(s, (arg,), f"postcondition of {name} is false after executing")
                        return self._verdict(f"preservation-{name}", "preservation", (name,), REFUTED, cases, inv_ids, w, started)
                    for inv in invs:
                        if not self.ev.holds(inv.formula, t):
                            w = Witness(s, (arg,), f"invariant {inv.id} is false after executing {name}", inv.id)
                            return self._verdict(f"preservation-{name}", "preservation", (name,), REFUTED, cases, inv_ids, w, started)
                except EvalError as exc:
                    w = Witness(s, (arg,), f"evaluation got stuck: {exc}")
                    return self._verdict(f"preservation-{name}", "preservation", (name,), REFUTED, cases, inv_ids, w, started)
        return self._verdict(f"preservation-{name}", "preservation", (name,), PROVED, cases, inv_ids, None, started)

    def check_confluence(self, n1: str, n2: str, force: bool = False) -> Verdict:
        """Two-order execution check of a pair; pairs without a shared
        invariant are skipped unless ``force`` is set."""
        n1, n2 = sorted((n1, n2))
        a1, a2 = self.interaction(n1), self.interaction(n2)
        ob = f"confluence-{n1}-{n2}"
        pair_invs = tuple(sorted(self.overlap.pair_invariants(n1, n2)))
        started = time.perf_counter()
        if (n1, n2) not in self.overlap.interaction_pairs and not force:
            return self._verdict(ob, "confluence", (n1, n2), SKIPPED, 0, pair_invs, None, started)
        cases = 0
        args1, args2 = self.arguments(a1), self.arguments(a2)
        for s in self.stores(self.relevant_sources(a1, a2)):
            en1 = [v for v in args1 if self._enabled(a1, s, v)]
            en2 = en1 if a1 is a2 else [v for v in args2 if self._enabled(a2, s, v)]
            for v1 in en1:
                s1 = self.step(a1, s, v1, 1)
                for v2 in en2:
                    cases += 1
                    try:
                        problem = self._diamond(a1, a2, s, s1, v1, v2)
                    except EvalError as exc:
                        problem = (f"evaluation got stuck: {exc}", None)
                    if problem is not None:
                        w = Witness(s, (v1, v2), *problem)
                        return self._verdict(ob, "confluence", (n1, n2), REFUTED, cases, pair_invs, w, started)
        return self._verdict(ob, "confluence", (n1, n2), PROVED, cases, pair_invs, None, started)

    def _enabled(self, a: InteractionDecl, s: Store, v: Any) -> bool:
        try:
            return self.ev.precondition(a, s, v)
        except EvalError:
            return False

    def _diamond(self, a1, a2, s, s1, v1, v2) -> tuple[str, int | None] | None:
        """Check both executions from the common store ``s`` commute into a valid merge."""
        s2 = self.step(a2, s, v2, 2)
        joined = merge_store(s1, s2)
        bad = self.ev.violated(joined)
        if bad:
            return (f"invariant {bad[0]} is false in the merged store", bad[0])
        for a, v, other, replica, label in ((a1, v1, s2, 1, "first"), (a2, v2, s1, 2, "second")):
            if self.ev.precondition(a, other, v):
                again = self.step(a, other, v, replica)
                if again != joined:
                    return (f"re-executing the {label} interaction {a.name} after the other diverges from the merge", None)
                if not self.ev.postcondition(a, again, v):
                    return (f"postcondition of {a.name} fails after the other interaction", None)
            elif other != joined:
                if other.observe() != joined.observe():
                    return (f"precondition of {a.name} fails after the other interaction", None)
                hidden = sorted(r for r, v in other.items if v != joined[r] and r not in self.add_only)
                if hidden:
                    return (
                        f"{a.name} is absorbed only up to causal history in {hidden[0]}, which a later removal can observe",
                        None,
                    )
        return None

    def _verdict(self, ob, kind, names, status, cases, invs, witness, started) -> Verdict:
        v = Verdict(ob, kind, names, status, cases, invs, witness, time.perf_counter() - started)
        log.info("%s: %s after %d cases (%.2fs)", ob, status, cases, v.seconds)
        return v


def add_only_sources(p: CheckedProgram) -> frozenset[str]:
    """AWSet sources no interaction removes from.

    Two such sets with the same elements behave the same under every later
    interaction even when their dots differ, so a disabled re-execution that
    only adds a second dot for a present element is harmless.
    """
    removing = set()
    for a in p.executable.values():
        if any(isinstance(n, Call) and n.name in ("remove", "removeAll") for c in a.executes for n in walk(c)):
            removing |= set(a.modifies)
    return frozenset(r for r, t in p.source_types.items() if t.name == "AWSet" and r not in removing)


def check_preservation(p: CheckedProgram, a: str, cfg: BoundConfig | None = None) -> Verdict:
    return BoundedChecker(p, cfg).check_preservation(a)


def check_confluence(p: CheckedProgram, a1: str, a2: str, cfg: BoundConfig | None = None) -> Verdict:
    return BoundedChecker(p, cfg).check_confluence(a1, a2)


def check_program(p: CheckedProgram, cfg: BoundConfig | None = None) -> CheckReport:
    """Run every preservation and confluence obligation of ``p``."""
    bc = BoundedChecker(p, cfg)
    names = sorted(p.executable)
    pres = [bc.check_preservation(n) for n in names]
    conf = []
    if all(v.ok for v in pres):
        conf = [bc.check_confluence(x, y) for k, x in enumerate(names) for y in names[k:]]
    refuted = [v.interactions for v in conf if v.status == REFUTED]
    table = ConflictTable(names, refuted)
    return CheckReport(p.name, bc.cfg, pres, conf, table, bc.overlap, list(bc.warnings))


def compute_conflicts(p: CheckedProgram, cfg: BoundConfig | None = None) -> ConflictTable:
    """Conflict table of ``p``; raises PreservationFailed when an interaction is unsafe on its own."""
    report = check_program(p, cfg)
    if not report.preservation_ok:
        raise PreservationFailed([v for v in report.preservation if not v.ok])
    return report.conflicts
