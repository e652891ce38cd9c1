"""Static data-flow graph of a program and the overlap analysis that decides
which interaction pairs need a confluence check."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from lore.syntax.ast import reads
from lore.syntax.checker import CheckedProgram

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DataflowGraph:
    nodes: dict[str, str]  # reactive -> "source" | "derived"
    edges: frozenset[tuple[str, str]]  # (dependency, dependent)
    invariant_reads: dict[int, frozenset[str]]
    interaction_writes: dict[str, frozenset[str]]

    def successors(self, r: str) -> list[str]:
        return sorted(d for s, d in self.edges if s == r)

    def to_dot(self, name: str = "lore") -> str:
        lines = [f'digraph "{name}" {{', "  rankdir=TB;"]
        for r, kind in sorted(self.nodes.items()):
            shape = "box" if kind == "source" else "ellipse"
            lines.append(f'  "{r}" [shape={shape}];')
        for s, d in sorted(self.edges):
            lines.append(f'  "{s}" -> "{d}";')
        for inv, rs in sorted(self.invariant_reads.items()):
            lines.append(f'  "invariant {inv}" [shape=note];')
            for r in sorted(rs):
                lines.append(f'  "{r}" -> "invariant {inv}" [style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class OverlapReport:
    reaches: dict[str, frozenset[str]]
    invariant_overlaps: dict[str, frozenset[int]]
    interaction_pairs: frozenset[tuple[str, str]]  # sorted pairs, self-pairs included
    warnings: tuple[str, ...] = field(default=())

    def pair_invariants(self, a1: str, a2: str) -> frozenset[int]:
        return self.invariant_overlaps[a1] & self.invariant_overlaps[a2]

    def to_json(self) -> dict:
        return {
            "reaches": {a: sorted(rs) for a, rs in sorted(self.reaches.items())},
            "invariant_overlaps": {a: sorted(i) for a, i in sorted(self.invariant_overlaps.items())},
            "pairs": [list(p) for p in sorted(self.interaction_pairs)],
            "pair_invariants": {f"{a}/{b}": sorted(self.pair_invariants(a, b)) for a, b in sorted(self.interaction_pairs)},
            "warnings": list(self.warnings),
        }


def build_graph(p: CheckedProgram) -> DataflowGraph:
    nodes = {s: "source" for s in p.source_types}
    nodes.update({d: "derived" for d in p.derived_types})
    bodies = {d.name: d.body for d in p.program.deriveds}
    edges = frozenset((r, d) for d, body in bodies.items() for r in reads(body))
    inv_reads = {}
    for inv in p.invariants:
        direct = reads(inv.formula)
        # one level of inlining of the derived bodies the invariant reads
        inlined = frozenset().union(*(reads(bodies[r]) for r in direct if r in bodies))
        inv_reads[inv.id] = direct | inlined
    writes = {name: frozenset(a.modifies) for name, a in p.executable.items()}
    return DataflowGraph(nodes, edges, inv_reads, writes)


def reaches(g: DataflowGraph, a: str) -> frozenset[str]:
    """Sources modified by ``a`` plus every reactive transitively derived from them."""
    seen = set(g.interaction_writes.get(a, ()))
    todo = list(seen)
    while todo:
        r = todo.pop()
        for d in g.successors(r):
            if d not in seen:
                seen.add(d)
                todo.append(d)
    return frozenset(seen)


def overlaps(g: DataflowGraph, a: str, inv: int) -> bool:
    return bool(g.invariant_reads[inv] & reaches(g, a))


def overlapping_pairs(g: DataflowGraph, p: CheckedProgram | None = None) -> OverlapReport:
    names = sorted(g.interaction_writes)
    reach = {a: reaches(g, a) for a in names}
    warnings = []
    for inv, rs in sorted(g.invariant_reads.items()):
        if not rs:
            msg = f"invariant {inv} reads no reactive; it overlaps no interaction"
            log.warning(msg)
            warnings.append(msg)
    inv_over = {a: frozenset(i for i, rs in g.invariant_reads.items() if rs & reach[a]) for a in names}
    pairs = frozenset(
        (a1, a2) for k, a1 in enumerate(names) for a2 in names[k:] if inv_over[a1] & inv_over[a2]
    )
    return OverlapReport(reach, inv_over, pairs, tuple(warnings))
