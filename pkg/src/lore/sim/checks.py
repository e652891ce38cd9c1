"""Properties checked on traces: validity, token uniqueness, monotonicity and
sequential ordering of conflicting interactions."""

from __future__ import annotations

from dataclasses import dataclass, field

from lore.eval import Evaluator, leq_store
from lore.runtime import Interact, Recover, token_holders
from lore.sim.trace import Trace


@dataclass(frozen=True)
class Violation:
    step: int  # 0 is the initial configuration
    device: int
    invariant: int


@dataclass
class ValidityReport:
    states: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "states": self.states,
            "violations": [v.__dict__ for v in self.violations],
        }


def check_validity(trace: Trace, ev: Evaluator | None = None, stop_at_first: bool = False) -> ValidityReport:
    """Evaluate every invariant on every device after every transition."""
    ev = ev or Evaluator(trace.program)
    report = ValidityReport(0)
    for k, devices in enumerate(trace.states()):
        if k and not trace.steps[k - 1].applied:
            continue
        report.states += 1
        for d in devices:
            for inv in ev.violated(d.store):
                report.violations.append(Violation(k, d.id, inv))
        if stop_at_first and report.violations:
            break
    return report


def check_token_uniqueness(trace: Trace) -> list[str]:
    """Each token is owned by exactly one device in every configuration."""
    tokens = sorted(trace.program.executable)
    problems = []
    for k, devices in enumerate(trace.states()):
        holders = token_holders(devices)
        for t in tokens:
            if len(holders.get(t, [])) != 1:
                problems.append(f"step {k}: token {t} held by {holders.get(t, [])}")
    return problems


def check_monotonic(trace: Trace) -> list[str]:
    """Stores only grow, except on recovery of the recovering device."""
    problems = []
    states = trace.states()
    for k, step in enumerate(trace.steps, start=1):
        for before, after in zip(states[k - 1], states[k]):
            if isinstance(step.label, Recover) and step.label.device == after.id:
                continue
            if not leq_store(before.store, after.store):
                problems.append(f"step {k}: store of D{after.id} shrank")
    return problems


def check_conflict_order(trace: Trace, conflicts=None) -> list[str]:
    """Conflicting interactions are sequentially ordered: the later one starts
    from a store that includes the earlier one's result."""
    table = conflicts or trace.conflicts
    states = trace.states()
    done = []  # (step, interaction, store after)
    problems = []
    for k, step in enumerate(trace.steps, start=1):
        if not (step.applied and isinstance(step.label, Interact)):
            continue
        a = step.label.interaction
        start = states[k - 1][step.label.device - 1].store
        for j, b, after in done:
            if b in table[a] and not leq_store(after, start):
                problems.append(f"step {k} ({a}) is concurrent with conflicting step {j} ({b})")
        done.append((k, a, states[k][step.label.device - 1].store))
    return problems
