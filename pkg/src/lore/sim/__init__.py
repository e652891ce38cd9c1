"""Deterministic multi-device simulation, trace checks and the serialization oracle."""

from lore.sim.checks import (
    ValidityReport,
    Violation,
    check_conflict_order,
    check_monotonic,
    check_token_uniqueness,
    check_validity,
)
from lore.sim.schedule import (
    Attempt,
    CrashStep,
    RandomSpec,
    RecoverStep,
    Schedule,
    SyncStep,
    TimeoutStep,
    random_schedule,
)
from lore.sim.serialize import Serialization, SerialStep, serialize_device
from lore.sim.trace import Trace, TraceStep, devices_digest, final_summary, run_schedule

__all__ = [
    "Attempt", "CrashStep", "RandomSpec", "RecoverStep", "Schedule", "SerialStep",
    "Serialization", "SyncStep", "TimeoutStep", "Trace", "TraceStep", "ValidityReport",
    "Violation", "check_conflict_order", "check_monotonic", "check_token_uniqueness",
    "check_validity", "devices_digest", "final_summary", "random_schedule", "run_schedule",
    "serialize_device",
]
