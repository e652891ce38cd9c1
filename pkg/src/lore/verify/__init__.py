"""Verification of invariant preservation and confluence under finite bounds."""

from lore.verify.bounds import BoundConfig, enumerate_stores, universe
from lore.verify.checker import (
    PROVED,
    REFUTED,
    SKIPPED,
    BoundedChecker,
    CheckReport,
    ConflictTable,
    Verdict,
    Witness,
    check_confluence,
    check_preservation,
    check_program,
    compute_conflicts,
)

__all__ = [
    "BoundConfig",
    "BoundedChecker",
    "CheckReport",
    "ConflictTable",
    "PROVED",
    "REFUTED",
    "SKIPPED",
    "Verdict",
    "Witness",
    "check_confluence",
    "check_preservation",
    "check_program",
    "compute_conflicts",
    "enumerate_stores",
    "universe",
]
