"""Versioned JSON schemas for the machine-readable outputs."""

import json
from importlib import resources

SCHEMAS = ("check", "conflicts", "schedule", "trace", "sim", "serialize")


def load_schema(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text(encoding="utf-8"))
