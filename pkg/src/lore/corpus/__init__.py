"""Example programs shipped with the package."""

from importlib import resources


def corpus_path(name: str) -> str:
    """Filesystem path of a shipped corpus file such as ``calendar.lore``."""
    return str(resources.files(__name__).joinpath(name))
