"""Verifying compiler and multi-device simulator for local-first reactive programs.

Pipeline: parse and type-check a program (:mod:`lore.syntax`), build its
data-flow graph (:mod:`lore.graph`), verify invariant preservation and
confluence under finite bounds (:mod:`lore.verify`), then run it on simulated
devices with token-based coordination (:mod:`lore.runtime`, :mod:`lore.sim`).
"""

from lore.syntax import load_file, load_program

__version__ = "0.1.0"
__all__ = ["load_file", "load_program", "__version__"]
