"""Scene-aligned multi-agent trajectory prediction.

Thin Python facade over the C++ core: anchor databases, per-agent anchor
profiling, the scene-level MRF with Gibbs/BP inference, evaluation metrics,
dataset and map I/O, and the end-to-end pipeline commands.
"""

from scenealign._core import *  # noqa: F401,F403
from scenealign import _core as core  # noqa: F401

__all__ = [name for name in dir(core) if not name.startswith("_")]
