"""Exit-rate toolkit for multi-channel linear systems under small noise.

Thin package wrapper around the compiled extension; everything public is
re-exported from ``exitrate._core``.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
