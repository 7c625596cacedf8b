"""Super-replication and duality under transient price impact on scenario trees."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
