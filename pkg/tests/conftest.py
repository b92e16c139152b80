"""Shared pytest fixtures; helpers live in support.py."""

from support import *  # noqa: F401,F403
from support import manifest20  # noqa: F401
