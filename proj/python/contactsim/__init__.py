"""Exact and Monte Carlo analysis of contact processes on groups."""

from contactsim._core import *  # noqa: F401,F403
from contactsim._core import __version__  # noqa: F401
