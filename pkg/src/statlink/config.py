"""Pinned constants and environment plumbing.

Values that the rest of the package treats as policy live here so they are
set in exactly one place.
"""

from __future__ import annotations

import os
from pathlib import Path

# Fraction of header cells on an axis that must parse as time keys for that
# axis to count as the time axis of a wide table.
TIME_AXIS_THRESHOLD = 0.5

# Default freshness window for fetched sources: half a day, in seconds.
DEFAULT_TTL_SECONDS = 43200.0

# Default selections cap the initial area list at this many areas.
MAX_DEFAULT_AREAS = 40

# Years accepted in any time key, inclusive on both ends.
MIN_YEAR = 1800
MAX_YEAR = 2100

# Cell texts that mean "no observation", compared after trim + casefold.
# "0" is never missing; zero is a present value.
MISSING_TOKENS = frozenset({"", ":", "..", "...", "n/a", "na", "-"})

DATA_DIR_ENV = "STATLINK_DATA_DIR"
CACHE_DIR_ENV = "STATLINK_CACHE_DIR"

_DEFAULT_DATA_DIR = "~/.statlink/data"
_DEFAULT_CACHE_DIR = "~/.statlink/cache"


def data_dir(override: str | os.PathLike[str] | None = None) -> Path:
    """Resolve the data directory from override, environment, or default."""
    raw = override or os.environ.get(DATA_DIR_ENV) or _DEFAULT_DATA_DIR
    return Path(raw).expanduser()


def cache_dir(override: str | os.PathLike[str] | None = None) -> Path:
    """Resolve the cache directory from override, environment, or default."""
    raw = override or os.environ.get(CACHE_DIR_ENV) or _DEFAULT_CACHE_DIR
    return Path(raw).expanduser()
