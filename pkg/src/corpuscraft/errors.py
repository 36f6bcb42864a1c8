"""Exception hierarchy shared by every corpuscraft module.

The split mirrors the process exit codes: usage and configuration problems
exit with 1, malformed or inconsistent data exits with 2.
"""

from __future__ import annotations


class CorpuscraftError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CorpuscraftError):
    """The command line was used incorrectly (missing flags, bad values)."""


class ConfigError(CorpuscraftError):
    """A configuration object or file is invalid or internally inconsistent."""


class DataError(CorpuscraftError):
    """An input file or record is malformed, truncated, or out of contract."""
