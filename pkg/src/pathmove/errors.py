"""Shared exception hierarchy.

Every error raised by this package derives from PathmoveError so the CLI
can map failures to exit codes in one place.  Module-specific exceptions
live next to the code that raises them and subclass one of the three
coarse categories below.
"""

from __future__ import annotations


class PathmoveError(Exception):
    """Base class for all package errors."""


class ConfigError(PathmoveError):
    """Invalid or missing configuration (exit code 2)."""


class DataError(PathmoveError):
    """Bad or missing input data or artifacts (exit code 3)."""


class InternalError(PathmoveError):
    """A stage failed for reasons other than configuration or input (exit code 4)."""


class MissingArtifactError(DataError):
    """A required artifact from an earlier stage does not exist."""

    def __init__(self, path: str, producer: str):
        super().__init__(f"missing artifact {path!r}: run the {producer!r} stage first")
        self.path = path
        self.producer = producer
