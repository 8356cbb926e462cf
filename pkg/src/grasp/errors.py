"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class GraspError(Exception):
    """Base class for all engine errors."""


class UsageError(GraspError):
    """Caller misuse: bad arguments, malformed input files, missing state.

    Maps to exit code 2 on the CLI and HTTP 4xx in the service.
    """


class TransportError(GraspError):
    """A provider call failed after exhausting retries."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class IndexFormatError(GraspError):
    """An index file is unreadable: wrong magic, version, or truncation."""
