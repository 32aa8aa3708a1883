"""Exception types shared across the package.

Every domain-level failure raises a subclass of :class:`WardenError`, so
callers (CLI, HTTP layer) can map "validation problem" vs "I/O problem"
without inspecting message strings.
"""

from __future__ import annotations


class WardenError(Exception):
    """Base class for all domain errors."""


# --- report ingestion ---------------------------------------------------

class MalformedReport(WardenError):
    """Input is not a parseable report of the declared format."""


class InvalidField(WardenError):
    """A report element carries a value outside its legal range."""


class UnsupportedVersion(WardenError):
    """The report declares a format version we do not read."""


# --- triage pipeline ----------------------------------------------------

class InvalidConfig(WardenError):
    """Triage configuration violates its invariants."""


class EmptyPool(WardenError):
    """Random pick requested from an empty candidate pool."""


class UnknownFingerprint(WardenError):
    """Fingerprint does not occur in the latest run."""


# --- knowledge store ----------------------------------------------------

class EmptyText(WardenError):
    """Comment text must be non-empty."""


class UnknownSolution(WardenError):
    """No solution with the given id."""


# --- fix-time records ---------------------------------------------------

class NonPositiveDuration(WardenError):
    """Fix durations must be strictly positive."""


# --- metric impact ------------------------------------------------------

class InsufficientHistory(WardenError):
    """Not enough analysis runs with metric snapshots."""


class UnknownMetric(WardenError):
    """Metric name not present in the fitted model."""


class Underdetermined(WardenError):
    """Too few observations to trust the fitted coefficients."""


# --- sync server --------------------------------------------------------

class CorruptJournal(WardenError):
    """Journal replay hit a malformed event; carries the last valid seq."""

    def __init__(self, message: str, last_valid_seq: int):
        super().__init__(message)
        self.last_valid_seq = last_valid_seq


class BindFailure(WardenError):
    """Server could not bind its address."""


class VersionConflict(WardenError):
    """Optimistic-concurrency write lost the race; client must refetch."""


class UnknownProject(WardenError):
    """No project with the given id."""
