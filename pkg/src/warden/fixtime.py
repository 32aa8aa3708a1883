"""Fix-duration records and the per-pattern fix-time estimate.

Durations are stored anonymously, either entered by hand or derived from a
run diff when exactly one finding of a file was resolved (ambiguous
intervals are discarded rather than split). The estimate is the sample
median with an interquartile half-width; it is only advertised as READY
once there are enough samples and the half-width is inside the acceptable
uncertainty of 20 minutes.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from .errors import NonPositiveDuration
from .identity import RunDiff
from .model import format_instant, normalize_path, parse_instant

MIN_SAMPLES = 5
READY_HALF_WIDTH_MINUTES = 20.0


class FixSource(str, enum.Enum):
    MANUAL = "MANUAL"
    AUTO = "AUTO"


class EstimateStatus(str, enum.Enum):
    READY = "READY"
    IMPRECISE = "IMPRECISE"
    INSUFFICIENT = "INSUFFICIENT"


@dataclass(frozen=True)
class FixRecord:
    """One observed fix duration; carries no author identity."""

    pattern_id: str
    minutes: float
    source: FixSource
    recorded_at: datetime

    def __post_init__(self) -> None:
        if not self.minutes > 0:
            raise NonPositiveDuration(f"minutes must be > 0, got {self.minutes}")


@dataclass(frozen=True)
class FixEstimate:
    pattern_id: str
    median: float | None
    half_width: float | None
    sample_count: int
    status: EstimateStatus


def estimate(pattern_id: str, records: Iterable[FixRecord]) -> FixEstimate:
    """Median and interquartile half-width of a pattern's fix durations.

    Quartiles use linear interpolation. Status: INSUFFICIENT below
    MIN_SAMPLES samples; READY when the half-width is within
    READY_HALF_WIDTH_MINUTES; IMPRECISE otherwise.
    """
    samples = [r.minutes for r in records if r.pattern_id == pattern_id]
    n = len(samples)
    if n == 0:
        return FixEstimate(pattern_id, None, None, 0, EstimateStatus.INSUFFICIENT)

    p25, p50, p75 = np.percentile(samples, [25.0, 50.0, 75.0])
    median = float(p50)
    half_width = float(p75 - p25) / 2.0

    if n < MIN_SAMPLES:
        status = EstimateStatus.INSUFFICIENT
    elif half_width <= READY_HALF_WIDTH_MINUTES:
        status = EstimateStatus.READY
    else:
        status = EstimateStatus.IMPRECISE
    return FixEstimate(pattern_id, median, half_width, n, status)


def derive_auto(
    diff: RunDiff,
    elapsed_minutes: float,
    file_path: str,
    recorded_at: datetime | None = None,
) -> list[FixRecord]:
    """Attribute an elapsed interval to a fix, if attribution is unambiguous.

    Exactly one resolved finding in ``file_path`` yields one AUTO record
    for its pattern; zero or several yield nothing.
    """
    if not elapsed_minutes > 0:
        raise NonPositiveDuration(f"elapsed must be > 0, got {elapsed_minutes}")
    path = normalize_path(file_path)
    resolved_here = [f for f in diff.resolved if f.location.file_path == path]
    if len(resolved_here) != 1:
        return []
    return [
        FixRecord(
            pattern_id=resolved_here[0].pattern_id,
            minutes=float(elapsed_minutes),
            source=FixSource.AUTO,
            recorded_at=recorded_at or datetime.now(timezone.utc),
        )
    ]


class FixTimeStore:
    """Append-only duration store; appends serialized, reads snapshot."""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._records: list[FixRecord] = []

    def record_manual(
        self,
        pattern_id: str,
        minutes: float,
        *,
        recorded_at: datetime | None = None,
    ) -> FixRecord:
        record = FixRecord(
            pattern_id=pattern_id,
            minutes=float(minutes),
            source=FixSource.MANUAL,
            recorded_at=recorded_at or datetime.now(timezone.utc),
        )
        self.append(record)
        return record

    def append(self, record: FixRecord) -> None:
        with self._lock:
            self._records.append(record)

    def extend(self, records: Sequence[FixRecord]) -> None:
        with self._lock:
            self._records.extend(records)

    def records(self) -> list[FixRecord]:
        with self._lock:
            return list(self._records)

    def estimate(self, pattern_id: str) -> FixEstimate:
        return estimate(pattern_id, self.records())

    # --- persistence ------------------------------------------------------

    def to_doc(self) -> dict:
        return {"records": [_record_to_doc(r) for r in self.records()]}

    @classmethod
    def from_doc(cls, doc: dict) -> "FixTimeStore":
        store = cls()
        store.extend([_record_from_doc(r) for r in doc.get("records", [])])
        return store


def _record_to_doc(r: FixRecord) -> dict:
    return {
        "patternId": r.pattern_id,
        "minutes": r.minutes,
        "source": r.source.value,
        "recordedAt": format_instant(r.recorded_at),
    }


def _record_from_doc(doc: dict) -> FixRecord:
    return FixRecord(
        pattern_id=doc["patternId"],
        minutes=doc["minutes"],
        source=FixSource(doc["source"]),
        recorded_at=parse_instant(doc["recordedAt"]),
    )


def estimate_to_doc(e: FixEstimate) -> dict:
    return {
        "patternId": e.pattern_id,
        "median": e.median,
        "halfWidth": e.half_width,
        "sampleCount": e.sample_count,
        "status": e.status.value,
    }
