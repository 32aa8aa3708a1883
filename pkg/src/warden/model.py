"""Canonical domain types: findings, runs, triage state, and display styling.

Everything here is an immutable value; the functions are pure. Severity
follows the host analyzer's numeric scale: rank 1..20, smaller = more
severe, grouped into four named bands. Confidence maps onto display
opacity, from fully opaque (HIGH) down to faint (LOW).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Mapping

RANK_MIN = 1
RANK_MAX = 20


class Band(str, enum.Enum):
    """Severity band, derived from the numeric rank."""

    SCARIEST = "SCARIEST"        # ranks 1-4
    SCARY = "SCARY"              # ranks 5-9
    TROUBLING = "TROUBLING"      # ranks 10-14
    OF_CONCERN = "OF_CONCERN"    # ranks 15-20


def band_of(rank: int) -> Band:
    """Band for a rank; bands partition 1..20 and are monotone in rank."""
    if not RANK_MIN <= rank <= RANK_MAX:
        raise ValueError(f"rank must be in [{RANK_MIN}, {RANK_MAX}], got {rank}")
    if rank <= 4:
        return Band.SCARIEST
    if rank <= 9:
        return Band.SCARY
    if rank <= 14:
        return Band.TROUBLING
    return Band.OF_CONCERN


@dataclass(frozen=True)
class SeverityRank:
    """Numeric severity, 1 = most severe, 20 = least."""

    rank: int

    def __post_init__(self) -> None:
        if not isinstance(self.rank, int) or isinstance(self.rank, bool):
            raise ValueError(f"rank must be an integer, got {self.rank!r}")
        if not RANK_MIN <= self.rank <= RANK_MAX:
            raise ValueError(f"rank must be in [{RANK_MIN}, {RANK_MAX}], got {self.rank}")

    @property
    def band(self) -> Band:
        return band_of(self.rank)

    def more_severe_than(self, other: "SeverityRank") -> bool:
        return self.rank < other.rank


class Confidence(str, enum.Enum):
    """Analyzer confidence; total order HIGH > NORMAL > LOW."""

    HIGH = "HIGH"
    NORMAL = "NORMAL"
    LOW = "LOW"

    @property
    def weight(self) -> int:
        """Numeric strength, larger = more confident."""
        return _CONFIDENCE_WEIGHT[self]


_CONFIDENCE_WEIGHT = {Confidence.HIGH: 3, Confidence.NORMAL: 2, Confidence.LOW: 1}

# Opacity per confidence level: opaque for HIGH down to faint for LOW.
ALPHA_BY_CONFIDENCE = {Confidence.HIGH: 1.0, Confidence.NORMAL: 0.6, Confidence.LOW: 0.3}


def normalize_path(path: str) -> str:
    """Forward slashes, no leading "./"."""
    p = path.replace("\\", "/")
    while p.startswith("./"):
        p = p[2:]
    return p


def format_instant(dt: datetime) -> str:
    """UTC ISO-8601 with a ``Z`` suffix; a pure function of the instant."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_instant(text: str) -> datetime:
    """Inverse of :func:`format_instant`; raises ValueError on bad input."""
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(timezone.utc)


@dataclass(frozen=True)
class SourceLocation:
    """Where a finding points in the analyzed sources."""

    file_path: str
    class_name: str | None = None
    method_signature: str | None = None
    start_line: int | None = None
    end_line: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "file_path", normalize_path(self.file_path))
        for name in ("start_line", "end_line"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        if (
            self.start_line is not None
            and self.end_line is not None
            and self.end_line < self.start_line
        ):
            raise ValueError(
                f"end_line {self.end_line} precedes start_line {self.start_line}"
            )


@dataclass(frozen=True)
class Finding:
    """One issue reported by an analyzer.

    ``fingerprint`` is assigned by the identity module and is stable across
    runs; it is empty only transiently during parsing.
    """

    fingerprint: str
    pattern_id: str
    category: str
    message: str
    severity: SeverityRank
    confidence: Confidence
    location: SourceLocation

    def __post_init__(self) -> None:
        if not self.pattern_id:
            raise ValueError("pattern_id must be non-empty")


@dataclass(frozen=True)
class MetricsSnapshot:
    """Code-metric values captured alongside one analysis run."""

    run_id: str
    values: Mapping[str, float]

    def __post_init__(self) -> None:
        for name in self.values:
            if not name:
                raise ValueError("metric names must be non-empty")
        object.__setattr__(self, "values", dict(self.values))


@dataclass(frozen=True)
class AnalysisRun:
    """Findings of one analyzer execution, in tool emission order."""

    run_id: str
    timestamp: datetime
    tool_name: str
    tool_version: str
    findings: tuple[Finding, ...]
    metrics: MetricsSnapshot | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "findings", tuple(self.findings))
        ts = self.timestamp
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "timestamp", ts.astimezone(timezone.utc))


@dataclass(frozen=True)
class TriageState:
    """Per-project persistent user judgments.

    ``false_positives`` maps fingerprint -> when it was marked.
    ``severity_overrides`` maps fingerprint -> replacement rank.
    ``dormant_since`` tracks marks whose finding has left the current run;
    they survive until the retention horizon so a reintroduced issue gets
    its judgment back.
    """

    false_positives: Mapping[str, datetime] = field(default_factory=dict)
    severity_overrides: Mapping[str, int] = field(default_factory=dict)
    dormant_since: Mapping[str, datetime] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for rank in self.severity_overrides.values():
            if not RANK_MIN <= rank <= RANK_MAX:
                raise ValueError(f"override rank {rank} outside [{RANK_MIN}, {RANK_MAX}]")
        object.__setattr__(self, "false_positives", dict(self.false_positives))
        object.__setattr__(self, "severity_overrides", dict(self.severity_overrides))
        object.__setattr__(self, "dormant_since", dict(self.dormant_since))

    def is_false_positive(self, fingerprint: str) -> bool:
        return fingerprint in self.false_positives

    def override_for(self, fingerprint: str) -> int | None:
        return self.severity_overrides.get(fingerprint)

    def with_fp_mark(self, fingerprint: str, marked_at: datetime) -> "TriageState":
        fps = dict(self.false_positives)
        fps[fingerprint] = marked_at
        return replace(self, false_positives=fps)

    def without_fp_mark(self, fingerprint: str) -> "TriageState":
        fps = dict(self.false_positives)
        fps.pop(fingerprint, None)
        return replace(self, false_positives=fps)

    def with_override(self, fingerprint: str, rank: int) -> "TriageState":
        overrides = dict(self.severity_overrides)
        overrides[fingerprint] = rank
        return replace(self, severity_overrides=overrides)

    def without_override(self, fingerprint: str) -> "TriageState":
        overrides = dict(self.severity_overrides)
        overrides.pop(fingerprint, None)
        return replace(self, severity_overrides=overrides)


class FpMode(str, enum.Enum):
    """How false-positive-marked findings render when still visible."""

    HIGHLIGHT = "HIGHLIGHT"
    DIM = "DIM"


class FpTreatment(str, enum.Enum):
    NONE = "NONE"
    HIGHLIGHT = "HIGHLIGHT"
    DIM = "DIM"


@dataclass(frozen=True)
class DisplayStyle:
    """Render hints for one finding: band color, opacity, FP treatment."""

    color_band: Band
    alpha: float
    fp_treatment: FpTreatment


def effective_severity(finding: Finding, triage: TriageState) -> SeverityRank:
    """The user's override when present, the tool's rank otherwise."""
    override = triage.override_for(finding.fingerprint)
    if override is not None:
        return SeverityRank(override)
    return finding.severity


def display_style(finding: Finding, triage: TriageState, fp_mode: FpMode) -> DisplayStyle:
    """Style a finding: band from effective severity, alpha from confidence.

    FP treatment is ``fp_mode`` for marked findings and NONE otherwise.
    """
    severity = effective_severity(finding, triage)
    if triage.is_false_positive(finding.fingerprint):
        treatment = FpTreatment(fp_mode.value)
    else:
        treatment = FpTreatment.NONE
    return DisplayStyle(
        color_band=severity.band,
        alpha=ALPHA_BY_CONFIDENCE[finding.confidence],
        fp_treatment=treatment,
    )
