"""Static-analysis warning triage: ingest, dedupe, rank, cap, and learn.

The package turns raw FindBugs/SARIF reports into a stable internal form,
tracks findings across runs by content fingerprint, applies a staged
triage pipeline that trims the view down to what a developer can act on,
and accumulates shared knowledge: comments, voted fix examples, fix-time
estimates, and per-pattern metric impact.
"""

from __future__ import annotations

from .errors import WardenError
from .identity import RunDiff, assign_fingerprints, carry_forward, fingerprint, match_runs
from .ingest import (
    CANONICAL_SCHEMA,
    canonical_json_bytes,
    parse_canonical,
    parse_findbugs_xml,
    parse_sarif,
    serialize_run,
)
from .model import (
    AnalysisRun,
    Confidence,
    Finding,
    FpMode,
    Band,
    SeverityRank,
    SourceLocation,
    TriageState,
    band_of,
    display_style,
    effective_severity,
)
from .triage import (
    Stage,
    TriageConfig,
    TriageView,
    apply_level,
    compare,
    pick_random,
    select_capped,
)

__all__ = [
    "AnalysisRun",
    "CANONICAL_SCHEMA",
    "Confidence",
    "Finding",
    "FpMode",
    "RunDiff",
    "Band",
    "SeverityRank",
    "SourceLocation",
    "Stage",
    "TriageConfig",
    "TriageState",
    "TriageView",
    "WardenError",
    "apply_level",
    "assign_fingerprints",
    "band_of",
    "canonical_json_bytes",
    "carry_forward",
    "compare",
    "display_style",
    "effective_severity",
    "fingerprint",
    "match_runs",
    "parse_canonical",
    "parse_findbugs_xml",
    "parse_sarif",
    "pick_random",
    "select_capped",
    "serialize_run",
]
