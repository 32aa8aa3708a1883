"""Report ingestion and the canonical findings interchange format.

Three inputs are accepted: FindBugs/SpotBugs ``BugCollection`` XML, SARIF
2.1.0 JSON (first run only), and our own canonical JSON (``findings-v1``).
Parsing is all-or-nothing: any invalid element rejects the whole report so
triage never operates on silently truncated data.

Canonical JSON is byte-stable: keys sorted, compact separators, UTF-8,
and ``parse_canonical(serialize_run(r))`` structurally equals ``r``.
"""

from __future__ import annotations

import hashlib
import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any

from .errors import InvalidField, MalformedReport, UnsupportedVersion
from .identity import assign_fingerprints
from .model import (
    AnalysisRun,
    Confidence,
    Finding,
    MetricsSnapshot,
    SeverityRank,
    SourceLocation,
    TriageState,
    format_instant,
)
from .model import parse_instant as model_parse_instant

CANONICAL_SCHEMA = "findings-v1"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

_PRIORITY_TO_CONFIDENCE = {1: Confidence.HIGH, 2: Confidence.NORMAL, 3: Confidence.LOW}
_LEVEL_TO_CONFIDENCE = {
    "error": Confidence.HIGH,
    "warning": Confidence.NORMAL,
    "note": Confidence.LOW,
}
_LEVEL_MIDPOINT_RANK = {"error": 4, "warning": 10, "note": 16}


@dataclass(frozen=True)
class RunMeta:
    """Caller-supplied run metadata; unset fields fall back to the report."""

    run_id: str | None = None
    timestamp: datetime | None = None
    tool_name: str | None = None
    tool_version: str | None = None


def parse_instant(text: str) -> datetime:
    try:
        return model_parse_instant(text)
    except ValueError as exc:
        raise MalformedReport(f"bad timestamp {text!r}: {exc}") from exc


def canonical_json_bytes(doc: Any) -> bytes:
    """Stable serialization: sorted keys, compact, UTF-8, trailing newline."""
    return (
        json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        + "\n"
    ).encode("utf-8")


def _default_run_id(data: bytes) -> str:
    return "run-" + hashlib.sha256(data).hexdigest()[:12]


# --- FindBugs XML ---------------------------------------------------------


def parse_findbugs_xml(data: bytes, run_meta: RunMeta | None = None) -> AnalysisRun:
    """Parse a ``BugCollection`` document into an analysis run.

    Per ``BugInstance``: ``type`` -> pattern id, ``rank`` (1..20) ->
    severity, ``priority`` (1 HIGH / 2 NORMAL / 3 LOW) -> confidence,
    ``category`` -> category; message from LongMessage, then ShortMessage,
    then the pattern id; location from the primary SourceLine plus the
    primary Class/Method children. Document order is preserved.
    """
    meta = run_meta or RunMeta()
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedReport(f"not well-formed XML: {exc}") from exc
    if root.tag != "BugCollection":
        raise MalformedReport(f"expected root element BugCollection, got {root.tag}")

    findings = []
    for index, bug in enumerate(root.iter("BugInstance")):
        findings.append(_parse_bug_instance(bug, index))

    timestamp = meta.timestamp
    if timestamp is None:
        timestamp = _findbugs_timestamp(root)

    run = AnalysisRun(
        run_id=meta.run_id or _default_run_id(data),
        timestamp=timestamp,
        tool_name=meta.tool_name or "findbugs",
        tool_version=meta.tool_version or root.get("version", ""),
        findings=assign_fingerprints(findings),
    )
    return run


def _findbugs_timestamp(root: ET.Element) -> datetime:
    raw = root.get("timestamp") or root.get("analysisTimestamp")
    if raw is not None:
        try:
            return datetime.fromtimestamp(int(raw) / 1000.0, tz=timezone.utc)
        except (ValueError, OverflowError, OSError):
            pass
    return _EPOCH


def _parse_bug_instance(bug: ET.Element, index: int) -> Finding:
    where = f"BugInstance #{index}"

    pattern_id = bug.get("type", "")
    if not pattern_id:
        raise InvalidField(f"{where}: missing type attribute")

    rank = _int_attr(bug, "rank", where)
    if not 1 <= rank <= 20:
        raise InvalidField(f"{where} ({pattern_id}): rank {rank} outside 1..20")

    priority = _int_attr(bug, "priority", where)
    if priority not in _PRIORITY_TO_CONFIDENCE:
        raise InvalidField(f"{where} ({pattern_id}): priority {priority} outside 1..3")

    message = _child_text(bug, "LongMessage") or _child_text(bug, "ShortMessage")

    source_line = _primary_child(bug, "SourceLine")
    file_path = source_line.get("sourcepath", "") if source_line is not None else ""
    start = _optional_int_attr(source_line, "start", where)
    end = _optional_int_attr(source_line, "end", where)

    class_el = _primary_child(bug, "Class")
    method_el = _primary_child(bug, "Method")
    class_name = class_el.get("classname") if class_el is not None else None
    method_signature = None
    if method_el is not None:
        name = method_el.get("name", "")
        signature = method_el.get("signature", "")
        method_signature = (name + signature) or None
        if class_name is None:
            class_name = method_el.get("classname")

    try:
        return Finding(
            fingerprint="",
            pattern_id=pattern_id,
            category=bug.get("category", ""),
            message=message or pattern_id,
            severity=SeverityRank(rank),
            confidence=_PRIORITY_TO_CONFIDENCE[priority],
            location=SourceLocation(
                file_path=file_path,
                class_name=class_name,
                method_signature=method_signature,
                start_line=start,
                end_line=end,
            ),
        )
    except ValueError as exc:
        raise InvalidField(f"{where} ({pattern_id}): {exc}") from exc


def _int_attr(el: ET.Element, name: str, where: str) -> int:
    raw = el.get(name)
    if raw is None:
        raise InvalidField(f"{where}: missing {name} attribute")
    try:
        return int(raw)
    except ValueError as exc:
        raise InvalidField(f"{where}: {name}={raw!r} is not an integer") from exc


def _optional_int_attr(el: ET.Element | None, name: str, where: str) -> int | None:
    if el is None:
        return None
    raw = el.get(name)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidField(f"{where}: {name}={raw!r} is not an integer") from exc
    return value if value > 0 else None


def _primary_child(el: ET.Element, tag: str) -> ET.Element | None:
    children = el.findall(tag)
    for child in children:
        if child.get("primary") == "true":
            return child
    return children[0] if children else None


def _child_text(el: ET.Element, tag: str) -> str | None:
    child = el.find(tag)
    if child is not None and child.text:
        text = child.text.strip()
        return text or None
    return None


# --- SARIF ----------------------------------------------------------------


def parse_sarif(data: bytes, run_meta: RunMeta | None = None) -> AnalysisRun:
    """Parse the first run of a SARIF 2.1.0 log.

    ``ruleId`` -> pattern id; ``level`` -> confidence (error HIGH, warning
    NORMAL, note LOW; absent level means warning per the format's default).
    Severity comes from the optional ``rank`` (0..100, higher = more
    important) through ``round_half_up(1 + 19 * (1 - rank/100))``; without a
    rank we take the band midpoint of the level (error 4, warning 10,
    note 16).
    """
    meta = run_meta or RunMeta()
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedReport(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedReport("SARIF log must be a JSON object")

    version = doc.get("version")
    if version is None:
        raise MalformedReport("SARIF log missing version")
    if version != "2.1.0":
        raise UnsupportedVersion(f"SARIF version {version!r} not supported (need 2.1.0)")

    runs = doc.get("runs")
    if not isinstance(runs, list) or not runs:
        raise MalformedReport("SARIF log must contain at least one run")
    sarif_run = runs[0]
    if not isinstance(sarif_run, dict):
        raise MalformedReport("SARIF run must be a JSON object")

    driver = (sarif_run.get("tool") or {}).get("driver") or {}

    findings = []
    results = sarif_run.get("results") or []
    if not isinstance(results, list):
        raise MalformedReport("SARIF results must be an array")
    for index, result in enumerate(results):
        findings.append(_parse_sarif_result(result, index))

    timestamp = meta.timestamp or _sarif_timestamp(sarif_run)

    return AnalysisRun(
        run_id=meta.run_id or _default_run_id(data),
        timestamp=timestamp,
        tool_name=meta.tool_name or driver.get("name", "sarif"),
        tool_version=meta.tool_version or driver.get("version", ""),
        findings=assign_fingerprints(findings),
    )


def _sarif_timestamp(sarif_run: dict) -> datetime:
    invocations = sarif_run.get("invocations") or []
    if invocations and isinstance(invocations[0], dict):
        raw = invocations[0].get("endTimeUtc") or invocations[0].get("startTimeUtc")
        if raw:
            try:
                return parse_instant(raw)
            except MalformedReport:
                pass
    return _EPOCH


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def rank_from_sarif(rank: float) -> int:
    """Affine map of SARIF rank 0..100 onto severity 20..1, half rounded up."""
    return _round_half_up(1 + 19.0 * (1.0 - rank / 100.0))


def _parse_sarif_result(result: Any, index: int) -> Finding:
    where = f"result #{index}"
    if not isinstance(result, dict):
        raise MalformedReport(f"{where}: not a JSON object")

    rule_id = result.get("ruleId")
    if not rule_id or not isinstance(rule_id, str):
        raise InvalidField(f"{where}: missing ruleId")

    level = result.get("level", "warning")
    if level not in _LEVEL_TO_CONFIDENCE:
        raise InvalidField(f"{where} ({rule_id}): unknown level {level!r}")

    rank_value = result.get("rank", -1.0)
    if not isinstance(rank_value, (int, float)) or isinstance(rank_value, bool):
        raise InvalidField(f"{where} ({rule_id}): rank must be a number")
    if rank_value > 100:
        raise InvalidField(f"{where} ({rule_id}): rank {rank_value} outside 0..100")
    if rank_value >= 0:
        severity = SeverityRank(rank_from_sarif(float(rank_value)))
    else:  # negative means unset in SARIF
        severity = SeverityRank(_LEVEL_MIDPOINT_RANK[level])

    message = ""
    msg = result.get("message")
    if isinstance(msg, dict):
        message = msg.get("text") or ""

    file_path = ""
    start = end = None
    locations = result.get("locations") or []
    if locations and isinstance(locations[0], dict):
        physical = locations[0].get("physicalLocation") or {}
        artifact = physical.get("artifactLocation") or {}
        file_path = artifact.get("uri") or ""
        region = physical.get("region") or {}
        start = region.get("startLine")
        end = region.get("endLine")
        for name, value in (("startLine", start), ("endLine", end)):
            if value is not None and (not isinstance(value, int) or value < 1):
                raise InvalidField(f"{where} ({rule_id}): bad region.{name} {value!r}")

    try:
        return Finding(
            fingerprint="",
            pattern_id=rule_id,
            category="",
            message=message or rule_id,
            severity=severity,
            confidence=_LEVEL_TO_CONFIDENCE[level],
            location=SourceLocation(
                file_path=file_path, start_line=start, end_line=end
            ),
        )
    except ValueError as exc:
        raise InvalidField(f"{where} ({rule_id}): {exc}") from exc


# --- canonical JSON --------------------------------------------------------


def location_to_doc(loc: SourceLocation) -> dict:
    return {
        "filePath": loc.file_path,
        "className": loc.class_name,
        "methodSignature": loc.method_signature,
        "startLine": loc.start_line,
        "endLine": loc.end_line,
    }


def finding_to_doc(finding: Finding) -> dict:
    return {
        "fingerprint": finding.fingerprint,
        "patternId": finding.pattern_id,
        "category": finding.category,
        "message": finding.message,
        "severity": finding.severity.rank,
        "confidence": finding.confidence.value,
        "location": location_to_doc(finding.location),
    }


def run_to_doc(run: AnalysisRun) -> dict:
    return {
        "schema": CANONICAL_SCHEMA,
        "runId": run.run_id,
        "timestamp": format_instant(run.timestamp),
        "toolName": run.tool_name,
        "toolVersion": run.tool_version,
        "findings": [finding_to_doc(f) for f in run.findings],
        "metrics": dict(run.metrics.values) if run.metrics is not None else None,
    }


def serialize_run(run: AnalysisRun) -> bytes:
    return canonical_json_bytes(run_to_doc(run))


def finding_from_doc(doc: dict) -> Finding:
    try:
        loc = doc["location"]
        return Finding(
            fingerprint=doc["fingerprint"],
            pattern_id=doc["patternId"],
            category=doc["category"],
            message=doc["message"],
            severity=SeverityRank(doc["severity"]),
            confidence=Confidence(doc["confidence"]),
            location=SourceLocation(
                file_path=loc["filePath"],
                class_name=loc.get("className"),
                method_signature=loc.get("methodSignature"),
                start_line=loc.get("startLine"),
                end_line=loc.get("endLine"),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedReport(f"bad finding document: {exc}") from exc


def run_from_doc(doc: Any) -> AnalysisRun:
    if not isinstance(doc, dict):
        raise MalformedReport("canonical run must be a JSON object")
    if doc.get("schema") != CANONICAL_SCHEMA:
        raise MalformedReport(
            f"expected schema {CANONICAL_SCHEMA!r}, got {doc.get('schema')!r}"
        )
    try:
        run_id = doc["runId"]
        timestamp = parse_instant(doc["timestamp"])
        findings = tuple(finding_from_doc(f) for f in doc["findings"])
        metrics_values = doc.get("metrics")
        metrics = None
        if metrics_values is not None:
            metrics = MetricsSnapshot(run_id=run_id, values=metrics_values)
        return AnalysisRun(
            run_id=run_id,
            timestamp=timestamp,
            tool_name=doc["toolName"],
            tool_version=doc["toolVersion"],
            findings=findings,
            metrics=metrics,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedReport(f"bad run document: {exc}") from exc


def triage_state_to_doc(state: TriageState) -> dict:
    return {
        "falsePositives": {
            fp: format_instant(at) for fp, at in sorted(state.false_positives.items())
        },
        "severityOverrides": {
            fp: rank for fp, rank in sorted(state.severity_overrides.items())
        },
        "dormantSince": {
            fp: format_instant(at) for fp, at in sorted(state.dormant_since.items())
        },
    }


def triage_state_from_doc(doc: Any) -> TriageState:
    if not isinstance(doc, dict):
        raise MalformedReport("triage state must be a JSON object")
    try:
        return TriageState(
            false_positives={
                fp: parse_instant(at)
                for fp, at in doc.get("falsePositives", {}).items()
            },
            severity_overrides={
                fp: int(rank)
                for fp, rank in doc.get("severityOverrides", {}).items()
            },
            dormant_since={
                fp: parse_instant(at)
                for fp, at in doc.get("dormantSince", {}).items()
            },
        )
    except (AttributeError, TypeError, ValueError) as exc:
        raise MalformedReport(f"bad triage state document: {exc}") from exc


def parse_canonical(data: bytes) -> AnalysisRun:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedReport(f"not a JSON document: {exc}") from exc
    return run_from_doc(doc)


def parse_metrics_file(data: bytes, run_id: str) -> MetricsSnapshot:
    """Flat JSON object of metric name -> number, attached at ingest time."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedReport(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedReport("metrics snapshot must be a JSON object")
    values: dict[str, float] = {}
    for name, value in doc.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvalidField(f"metric {name!r} has non-numeric value {value!r}")
        values[name] = float(value)
    return MetricsSnapshot(run_id=run_id, values=values)
