"""Stable finding identity and matching across consecutive runs.

A fingerprint digests (pattern, file, class, method, occurrence index) and
deliberately excludes line numbers, so routine edits above a finding do not
orphan the user's judgments. The occurrence index separates structurally
identical findings in one file: 0-based, counted in line order.

``match_runs`` pairs the findings of two runs in two phases: exact
fingerprint equality first, then a greedy nearest-line pass for findings of
the same pattern and file whose lines moved within a window.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Sequence

from .model import AnalysisRun, Finding, TriageState

DEFAULT_LINE_WINDOW = 10
DEFAULT_RETENTION_DAYS = 90

_SEP = "\x1f"
_NONE = "\x00"

IdentityTuple = tuple[str, str, str | None, str | None]


def identity_tuple(finding: Finding) -> IdentityTuple:
    """The line-independent part of a finding's identity."""
    loc = finding.location
    return (finding.pattern_id, loc.file_path, loc.class_name, loc.method_signature)


def _digest(parts: IdentityTuple, occurrence_index: int) -> str:
    raw = _SEP.join(
        [_NONE if p is None else p for p in parts] + [str(occurrence_index)]
    )
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


def _line_of(finding: Finding) -> int:
    return finding.location.start_line or 0


def fingerprint(finding: Finding, siblings_in_file: Sequence[Finding]) -> str:
    """Fingerprint of ``finding`` among all findings of its file in one run.

    The occurrence index is the finding's 0-based position, in line order,
    among the file's findings sharing its identity tuple. Ties on line keep
    the emission order of ``siblings_in_file``.
    """
    key = identity_tuple(finding)
    same = [s for s in siblings_in_file if identity_tuple(s) == key]
    same.sort(key=_line_of)  # stable: equal lines keep sibling order
    for index, sibling in enumerate(same):
        if sibling is finding:
            return _digest(key, index)
    # Caller passed an equal copy rather than the object itself.
    for index, sibling in enumerate(same):
        if sibling == finding or replace(sibling, fingerprint="") == replace(
            finding, fingerprint=""
        ):
            return _digest(key, index)
    raise ValueError("finding is not among its file siblings")


def assign_fingerprints(findings: Sequence[Finding]) -> tuple[Finding, ...]:
    """Return the findings of one run with fingerprints filled in.

    Order is preserved; only the fingerprint field changes.
    """
    # Occurrence indices per (identity tuple), assigned in line order
    # within each file.
    by_key: dict[IdentityTuple, list[int]] = {}
    for pos, finding in enumerate(findings):
        by_key.setdefault(identity_tuple(finding), []).append(pos)

    fingerprints: dict[int, str] = {}
    for key, positions in by_key.items():
        ordered = sorted(positions, key=lambda pos: (_line_of(findings[pos]), pos))
        for index, pos in enumerate(ordered):
            fingerprints[pos] = _digest(key, index)

    return tuple(
        replace(finding, fingerprint=fingerprints[pos])
        for pos, finding in enumerate(findings)
    )


@dataclass(frozen=True)
class RunDiff:
    """Partition of two runs' findings into persisted / resolved / introduced."""

    persisted: tuple[tuple[Finding, Finding], ...]
    resolved: tuple[Finding, ...]
    introduced: tuple[Finding, ...]


def match_runs(
    prev: AnalysisRun, curr: AnalysisRun, line_window: int = DEFAULT_LINE_WINDOW
) -> RunDiff:
    """Match findings of consecutive runs.

    Phase 1 pairs exact fingerprint matches. Phase 2 pairs leftovers of
    identical (pattern, file) whose start lines differ by at most
    ``line_window``, smallest line delta first; ties prefer the smaller
    previous line, then the smaller current line. Unpaired previous
    findings are resolved, unpaired current findings are introduced.
    """
    if line_window < 0:
        raise ValueError(f"line_window must be >= 0, got {line_window}")

    prev_findings = list(prev.findings)
    curr_findings = list(curr.findings)

    prev_free = set(range(len(prev_findings)))
    curr_free = set(range(len(curr_findings)))
    pairs: list[tuple[int, int]] = []

    # Phase 1: exact fingerprint matches. Fingerprints are unique within a
    # run by construction; pair duplicates positionally if they ever occur.
    prev_by_fp: dict[str, list[int]] = {}
    for i, f in enumerate(prev_findings):
        prev_by_fp.setdefault(f.fingerprint, []).append(i)
    curr_by_fp: dict[str, list[int]] = {}
    for j, f in enumerate(curr_findings):
        curr_by_fp.setdefault(f.fingerprint, []).append(j)
    for fp, prev_idxs in prev_by_fp.items():
        for i, j in zip(prev_idxs, curr_by_fp.get(fp, [])):
            pairs.append((i, j))
            prev_free.discard(i)
            curr_free.discard(j)

    # Phase 2: greedy nearest-line within the same (pattern, file).
    candidates: list[tuple[int, int, int, int, int]] = []
    curr_by_group: dict[tuple[str, str], list[int]] = {}
    for j in curr_free:
        f = curr_findings[j]
        curr_by_group.setdefault((f.pattern_id, f.location.file_path), []).append(j)
    for i in prev_free:
        p = prev_findings[i]
        for j in curr_by_group.get((p.pattern_id, p.location.file_path), []):
            delta = abs(_line_of(p) - _line_of(curr_findings[j]))
            if delta <= line_window:
                candidates.append(
                    (delta, _line_of(p), _line_of(curr_findings[j]), i, j)
                )
    candidates.sort()
    for _, _, _, i, j in candidates:
        if i in prev_free and j in curr_free:
            pairs.append((i, j))
            prev_free.discard(i)
            curr_free.discard(j)

    pairs.sort()
    return RunDiff(
        persisted=tuple((prev_findings[i], curr_findings[j]) for i, j in pairs),
        resolved=tuple(prev_findings[i] for i in sorted(prev_free)),
        introduced=tuple(curr_findings[j] for j in sorted(curr_free)),
    )


def carry_forward(
    triage: TriageState,
    diff: RunDiff,
    now: datetime,
    retention_days: int = DEFAULT_RETENTION_DAYS,
) -> TriageState:
    """Carry triage judgments across a run transition.

    Marks on persisted findings follow their finding, re-keyed when a
    phase-2 match changed the fingerprint. Marks on resolved findings go
    dormant and are dropped once dormant longer than ``retention_days``;
    until then a reintroduced finding regains them.
    """
    rekey = {
        p.fingerprint: c.fingerprint
        for p, c in diff.persisted
        if p.fingerprint != c.fingerprint
    }
    present = {c.fingerprint for _, c in diff.persisted}
    present.update(f.fingerprint for f in diff.introduced)

    def remap(mapping: dict) -> dict:
        # Simultaneous re-keying: unmoved keys first, then moved ones so a
        # followed mark wins over a stale one parked under its new key.
        out = {k: v for k, v in mapping.items() if k not in rekey}
        for old, new in rekey.items():
            if old in mapping:
                out[new] = mapping[old]
        return out

    false_positives = remap(dict(triage.false_positives))
    overrides = remap(dict(triage.severity_overrides))
    dormant = remap(dict(triage.dormant_since))

    marked = set(false_positives) | set(overrides)
    for fp in marked:
        if fp in present:
            dormant.pop(fp, None)
        else:
            dormant.setdefault(fp, now)
    dormant = {fp: since for fp, since in dormant.items() if fp in marked}

    horizon = timedelta(days=retention_days)
    expired = {fp for fp, since in dormant.items() if now - since > horizon}
    for fp in expired:
        false_positives.pop(fp, None)
        overrides.pop(fp, None)
        dormant.pop(fp, None)

    return TriageState(
        false_positives=false_positives,
        severity_overrides=overrides,
        dormant_since=dormant,
    )
