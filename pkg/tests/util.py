"""Shared builders and independent oracles for the test suite.

The oracles restate contracts from scratch (sorting keys, stage
enumeration, purge predicate) so the tests compare two independently
written implementations instead of an implementation with itself.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from warden.identity import assign_fingerprints
from warden.model import (
    AnalysisRun,
    Confidence,
    Finding,
    MetricsSnapshot,
    SeverityRank,
    SourceLocation,
    TriageState,
)

PATTERNS = [
    "NP_NULL_ON_SOME_PATH",
    "SQL_INJECTION",
    "DM_DEFAULT_ENCODING",
    "EI_EXPOSE_REP",
    "RV_RETURN_VALUE_IGNORED",
    "URF_UNREAD_FIELD",
]

FILES = [
    "src/main/App.java",
    "src/main/Service.java",
    "src/main/Repo.java",
    "src/util/Strings.java",
    "src/util/Net.java",
]

CLASSES = [None, "com.example.App", "com.example.Service"]
METHODS = [None, "run()V", "close()V", "init(I)Z"]

BASE_TS = datetime(2024, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

CONFIDENCE_ORDER = {Confidence.HIGH: 0, Confidence.NORMAL: 1, Confidence.LOW: 2}


def make_finding(
    pattern_id: str = "NP_NULL_ON_SOME_PATH",
    file_path: str = "src/main/App.java",
    rank: int = 5,
    confidence: Confidence = Confidence.NORMAL,
    line: int | None = 10,
    end_line: int | None = None,
    class_name: str | None = None,
    method_signature: str | None = None,
    category: str = "CORRECTNESS",
    message: str = "",
    fingerprint: str = "",
) -> Finding:
    return Finding(
        fingerprint=fingerprint,
        pattern_id=pattern_id,
        category=category,
        message=message or f"{pattern_id} at {file_path}",
        severity=SeverityRank(rank),
        confidence=confidence,
        location=SourceLocation(
            file_path=file_path,
            class_name=class_name,
            method_signature=method_signature,
            start_line=line,
            end_line=end_line,
        ),
    )


def make_run(
    findings,
    run_id: str = "run-test",
    ts: datetime = BASE_TS,
    metrics: dict[str, float] | None = None,
    tool_name: str = "findbugs",
    tool_version: str = "3.0.0",
) -> AnalysisRun:
    snapshot = MetricsSnapshot(run_id=run_id, values=metrics) if metrics else None
    return AnalysisRun(
        run_id=run_id,
        timestamp=ts,
        tool_name=tool_name,
        tool_version=tool_version,
        findings=assign_fingerprints(list(findings)),
        metrics=snapshot,
    )


def fixture_run_and_triage() -> tuple[AnalysisRun, TriageState, dict[str, Finding]]:
    """Five findings A..E in ingest order; E carries a false-positive mark.

    A(rank 2, HIGH), B(rank 2, LOW), C(rank 7, HIGH), D(rank 16, NORMAL),
    E(rank 12, HIGH, FP).
    """
    spec = [
        ("A", "PT_ALPHA", 2, Confidence.HIGH),
        ("B", "PT_BRAVO", 2, Confidence.LOW),
        ("C", "PT_CHARLIE", 7, Confidence.HIGH),
        ("D", "PT_DELTA", 16, Confidence.NORMAL),
        ("E", "PT_ECHO", 12, Confidence.HIGH),
    ]
    findings = [
        make_finding(
            pattern_id=pattern,
            file_path=f"src/{name.lower()}.java",
            rank=rank,
            confidence=confidence,
            line=10 * (i + 1),
        )
        for i, (name, pattern, rank, confidence) in enumerate(spec)
    ]
    run = make_run(findings, run_id="run-fixture")
    by_name = {name: f for (name, *_), f in zip(spec, run.findings)}
    triage = TriageState(false_positives={by_name["E"].fingerprint: BASE_TS})
    return run, triage, by_name


def random_run(
    rng: random.Random,
    max_findings: int = 200,
    run_id: str | None = None,
    ts: datetime | None = None,
    metrics: dict[str, float] | None = None,
) -> AnalysisRun:
    n = rng.randint(0, max_findings)
    findings = [
        make_finding(
            pattern_id=rng.choice(PATTERNS),
            file_path=rng.choice(FILES),
            rank=rng.randint(1, 20),
            confidence=rng.choice(list(Confidence)),
            line=rng.randint(1, 400) if rng.random() > 0.05 else None,
            class_name=rng.choice(CLASSES),
            method_signature=rng.choice(METHODS),
            message=f"m{rng.randrange(10)}",
        )
        for _ in range(n)
    ]
    return make_run(
        findings,
        run_id=run_id or f"run-{rng.randrange(1 << 32):08x}",
        ts=ts or BASE_TS + timedelta(minutes=rng.randrange(100000)),
        metrics=metrics,
    )


def random_triage(rng: random.Random, run: AnalysisRun) -> TriageState:
    fps = {}
    overrides = {}
    for f in run.findings:
        roll = rng.random()
        if roll < 0.2:
            fps[f.fingerprint] = BASE_TS
        elif roll < 0.35:
            overrides[f.fingerprint] = rng.randint(1, 20)
    return TriageState(false_positives=fps, severity_overrides=overrides)


# -- independent oracles ---------------------------------------------------


def oracle_sort_key(finding: Finding, triage: TriageState):
    """Comparator restated: effective rank, confidence, path, line, ids."""
    rank = triage.severity_overrides.get(finding.fingerprint, finding.severity.rank)
    return (
        rank,
        CONFIDENCE_ORDER[finding.confidence],
        finding.location.file_path,
        finding.location.start_line if finding.location.start_line is not None else 0,
        finding.pattern_id,
        finding.fingerprint,
    )


def oracle_sorted(findings, triage: TriageState) -> list[Finding]:
    return sorted(findings, key=lambda f: oracle_sort_key(f, triage))


def oracle_select_capped(sorted_l2, triage: TriageState, config):
    """Stage enumeration restated from the cap contract.

    Stage lists are built by predicate, concatenated stage by stage while
    the running view is still short of the cap, then truncated; the pool
    is every candidate of every entered stage.
    """
    min_weight = {Confidence.HIGH: 3, Confidence.NORMAL: 2, Confidence.LOW: 1}[
        config.min_confidence
    ]

    def eff_rank(f: Finding) -> int:
        return triage.severity_overrides.get(f.fingerprint, f.severity.rank)

    def passes_confidence(f: Finding) -> bool:
        return {Confidence.HIGH: 3, Confidence.NORMAL: 2, Confidence.LOW: 1}[
            f.confidence
        ] >= min_weight

    def passes_rank(f: Finding) -> bool:
        return eff_rank(f) <= config.max_rank

    stage_lists = {
        "BASE": [f for f in sorted_l2 if passes_confidence(f) and passes_rank(f)],
        "RELAXED_SEVERITY": [
            f for f in sorted_l2 if passes_confidence(f) and not passes_rank(f)
        ],
        "RELAXED_CONFIDENCE": [f for f in sorted_l2 if not passes_confidence(f)],
    }
    entries: list[tuple[Finding, str]] = []
    pool: list[Finding] = []
    for stage in ("BASE", "RELAXED_SEVERITY", "RELAXED_CONFIDENCE"):
        if stage != "BASE" and len(entries) >= config.cap:
            break
        entries.extend((f, stage) for f in stage_lists[stage])
        pool.extend(stage_lists[stage])
    pool.sort(key=lambda f: oracle_sort_key(f, triage))
    return entries[: config.cap], pool
