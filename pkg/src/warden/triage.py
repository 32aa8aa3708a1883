"""The information-level pipeline: levels 0..6 over one run.

Levels are strictly cumulative. Level 0 shows findings exactly as the tool
emitted them; level 1 drops false-positive marks; level 2 sorts by
effective severity then confidence; levels 3 and 4 filter by confidence
and severity thresholds; level 5 caps the view at a fixed number of
entries, relaxing the severity restriction and then the confidence
restriction when the strict pool runs short; level 6 shows a single
finding picked deterministically at random from the level-5 pool.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import EmptyPool, InvalidConfig
from .ingest import finding_to_doc
from .model import (
    AnalysisRun,
    Confidence,
    DisplayStyle,
    Finding,
    FpMode,
    TriageState,
    display_style,
    effective_severity,
)

DEFAULT_CAP = 8
DEFAULT_MAX_RANK = 9
DEFAULT_MIN_CONFIDENCE = Confidence.NORMAL

_CONFIDENCE_SORT = {Confidence.HIGH: 0, Confidence.NORMAL: 1, Confidence.LOW: 2}
_MASK64 = 0xFFFFFFFFFFFFFFFF


class Preset(str, enum.Enum):
    FULL_SUPPORT = "FULL_SUPPORT"
    NO_SUPPORT = "NO_SUPPORT"
    CUSTOM = "CUSTOM"


class Stage(str, enum.Enum):
    """How an entry earned its place in a capped view."""

    BASE = "BASE"
    RELAXED_SEVERITY = "RELAXED_SEVERITY"
    RELAXED_CONFIDENCE = "RELAXED_CONFIDENCE"


@dataclass(frozen=True)
class TriageConfig:
    """User-facing knobs of the pipeline.

    ``min_confidence`` is the level-3 threshold (keep at least this
    confident), ``max_rank`` the level-4 threshold (keep at least this
    severe). The FULL_SUPPORT preset pins level 5 with defaults; NO_SUPPORT
    pins level 0.
    """

    level: int = 0
    min_confidence: Confidence = DEFAULT_MIN_CONFIDENCE
    max_rank: int = DEFAULT_MAX_RANK
    cap: int = DEFAULT_CAP
    random_seed: int | None = None
    fp_mode: FpMode = FpMode.HIGHLIGHT
    preset: Preset = Preset.CUSTOM

    def __post_init__(self) -> None:
        if not 0 <= self.level <= 6:
            raise InvalidConfig(f"level must be in 0..6, got {self.level}")
        if not 1 <= self.max_rank <= 20:
            raise InvalidConfig(f"max_rank must be in 1..20, got {self.max_rank}")
        if self.cap < 1:
            raise InvalidConfig(f"cap must be positive, got {self.cap}")
        if self.preset is Preset.FULL_SUPPORT and self.level != 5:
            raise InvalidConfig("FULL_SUPPORT preset requires level 5")
        if self.preset is Preset.NO_SUPPORT and self.level != 0:
            raise InvalidConfig("NO_SUPPORT preset requires level 0")

    @classmethod
    def full_support(cls) -> "TriageConfig":
        """Everything on: capped view at level 5 with default thresholds."""
        return cls(level=5, preset=Preset.FULL_SUPPORT)

    @classmethod
    def no_support(cls) -> "TriageConfig":
        """Plain tool output, no pipeline features."""
        return cls(level=0, preset=Preset.NO_SUPPORT)


@dataclass(frozen=True)
class ViewEntry:
    finding: Finding
    style: DisplayStyle
    stage: Stage


@dataclass(frozen=True)
class TriageView:
    """Ordered, styled result of applying one level to one run."""

    entries: tuple[ViewEntry, ...]
    level_applied: int
    pool: tuple[Finding, ...] = field(default_factory=tuple)

    @property
    def findings(self) -> tuple[Finding, ...]:
        return tuple(e.finding for e in self.entries)


def sort_key(finding: Finding, triage: TriageState):
    """Comparator key: severity first, then confidence, then location."""
    return (
        effective_severity(finding, triage).rank,
        _CONFIDENCE_SORT[finding.confidence],
        finding.location.file_path,
        finding.location.start_line or 0,
        finding.pattern_id,
        finding.fingerprint,
    )


def compare(a: Finding, b: Finding, triage: TriageState) -> int:
    """-1 if ``a`` precedes ``b``, 1 if it follows, 0 only for equal keys.

    A strict total order over findings with distinct fingerprints: more
    severe effective rank first, higher confidence first, then file path,
    start line, pattern id, and fingerprint ascending.
    """
    ka, kb = sort_key(a, triage), sort_key(b, triage)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def _splitmix64(seed: int) -> int:
    z = (seed + 0x9E3779B97F4B7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def pick_random(pool: tuple[Finding, ...], seed: int) -> Finding:
    """Uniform deterministic choice over a comparator-sorted pool."""
    if not pool:
        raise EmptyPool("cannot pick from an empty pool")
    return pool[_splitmix64(seed & _MASK64) % len(pool)]


def _passes_confidence(finding: Finding, config: TriageConfig) -> bool:
    return finding.confidence.weight >= config.min_confidence.weight


def _passes_severity(finding: Finding, triage: TriageState, config: TriageConfig) -> bool:
    return effective_severity(finding, triage).rank <= config.max_rank


def stage_of(finding: Finding, triage: TriageState, config: TriageConfig) -> Stage:
    """The relaxation stage that admits this finding into a capped view."""
    if not _passes_confidence(finding, config):
        return Stage.RELAXED_CONFIDENCE
    if not _passes_severity(finding, triage, config):
        return Stage.RELAXED_SEVERITY
    return Stage.BASE


def select_capped(
    sorted_l2: list[Finding], triage: TriageState, config: TriageConfig
) -> tuple[list[tuple[Finding, Stage]], tuple[Finding, ...]]:
    """Cap a sorted, FP-filtered list, relaxing restrictions as needed.

    Stage 0 holds findings passing both the confidence and severity
    thresholds. Short of ``cap``, the severity restriction is dropped
    (stage RELAXED_SEVERITY), then the confidence restriction (stage
    RELAXED_CONFIDENCE). Each stage admits findings in comparator order.
    The returned pool is every candidate of every stage entered, in
    comparator order, untruncated.
    """
    base = []
    relaxed_severity = []
    relaxed_confidence = []
    for finding in sorted_l2:
        stage = stage_of(finding, triage, config)
        if stage is Stage.BASE:
            base.append(finding)
        elif stage is Stage.RELAXED_SEVERITY:
            relaxed_severity.append(finding)
        else:
            relaxed_confidence.append(finding)

    entries: list[tuple[Finding, Stage]] = [(f, Stage.BASE) for f in base]
    pool = list(base)
    if len(entries) < config.cap:
        entries.extend((f, Stage.RELAXED_SEVERITY) for f in relaxed_severity)
        pool.extend(relaxed_severity)
    if len(entries) < config.cap:
        entries.extend((f, Stage.RELAXED_CONFIDENCE) for f in relaxed_confidence)
        pool.extend(relaxed_confidence)

    order = {f.fingerprint: i for i, f in enumerate(sorted_l2)}
    pool.sort(key=lambda f: order[f.fingerprint])
    return entries[: config.cap], tuple(pool)


def view_to_doc(view: TriageView) -> dict:
    """JSON-ready form of a view; pool is referenced by fingerprint."""
    return {
        "levelApplied": view.level_applied,
        "entries": [
            {
                "finding": finding_to_doc(e.finding),
                "style": {
                    "colorBand": e.style.color_band.value,
                    "alpha": e.style.alpha,
                    "fpTreatment": e.style.fp_treatment.value,
                },
                "inclusionStage": e.stage.value,
            }
            for e in view.entries
        ],
        "pool": [f.fingerprint for f in view.pool],
    }


def apply_level(run: AnalysisRun, triage: TriageState, config: TriageConfig) -> TriageView:
    """Run the cumulative pipeline up to ``config.level``."""

    def entry(finding: Finding, stage: Stage = Stage.BASE) -> ViewEntry:
        return ViewEntry(
            finding=finding,
            style=display_style(finding, triage, config.fp_mode),
            stage=stage,
        )

    if config.level == 0:
        return TriageView(
            entries=tuple(entry(f) for f in run.findings),
            level_applied=0,
        )

    survivors = [f for f in run.findings if not triage.is_false_positive(f.fingerprint)]
    if config.level == 1:
        return TriageView(entries=tuple(entry(f) for f in survivors), level_applied=1)

    survivors.sort(key=lambda f: sort_key(f, triage))
    if config.level == 2:
        return TriageView(entries=tuple(entry(f) for f in survivors), level_applied=2)

    if config.level in (3, 4):
        kept = [f for f in survivors if _passes_confidence(f, config)]
        if config.level == 4:
            kept = [f for f in kept if _passes_severity(f, triage, config)]
        return TriageView(
            entries=tuple(entry(f) for f in kept), level_applied=config.level
        )

    capped, pool = select_capped(survivors, triage, config)
    if config.level == 5:
        return TriageView(
            entries=tuple(entry(f, stage) for f, stage in capped),
            level_applied=5,
            pool=pool,
        )

    # Level 6: one finding picked at random from the level-5 pool.
    if not pool:
        return TriageView(entries=(), level_applied=6, pool=pool)
    seed = config.random_seed if config.random_seed is not None else 0
    picked = pick_random(pool, seed)
    return TriageView(
        entries=(entry(picked, stage_of(picked, triage, config)),),
        level_applied=6,
        pool=pool,
    )
