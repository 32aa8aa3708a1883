"""Per-pattern impact of findings on code metrics.

Consecutive runs with metric snapshots yield delta rows: how each
pattern's finding count moved, and how each metric moved. An ordinary
least-squares fit without intercept (an unchanged codebase must predict an
unchanged metric) gives each pattern a coefficient in metric units per
finding, which turns into "fix these first" recommendations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientHistory, Underdetermined, UnknownMetric
from .identity import match_runs
from .model import AnalysisRun


class Direction(str, enum.Enum):
    DECREASE = "DECREASE"
    INCREASE = "INCREASE"


@dataclass(frozen=True)
class DeltaRow:
    """Changes between one consecutive run pair; zero deltas are omitted."""

    pattern_deltas: Mapping[str, int]
    metric_deltas: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pattern_deltas", dict(self.pattern_deltas))
        object.__setattr__(self, "metric_deltas", dict(self.metric_deltas))


@dataclass(frozen=True)
class MetricImpact:
    """Fitted coefficients for one metric: metric units per added finding."""

    betas: Mapping[str, float]
    observation_pairs: int
    residual_norm: float
    underdetermined: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "betas", dict(self.betas))


@dataclass(frozen=True)
class ImpactModel:
    per_metric: Mapping[str, MetricImpact]

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_metric", dict(self.per_metric))


def pattern_counts(run: AnalysisRun) -> dict[str, int]:
    counts: dict[str, int] = {}
    for finding in run.findings:
        counts[finding.pattern_id] = counts.get(finding.pattern_id, 0) + 1
    return counts


def build_deltas(history: Sequence[AnalysisRun]) -> list[DeltaRow]:
    """One row per consecutive pair of runs that carry metric snapshots.

    Pattern deltas come from the run diff (introduced minus resolved per
    pattern); metric deltas cover the metrics present in both snapshots.
    """
    with_snapshots = [r for r in history if r.metrics is not None]
    if len(with_snapshots) < 2:
        raise InsufficientHistory(
            f"need at least 2 runs with metric snapshots, have {len(with_snapshots)}"
        )

    rows = []
    for prev, curr in zip(with_snapshots, with_snapshots[1:]):
        diff = match_runs(prev, curr)
        deltas: dict[str, int] = {}
        for finding in diff.introduced:
            deltas[finding.pattern_id] = deltas.get(finding.pattern_id, 0) + 1
        for finding in diff.resolved:
            deltas[finding.pattern_id] = deltas.get(finding.pattern_id, 0) - 1
        deltas = {p: d for p, d in deltas.items() if d != 0}

        prev_values = prev.metrics.values
        curr_values = curr.metrics.values
        metric_deltas = {
            name: curr_values[name] - prev_values[name]
            for name in curr_values
            if name in prev_values
        }
        rows.append(DeltaRow(pattern_deltas=deltas, metric_deltas=metric_deltas))
    return rows


def fit_impact(rows: Sequence[DeltaRow]) -> ImpactModel:
    """Least squares of each metric delta on the pattern-count deltas.

    No intercept. A metric whose observation count is below its number of
    active patterns is flagged underdetermined and recommendations refuse
    to use it.
    """
    if not rows:
        raise InsufficientHistory("empty delta dataset")

    metric_names = sorted({m for row in rows for m in row.metric_deltas})
    per_metric: dict[str, MetricImpact] = {}
    for metric in metric_names:
        metric_rows = [row for row in rows if metric in row.metric_deltas]
        patterns = sorted(
            {p for row in metric_rows for p, d in row.pattern_deltas.items() if d != 0}
        )
        y = np.array([row.metric_deltas[metric] for row in metric_rows], dtype=float)

        if not patterns:
            per_metric[metric] = MetricImpact(
                betas={},
                observation_pairs=len(metric_rows),
                residual_norm=float(np.linalg.norm(y)),
                underdetermined=False,
            )
            continue

        x = np.zeros((len(metric_rows), len(patterns)))
        for i, row in enumerate(metric_rows):
            for j, pattern in enumerate(patterns):
                x[i, j] = row.pattern_deltas.get(pattern, 0)
        beta, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
        residual = float(np.linalg.norm(x @ beta - y))
        per_metric[metric] = MetricImpact(
            betas={p: float(b) for p, b in zip(patterns, beta)},
            observation_pairs=len(metric_rows),
            residual_norm=residual,
            underdetermined=len(metric_rows) < len(patterns),
        )
    return ImpactModel(per_metric=per_metric)


def recommend(
    model: ImpactModel,
    metric_name: str,
    direction: Direction,
    current_counts: Mapping[str, int],
) -> list[tuple[str, float]]:
    """Rank patterns by the projected metric change of clearing them out.

    The projection for a pattern is beta times the negated current count
    (remove every remaining finding of that pattern). DECREASE favors the
    most negative projection, INCREASE the most positive; ties break on
    pattern id.
    """
    if metric_name not in model.per_metric:
        raise UnknownMetric(f"no fitted impact for metric {metric_name!r}")
    impact = model.per_metric[metric_name]
    if impact.underdetermined:
        raise Underdetermined(
            f"metric {metric_name!r} has {impact.observation_pairs} observations "
            f"for {len(impact.betas)} patterns"
        )

    projections = [
        (pattern, beta * -current_counts.get(pattern, 0))
        for pattern, beta in impact.betas.items()
    ]
    sign = 1.0 if direction is Direction.INCREASE else -1.0
    projections.sort(key=lambda item: (-sign * item[1], item[0]))
    return projections


def impact_to_doc(model: ImpactModel) -> dict:
    return {
        "perMetric": {
            metric: {
                "betas": {p: b for p, b in sorted(impact.betas.items())},
                "observationPairs": impact.observation_pairs,
                "residualNorm": impact.residual_norm,
                "underdetermined": impact.underdetermined,
            }
            for metric, impact in sorted(model.per_metric.items())
        }
    }
