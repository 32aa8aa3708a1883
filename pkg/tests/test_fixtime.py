from __future__ import annotations

import math
import random
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from util import make_finding, make_run
from warden.errors import NonPositiveDuration
from warden.fixtime import (
    EstimateStatus,
    FixRecord,
    FixSource,
    FixTimeStore,
    derive_auto,
    estimate,
    estimate_to_doc,
)
from warden.identity import match_runs

T0 = datetime(2024, 3, 1, tzinfo=timezone.utc)


def records_for(pattern_id: str, samples) -> list[FixRecord]:
    return [
        FixRecord(pattern_id=pattern_id, minutes=float(m), source=FixSource.MANUAL, recorded_at=T0)
        for m in samples
    ]


def est(samples, pattern_id: str = "P"):
    return estimate(pattern_id, records_for(pattern_id, samples))


def test_record_requires_positive_minutes():
    store = FixTimeStore()
    r = store.record_manual("NP_NULL", 25)
    assert r.source is FixSource.MANUAL
    assert r.minutes == 25.0
    store.record_manual("NP_NULL", 0.5)  # sub-minute fixes allowed
    with pytest.raises(NonPositiveDuration):
        store.record_manual("NP_NULL", 0)
    with pytest.raises(NonPositiveDuration):
        store.record_manual("NP_NULL", -3)
    assert len(store.records()) == 2


def test_records_carry_no_author_identity():
    r = FixRecord("P", 1.0, FixSource.AUTO, T0)
    assert set(r.__dataclass_fields__) == {
        "pattern_id", "minutes", "source", "recorded_at",
    }


def test_estimate_five_spread_samples():
    e = est([10, 20, 30, 40, 50])
    assert e.median == 30.0
    assert e.half_width == 10.0
    assert e.sample_count == 5
    assert e.status is EstimateStatus.READY


def test_estimate_three_samples_insufficient():
    e = est([5, 5, 5])
    assert e.status is EstimateStatus.INSUFFICIENT
    assert e.sample_count == 3
    # Values are still computed for display; only the status gates use.
    assert e.median == 5.0


def test_estimate_outlier_tolerant():
    e = est([10, 10, 10, 10, 200])
    assert e.median == 10.0
    assert e.half_width == 0.0
    assert e.status is EstimateStatus.READY


def test_estimate_no_samples():
    e = est([])
    assert e.median is None
    assert e.half_width is None
    assert e.sample_count == 0
    assert e.status is EstimateStatus.INSUFFICIENT


def test_readiness_boundary_at_half_width_20():
    ready = est([1, 1, 21, 41, 41])  # P75 - P25 = 40, half-width exactly 20
    assert ready.half_width == 20.0
    assert ready.status is EstimateStatus.READY

    imprecise = est([1, 1, 21, 41.04, 41.04])  # nudges half-width past 20
    assert imprecise.half_width > 20.0
    assert imprecise.status is EstimateStatus.IMPRECISE


def test_estimate_filters_by_pattern():
    records = records_for("A", [10, 20, 30]) + records_for("B", [100])
    e = estimate("A", records)
    assert e.sample_count == 3
    assert e.median == 20.0
    assert estimate("C", records).sample_count == 0


def test_estimate_matches_numpy_quantiles_on_random_samples():
    rng = random.Random(17)
    for _ in range(50):
        samples = [rng.uniform(0.1, 300) for _ in range(rng.randint(1, 40))]
        e = est(samples)
        p25, p50, p75 = np.percentile(samples, [25, 50, 75])
        assert e.median == pytest.approx(float(p50))
        assert e.half_width == pytest.approx(float(p75 - p25) / 2.0)
        n = len(samples)
        if n < 5:
            assert e.status is EstimateStatus.INSUFFICIENT
        elif e.half_width <= 20.0:
            assert e.status is EstimateStatus.READY
        else:
            assert e.status is EstimateStatus.IMPRECISE


@settings(max_examples=60)
@given(
    st.lists(
        st.floats(min_value=0.01, max_value=1000, allow_nan=False),
        min_size=1,
        max_size=30,
    ),
    st.randoms(use_true_random=False),
)
def test_estimate_is_permutation_invariant(samples, rng):
    shuffled = list(samples)
    rng.shuffle(shuffled)
    assert est(shuffled) == est(samples)


@settings(max_examples=60)
@given(
    st.lists(
        st.floats(min_value=0.5, max_value=500, allow_nan=False),
        min_size=1,
        max_size=20,
    ),
    st.floats(min_value=0.1, max_value=8, allow_nan=False),
)
def test_estimate_is_scale_equivariant(samples, c):
    base = est(samples)
    scaled = est([m * c for m in samples])
    assert scaled.median == pytest.approx(base.median * c, rel=1e-9)
    assert scaled.half_width == pytest.approx(base.half_width * c, rel=1e-9, abs=1e-9)


def test_one_outlier_moves_median_at_most_one_gap():
    rng = random.Random(23)
    for _ in range(40):
        n = rng.randint(9, 25)
        samples = sorted(rng.uniform(1, 240) for _ in range(n))
        gaps = [b - a for a, b in zip(samples, samples[1:])]
        max_gap = max(gaps) if gaps else 0.0
        outlier = rng.choice([1e-2, 1e5])
        before = est(samples).median
        after = est(samples + [outlier]).median
        assert abs(after - before) <= max_gap + 1e-9


# -- auto-derivation -----------------------------------------------------------


def make_diff(resolved_specs):
    prev_findings = [
        make_finding(pattern_id=p, file_path=f, line=30 * (i + 1), message=f"r{i}")
        for i, (p, f) in enumerate(resolved_specs)
    ]
    prev = make_run(prev_findings, run_id="prev")
    curr = make_run([], run_id="curr")
    return match_runs(prev, curr)


def test_derive_auto_single_resolution():
    diff = make_diff([("NP_NULL", "src/a.java")])
    records = derive_auto(diff, 12, "src/a.java", recorded_at=T0)
    assert len(records) == 1
    r = records[0]
    assert (r.pattern_id, r.minutes, r.source) == ("NP_NULL", 12.0, FixSource.AUTO)
    assert r.recorded_at == T0


def test_derive_auto_ambiguous_yields_nothing():
    diff = make_diff([("A", "src/a.java"), ("B", "src/a.java"), ("C", "src/a.java")])
    assert derive_auto(diff, 12, "src/a.java") == []


def test_derive_auto_no_resolution_yields_nothing():
    diff = make_diff([("A", "src/other.java")])
    assert derive_auto(diff, 12, "src/a.java") == []


def test_derive_auto_counts_only_named_file():
    diff = make_diff([("A", "src/a.java"), ("B", "src/b.java")])
    records = derive_auto(diff, 7.5, "src/a.java", recorded_at=T0)
    assert [r.pattern_id for r in records] == ["A"]
    # Path comparison happens in normalized form.
    assert derive_auto(diff, 7.5, "./src\\a.java", recorded_at=T0) == records


def test_derive_auto_requires_positive_elapsed():
    diff = make_diff([("A", "src/a.java")])
    with pytest.raises(NonPositiveDuration):
        derive_auto(diff, 0, "src/a.java")


# -- store ----------------------------------------------------------------------


def test_store_round_trips_through_doc():
    store = FixTimeStore()
    store.record_manual("A", 10, recorded_at=T0)
    store.extend(records_for("B", [1, 2, 3]))
    doc = store.to_doc()
    restored = FixTimeStore.from_doc(doc)
    assert restored.to_doc() == doc
    assert restored.estimate("B").sample_count == 3


def test_estimate_doc_shape():
    store = FixTimeStore()
    for m in (10, 20, 30, 40, 50):
        store.record_manual("A", m, recorded_at=T0)
    doc = estimate_to_doc(store.estimate("A"))
    assert doc == {
        "patternId": "A",
        "median": 30.0,
        "halfWidth": 10.0,
        "sampleCount": 5,
        "status": "READY",
    }
