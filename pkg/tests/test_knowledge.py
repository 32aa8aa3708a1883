from __future__ import annotations

import random
import threading
from datetime import datetime, timedelta, timezone

import pytest

from warden.errors import EmptyText, UnknownSolution
from warden.knowledge import (
    KnowledgeStore,
    PurgePolicy,
    Vote,
    comment_from_doc,
    comment_to_doc,
    solution_from_doc,
    solution_to_doc,
)

T0 = datetime(2024, 3, 1, tzinfo=timezone.utc)


def test_comments_attach_to_pattern_and_list_oldest_first():
    store = KnowledgeStore()
    c2 = store.add_comment("NP_NULL", "newer", created_at=T0 + timedelta(hours=1))
    c1 = store.add_comment("NP_NULL", "older", author="rivera", created_at=T0)
    store.add_comment("OTHER", "not listed", created_at=T0)
    listed = store.list_comments("NP_NULL")
    assert [c.text for c in listed] == ["older", "newer"]
    assert listed[0].author == "rivera"
    assert listed[1].author is None
    assert store.get_comment(c1.comment_id) == c1
    assert store.get_comment(c2.comment_id).text == "newer"


def test_comment_may_target_one_finding():
    store = KnowledgeStore()
    c = store.add_comment("NP_NULL", "only here", fingerprint="abcd1234abcd1234")
    assert c.fingerprint == "abcd1234abcd1234"
    assert store.add_comment("NP_NULL", "pattern-wide").fingerprint is None


def test_empty_text_is_rejected_everywhere():
    store = KnowledgeStore()
    for bad in ("", "   ", "\n\t"):
        with pytest.raises(EmptyText):
            store.add_comment("NP_NULL", bad)
        with pytest.raises(EmptyText):
            store.add_solution("NP_NULL", bad)
    assert store.list_comments("NP_NULL") == []
    assert store.list_solutions("NP_NULL") == []


def test_text_is_stored_verbatim():
    store = KnowledgeStore()
    text = "  leading and trailing kept  \n"
    assert store.add_comment("P", text).text == text


def test_votes_increment_by_exactly_one():
    store = KnowledgeStore()
    s = store.add_solution("SQL_INJ", "use PreparedStatement", code_snippet="stmt.setString(1, id);")
    assert (s.up_votes, s.down_votes, s.net_score) == (0, 0, 0)
    s = store.vote(s.solution_id, Vote.UP)
    s = store.vote(s.solution_id, Vote.UP)
    s = store.vote(s.solution_id, Vote.DOWN)
    assert (s.up_votes, s.down_votes, s.net_score) == (2, 1, 1)
    assert store.get_solution(s.solution_id) == s


def test_vote_on_unknown_solution_fails():
    store = KnowledgeStore()
    with pytest.raises(UnknownSolution):
        store.vote("missing", Vote.UP)
    with pytest.raises(UnknownSolution):
        store.get_solution("missing")


def test_solutions_list_best_first_with_stable_ties():
    store = KnowledgeStore()
    a = store.add_solution("P", "a", created_at=T0)
    b = store.add_solution("P", "b", created_at=T0 + timedelta(minutes=1))
    c = store.add_solution("P", "c", created_at=T0 + timedelta(minutes=2))
    for _ in range(3):
        store.vote(b.solution_id, Vote.UP)
    store.vote(c.solution_id, Vote.UP)
    store.vote(a.solution_id, Vote.DOWN)
    listed = store.list_solutions("P")
    assert [s.text for s in listed] == ["b", "c", "a"]

    # Net score ties break on age, oldest first.
    d = store.add_solution("P", "d", created_at=T0 - timedelta(days=1))
    store.vote(d.solution_id, Vote.UP)
    assert [s.text for s in store.list_solutions("P")] == ["b", "d", "c", "a"]


def test_concurrent_votes_all_land():
    store = KnowledgeStore()
    s = store.add_solution("P", "contended")
    threads = [
        threading.Thread(
            target=lambda: [store.vote(s.solution_id, Vote.UP) for _ in range(25)]
        )
        for _ in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert store.get_solution(s.solution_id).up_votes == 200


# -- purge -------------------------------------------------------------------


def test_purge_policy_validates():
    with pytest.raises(ValueError):
        PurgePolicy(min_age_days=0)
    assert PurgePolicy().min_age_days == 30


def test_purge_removes_only_unendorsed_old_solutions():
    store = KnowledgeStore()
    now = T0 + timedelta(days=40)

    downvoted_old = store.add_solution("P", "bad old", created_at=T0)
    store.vote(downvoted_old.solution_id, Vote.DOWN)

    downvoted_fresh = store.add_solution("P", "bad fresh", created_at=now - timedelta(days=5))
    store.vote(downvoted_fresh.solution_id, Vote.DOWN)

    mixed_old = store.add_solution("P", "contested", created_at=T0)
    store.vote(mixed_old.solution_id, Vote.DOWN)
    store.vote(mixed_old.solution_id, Vote.UP)

    silent_old = store.add_solution("P", "no votes", created_at=T0)

    assert store.purgeable_solutions(now) == [downvoted_old.solution_id]
    removed = store.purge_solutions(now)
    assert removed == [downvoted_old.solution_id]
    with pytest.raises(UnknownSolution):
        store.get_solution(downvoted_old.solution_id)
    for keep in (downvoted_fresh, mixed_old, silent_old):
        store.get_solution(keep.solution_id)

    # Idempotent: a second sweep finds nothing new.
    assert store.purge_solutions(now) == []


def test_purge_age_boundary_is_strict():
    store = KnowledgeStore()
    s = store.add_solution("P", "boundary", created_at=T0)
    store.vote(s.solution_id, Vote.DOWN)
    exactly = T0 + timedelta(days=30)
    assert store.purgeable_solutions(exactly) == []
    just_past = exactly + timedelta(seconds=1)
    assert store.purgeable_solutions(just_past) == [s.solution_id]


def test_purge_respects_custom_policy():
    store = KnowledgeStore()
    s = store.add_solution("P", "short fuse", created_at=T0)
    store.vote(s.solution_id, Vote.DOWN)
    now = T0 + timedelta(days=8)
    assert store.purgeable_solutions(now, PurgePolicy(min_age_days=7)) == [s.solution_id]
    assert store.purgeable_solutions(now, PurgePolicy(min_age_days=9)) == []


# -- persistence ---------------------------------------------------------------


def test_store_round_trips_through_doc():
    store = KnowledgeStore()
    store.add_comment("P", "note", author="kim", fingerprint="ff00ff00ff00ff00", created_at=T0)
    s = store.add_solution("P", "fix", code_snippet="x = y;", created_at=T0)
    store.vote(s.solution_id, Vote.UP)
    store.vote(s.solution_id, Vote.DOWN)

    doc = store.to_doc()
    restored = KnowledgeStore.from_doc(doc)
    assert restored.to_doc() == doc
    assert restored.get_solution(s.solution_id).net_score == 0
    assert restored.list_comments("P")[0].author == "kim"


def test_doc_converters_round_trip_fields():
    store = KnowledgeStore()
    c = store.add_comment("P", "c", created_at=T0)
    assert comment_from_doc(comment_to_doc(c)) == c
    s = store.add_solution("P", "s", created_at=T0)
    assert solution_from_doc(solution_to_doc(s)) == s
    assert solution_to_doc(s)["netScore"] == 0


def test_injected_ids_and_timestamps_reconstruct_exactly():
    # Replay feeds recorded ids and instants back in; nothing may be
    # regenerated.
    store = KnowledgeStore()
    c = store.add_comment("P", "x", comment_id="c-1", created_at=T0)
    s = store.add_solution("P", "y", solution_id="s-1", created_at=T0)
    assert c.comment_id == "c-1" and c.created_at == T0
    assert s.solution_id == "s-1" and s.created_at == T0


def test_generated_ids_are_unique_at_scale():
    store = KnowledgeStore()
    rng = random.Random(1)
    ids = {
        store.add_solution(f"P{rng.randrange(5)}", "t").solution_id
        for _ in range(2000)
    }
    assert len(ids) == 2000
