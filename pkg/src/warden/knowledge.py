"""Shared remediation knowledge: comments and voted solution examples.

Comments attach to a bug pattern (optionally narrowed to one finding
instance). Solutions carry up/down vote counters; the best-voted example
lists first, and an example nobody ever endorsed can be purged once it is
old enough.
"""

from __future__ import annotations

import enum
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone

from .errors import EmptyText, UnknownSolution
from .model import format_instant, parse_instant


class Vote(str, enum.Enum):
    UP = "UP"
    DOWN = "DOWN"


@dataclass(frozen=True)
class Comment:
    comment_id: str
    pattern_id: str
    text: str
    author: str | None = None
    fingerprint: str | None = None  # set for instance-scoped comments
    created_at: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class Solution:
    solution_id: str
    pattern_id: str
    text: str
    code_snippet: str | None = None
    up_votes: int = 0
    down_votes: int = 0
    created_at: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)

    @property
    def net_score(self) -> int:
        return self.up_votes - self.down_votes


@dataclass(frozen=True)
class PurgePolicy:
    """Solutions with only negative votes may go after ``min_age_days``."""

    min_age_days: int = 30

    def __post_init__(self) -> None:
        if self.min_age_days < 1:
            raise ValueError(f"min_age_days must be >= 1, got {self.min_age_days}")


def _new_id() -> str:
    return uuid.uuid4().hex[:12]


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class KnowledgeStore:
    """In-memory store; reads are concurrent, mutations serialized.

    Ids and timestamps are injectable so journal replay reconstructs the
    exact same state.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._comments: dict[str, Comment] = {}
        self._solutions: dict[str, Solution] = {}

    @staticmethod
    def validate_text(text: str) -> None:
        if not text.strip():
            raise EmptyText("text must be non-empty")

    # --- comments ---------------------------------------------------------

    def add_comment(
        self,
        pattern_id: str,
        text: str,
        author: str | None = None,
        fingerprint: str | None = None,
        *,
        comment_id: str | None = None,
        created_at: datetime | None = None,
    ) -> Comment:
        self.validate_text(text)
        comment = Comment(
            comment_id=comment_id or _new_id(),
            pattern_id=pattern_id,
            text=text,
            author=author,
            fingerprint=fingerprint,
            created_at=created_at or _utcnow(),
        )
        with self._lock:
            self._comments[comment.comment_id] = comment
        return comment

    def get_comment(self, comment_id: str) -> Comment:
        with self._lock:
            return self._comments[comment_id]

    def list_comments(self, pattern_id: str) -> list[Comment]:
        """All comments for a pattern, oldest first."""
        with self._lock:
            comments = [c for c in self._comments.values() if c.pattern_id == pattern_id]
        comments.sort(key=lambda c: (c.created_at, c.comment_id))
        return comments

    # --- solutions ----------------------------------------------------------

    def add_solution(
        self,
        pattern_id: str,
        text: str,
        code_snippet: str | None = None,
        *,
        solution_id: str | None = None,
        created_at: datetime | None = None,
    ) -> Solution:
        self.validate_text(text)
        solution = Solution(
            solution_id=solution_id or _new_id(),
            pattern_id=pattern_id,
            text=text,
            code_snippet=code_snippet,
            created_at=created_at or _utcnow(),
        )
        with self._lock:
            self._solutions[solution.solution_id] = solution
        return solution

    def get_solution(self, solution_id: str) -> Solution:
        with self._lock:
            try:
                return self._solutions[solution_id]
            except KeyError:
                raise UnknownSolution(f"no solution {solution_id!r}") from None

    def vote(self, solution_id: str, direction: Vote) -> Solution:
        """Increment one counter by exactly 1; atomic under the store lock."""
        with self._lock:
            solution = self.get_solution(solution_id)
            if direction is Vote.UP:
                solution = replace(solution, up_votes=solution.up_votes + 1)
            else:
                solution = replace(solution, down_votes=solution.down_votes + 1)
            self._solutions[solution_id] = solution
            return solution

    def list_solutions(self, pattern_id: str) -> list[Solution]:
        """Best first: net score descending, ties oldest first, then id."""
        with self._lock:
            solutions = [
                s for s in self._solutions.values() if s.pattern_id == pattern_id
            ]
        solutions.sort(key=lambda s: (-s.net_score, s.created_at, s.solution_id))
        return solutions

    def purgeable_solutions(
        self, now: datetime, policy: PurgePolicy | None = None
    ) -> list[str]:
        """Ids of solutions with zero up votes, at least one down vote, and
        age over the policy minimum. Read-only; sorted for determinism."""
        policy = policy or PurgePolicy()
        horizon = timedelta(days=policy.min_age_days)
        with self._lock:
            return sorted(
                solution_id
                for solution_id, s in self._solutions.items()
                if s.up_votes == 0
                and s.down_votes >= 1
                and now - s.created_at > horizon
            )

    def remove_solutions(self, solution_ids: list[str]) -> None:
        with self._lock:
            for solution_id in solution_ids:
                self._solutions.pop(solution_id, None)

    def purge_solutions(
        self, now: datetime, policy: PurgePolicy | None = None
    ) -> list[str]:
        """Apply the purge policy in place. Returns removed ids; idempotent."""
        with self._lock:
            removed = self.purgeable_solutions(now, policy)
            self.remove_solutions(removed)
        return removed

    # --- persistence ----------------------------------------------------------

    def to_doc(self) -> dict:
        with self._lock:
            return {
                "comments": [
                    comment_to_doc(c)
                    for c in sorted(self._comments.values(), key=lambda c: c.comment_id)
                ],
                "solutions": [
                    solution_to_doc(s)
                    for s in sorted(
                        self._solutions.values(), key=lambda s: s.solution_id
                    )
                ],
            }

    @classmethod
    def from_doc(cls, doc: dict) -> "KnowledgeStore":
        store = cls()
        for c in doc.get("comments", []):
            comment = comment_from_doc(c)
            store._comments[comment.comment_id] = comment
        for s in doc.get("solutions", []):
            solution = solution_from_doc(s)
            store._solutions[solution.solution_id] = solution
        return store


def comment_to_doc(c: Comment) -> dict:
    return {
        "commentId": c.comment_id,
        "patternId": c.pattern_id,
        "text": c.text,
        "author": c.author,
        "fingerprint": c.fingerprint,
        "createdAt": format_instant(c.created_at),
    }


def comment_from_doc(doc: dict) -> Comment:
    return Comment(
        comment_id=doc["commentId"],
        pattern_id=doc["patternId"],
        text=doc["text"],
        author=doc.get("author"),
        fingerprint=doc.get("fingerprint"),
        created_at=parse_instant(doc["createdAt"]),
    )


def solution_to_doc(s: Solution) -> dict:
    return {
        "solutionId": s.solution_id,
        "patternId": s.pattern_id,
        "text": s.text,
        "codeSnippet": s.code_snippet,
        "upVotes": s.up_votes,
        "downVotes": s.down_votes,
        "netScore": s.net_score,
        "createdAt": format_instant(s.created_at),
    }


def solution_from_doc(doc: dict) -> Solution:
    return Solution(
        solution_id=doc["solutionId"],
        pattern_id=doc["patternId"],
        text=doc["text"],
        code_snippet=doc.get("codeSnippet"),
        up_votes=doc["upVotes"],
        down_votes=doc["downVotes"],
        created_at=parse_instant(doc["createdAt"]),
    )
