"""Journal-backed state for the sync server.

Every mutation is committed as a journal event before it touches in-memory
state, and the in-memory transition is driven by the same event payload
that replay sees. Restarting the server and replaying the journal (plus
the latest snapshot, when one exists) therefore reproduces the exact
state, including generated identifiers and timestamps, which travel
inside the event rather than being re-generated on replay.
"""

from __future__ import annotations

import threading
import uuid
from datetime import datetime, timezone
from typing import Any

from ..errors import UnknownProject, VersionConflict
from ..fixtime import FixRecord, FixSource, FixTimeStore
from ..identity import carry_forward, match_runs
from ..ingest import (
    run_from_doc,
    run_to_doc,
    triage_state_from_doc,
    triage_state_to_doc,
)
from ..knowledge import Comment, KnowledgeStore, PurgePolicy, Solution, Vote
from ..model import AnalysisRun, TriageState, format_instant, parse_instant
from .journal import Event, Journal

DEFAULT_SNAPSHOT_INTERVAL = 100


class ProjectState:
    """Per-project mutable state: ordered runs plus triage marks."""

    def __init__(self) -> None:
        self.runs: list[AnalysisRun] = []
        self.triage: TriageState = TriageState()
        self.version: int = 0

    def latest_run(self) -> AnalysisRun | None:
        return self.runs[-1] if self.runs else None

    def to_doc(self) -> dict:
        return {
            "runs": [run_to_doc(r) for r in self.runs],
            "triage": triage_state_to_doc(self.triage),
            "version": self.version,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ProjectState":
        state = cls()
        state.runs = [run_from_doc(d) for d in doc.get("runs", [])]
        state.triage = triage_state_from_doc(doc.get("triage", {}))
        state.version = int(doc.get("version", 0))
        return state


class SyncStore:
    """Shared knowledge base plus per-project triage, event-sourced.

    Commands acquire the single writer lock, append the event, then apply
    it through the same dispatch table used during replay. Readers take
    the lock too; handler work is short enough that one lock is simpler
    and safer than reader/writer splitting.
    """

    def __init__(
        self,
        journal: Journal,
        snapshot_interval: int = DEFAULT_SNAPSHOT_INTERVAL,
    ) -> None:
        self._journal = journal
        self._snapshot_interval = snapshot_interval
        self._lock = threading.RLock()
        self.knowledge = KnowledgeStore()
        self.fixtimes = FixTimeStore()
        self.projects: dict[str, ProjectState] = {}
        self._events_since_snapshot = 0

    @classmethod
    def open(
        cls,
        directory: str,
        snapshot_interval: int = DEFAULT_SNAPSHOT_INTERVAL,
        fsync: bool = False,
    ) -> "SyncStore":
        journal = Journal(directory, fsync=fsync)
        store = cls(journal, snapshot_interval=snapshot_interval)
        snapshot, tail = journal.load()
        if snapshot is not None:
            store._restore(snapshot)
        for event in tail:
            store._apply(event.type, event.data)
        return store

    # -- commands -------------------------------------------------------

    def add_run(self, project_id: str, run: AnalysisRun) -> None:
        with self._lock:
            self._commit("run_added", {"projectId": project_id, "run": run_to_doc(run)})

    def mark_false_positive(
        self,
        project_id: str,
        fingerprint: str,
        expected_version: int | None = None,
        now: datetime | None = None,
    ) -> int:
        at = format_instant(now if now is not None else _utcnow())
        with self._lock:
            self._check_version(project_id, expected_version)
            self._commit(
                "fp_marked",
                {"projectId": project_id, "fingerprint": fingerprint, "markedAt": at},
            )
            return self._project(project_id).version

    def unmark_false_positive(
        self,
        project_id: str,
        fingerprint: str,
        expected_version: int | None = None,
    ) -> int:
        with self._lock:
            self._check_version(project_id, expected_version)
            self._commit(
                "fp_unmarked", {"projectId": project_id, "fingerprint": fingerprint}
            )
            return self._project(project_id).version

    def set_override(
        self,
        project_id: str,
        fingerprint: str,
        rank: int,
        expected_version: int | None = None,
    ) -> int:
        with self._lock:
            self._check_version(project_id, expected_version)
            self._commit(
                "override_set",
                {"projectId": project_id, "fingerprint": fingerprint, "rank": rank},
            )
            return self._project(project_id).version

    def clear_override(
        self,
        project_id: str,
        fingerprint: str,
        expected_version: int | None = None,
    ) -> int:
        with self._lock:
            self._check_version(project_id, expected_version)
            self._commit(
                "override_cleared",
                {"projectId": project_id, "fingerprint": fingerprint},
            )
            return self._project(project_id).version

    def replace_triage(
        self,
        project_id: str,
        state: TriageState,
        expected_version: int,
    ) -> int:
        with self._lock:
            self._check_version(project_id, expected_version)
            self._commit(
                "triage_replaced",
                {"projectId": project_id, "triage": triage_state_to_doc(state)},
            )
            return self._project(project_id).version

    def add_comment(
        self,
        pattern_id: str,
        text: str,
        author: str | None = None,
        fingerprint: str | None = None,
        now: datetime | None = None,
    ) -> Comment:
        comment_id = uuid.uuid4().hex
        at = format_instant(now if now is not None else _utcnow())
        with self._lock:
            # Validate before journaling so bad input never hits the log.
            KnowledgeStore.validate_text(text)
            self._commit(
                "comment_added",
                {
                    "commentId": comment_id,
                    "patternId": pattern_id,
                    "text": text,
                    "author": author,
                    "fingerprint": fingerprint,
                    "createdAt": at,
                },
            )
            return self.knowledge.get_comment(comment_id)

    def add_solution(
        self,
        pattern_id: str,
        text: str,
        code_snippet: str | None = None,
        now: datetime | None = None,
    ) -> Solution:
        solution_id = uuid.uuid4().hex
        at = format_instant(now if now is not None else _utcnow())
        with self._lock:
            KnowledgeStore.validate_text(text)
            self._commit(
                "solution_added",
                {
                    "solutionId": solution_id,
                    "patternId": pattern_id,
                    "text": text,
                    "codeSnippet": code_snippet,
                    "createdAt": at,
                },
            )
            return self.knowledge.get_solution(solution_id)

    def vote(self, solution_id: str, direction: Vote) -> Solution:
        with self._lock:
            self.knowledge.get_solution(solution_id)
            self._commit(
                "vote_cast",
                {"solutionId": solution_id, "direction": direction.value},
            )
            return self.knowledge.get_solution(solution_id)

    def record_fix(
        self,
        pattern_id: str,
        minutes: float,
        source: FixSource = FixSource.MANUAL,
        now: datetime | None = None,
    ) -> FixRecord:
        at = format_instant(now if now is not None else _utcnow())
        record = FixRecord(
            pattern_id=pattern_id,
            minutes=float(minutes),
            source=source,
            recorded_at=parse_instant(at),
        )
        with self._lock:
            self._commit(
                "fix_recorded",
                {
                    "patternId": record.pattern_id,
                    "minutes": record.minutes,
                    "source": record.source.value,
                    "recordedAt": at,
                },
            )
            return record

    def purge_solutions(
        self, policy: PurgePolicy | None = None, now: datetime | None = None
    ) -> list[str]:
        """Journal the ids chosen by the policy, so replay removes exactly them."""
        at = now if now is not None else _utcnow()
        with self._lock:
            removed = self.knowledge.purgeable_solutions(at, policy)
            if removed:
                self._commit("purge_executed", {"removed": removed})
            return removed

    # -- reads ----------------------------------------------------------

    def project(self, project_id: str) -> ProjectState:
        with self._lock:
            return self._project(project_id)

    def project_ids(self) -> list[str]:
        with self._lock:
            return sorted(self.projects)

    def has_project(self, project_id: str) -> bool:
        with self._lock:
            return project_id in self.projects

    def _project(self, project_id: str) -> ProjectState:
        state = self.projects.get(project_id)
        if state is None:
            raise UnknownProject(f"unknown project {project_id!r}")
        return state

    def _check_version(self, project_id: str, expected: int | None) -> None:
        current = self._project(project_id).version
        if expected is not None and expected != current:
            raise VersionConflict(
                f"triage state is at version {current}, caller expected {expected}"
            )

    # -- event plumbing ---------------------------------------------------

    def _commit(self, event_type: str, data: dict) -> None:
        self._journal.append(event_type, data)
        self._apply(event_type, data)
        self._events_since_snapshot += 1
        if self._events_since_snapshot >= self._snapshot_interval:
            self.write_snapshot()

    def write_snapshot(self) -> None:
        with self._lock:
            self._journal.write_snapshot(self.state_doc())
            self._events_since_snapshot = 0

    def _apply(self, event_type: str, data: dict) -> None:
        handler = _HANDLERS.get(event_type)
        if handler is None:
            raise ValueError(f"unknown journal event type {event_type!r}")
        handler(self, data)

    def _apply_run_added(self, data: dict) -> None:
        project_id = data["projectId"]
        run = run_from_doc(data["run"])
        state = self.projects.setdefault(project_id, ProjectState())
        previous = state.latest_run()
        state.runs.append(run)
        if previous is not None:
            diff = match_runs(previous, run)
            state.triage = carry_forward(state.triage, diff, now=run.timestamp)
            state.version += 1

    def _apply_fp_marked(self, data: dict) -> None:
        state = self.projects.setdefault(data["projectId"], ProjectState())
        state.triage = state.triage.with_fp_mark(
            data["fingerprint"], parse_instant(data["markedAt"])
        )
        state.version += 1

    def _apply_fp_unmarked(self, data: dict) -> None:
        state = self.projects.setdefault(data["projectId"], ProjectState())
        state.triage = state.triage.without_fp_mark(data["fingerprint"])
        state.version += 1

    def _apply_override_set(self, data: dict) -> None:
        state = self.projects.setdefault(data["projectId"], ProjectState())
        state.triage = state.triage.with_override(data["fingerprint"], data["rank"])
        state.version += 1

    def _apply_override_cleared(self, data: dict) -> None:
        state = self.projects.setdefault(data["projectId"], ProjectState())
        state.triage = state.triage.without_override(data["fingerprint"])
        state.version += 1

    def _apply_triage_replaced(self, data: dict) -> None:
        state = self.projects.setdefault(data["projectId"], ProjectState())
        state.triage = triage_state_from_doc(data["triage"])
        state.version += 1

    def _apply_comment_added(self, data: dict) -> None:
        self.knowledge.add_comment(
            pattern_id=data["patternId"],
            text=data["text"],
            author=data.get("author"),
            fingerprint=data.get("fingerprint"),
            comment_id=data["commentId"],
            created_at=parse_instant(data["createdAt"]),
        )

    def _apply_solution_added(self, data: dict) -> None:
        self.knowledge.add_solution(
            pattern_id=data["patternId"],
            text=data["text"],
            code_snippet=data.get("codeSnippet"),
            solution_id=data["solutionId"],
            created_at=parse_instant(data["createdAt"]),
        )

    def _apply_vote_cast(self, data: dict) -> None:
        self.knowledge.vote(data["solutionId"], Vote(data["direction"]))

    def _apply_fix_recorded(self, data: dict) -> None:
        self.fixtimes.append(
            FixRecord(
                pattern_id=data["patternId"],
                minutes=data["minutes"],
                source=FixSource(data["source"]),
                recorded_at=parse_instant(data["recordedAt"]),
            )
        )

    def _apply_purge_executed(self, data: dict) -> None:
        self.knowledge.remove_solutions(data["removed"])

    # -- snapshots --------------------------------------------------------

    def state_doc(self) -> dict:
        return {
            "knowledge": self.knowledge.to_doc(),
            "fixtimes": self.fixtimes.to_doc(),
            "projects": {
                pid: state.to_doc() for pid, state in sorted(self.projects.items())
            },
        }

    def _restore(self, doc: Any) -> None:
        self.knowledge = KnowledgeStore.from_doc(doc.get("knowledge", {}))
        self.fixtimes = FixTimeStore.from_doc(doc.get("fixtimes", {}))
        self.projects = {
            pid: ProjectState.from_doc(pdoc)
            for pid, pdoc in doc.get("projects", {}).items()
        }


def _utcnow() -> datetime:
    # Full microsecond resolution: listing order ties break on generated
    # ids, so truncating here would scramble same-second insertions.
    return datetime.now(timezone.utc)


_HANDLERS = {
    "run_added": SyncStore._apply_run_added,
    "fp_marked": SyncStore._apply_fp_marked,
    "fp_unmarked": SyncStore._apply_fp_unmarked,
    "override_set": SyncStore._apply_override_set,
    "override_cleared": SyncStore._apply_override_cleared,
    "triage_replaced": SyncStore._apply_triage_replaced,
    "comment_added": SyncStore._apply_comment_added,
    "solution_added": SyncStore._apply_solution_added,
    "vote_cast": SyncStore._apply_vote_cast,
    "fix_recorded": SyncStore._apply_fix_recorded,
    "purge_executed": SyncStore._apply_purge_executed,
}

__all__ = ["SyncStore", "ProjectState", "Event"]
