"""On-disk project state for offline CLI use.

Everything lives under ``.warden/`` in the project root: runs as numbered
canonical JSON documents, triage marks with a version counter, and local
knowledge and fix-time stores. Writes go through a temp file and rename,
and concurrent invocations against the same directory serialize on a
lock file.
"""

from __future__ import annotations

import fcntl
import json
import os
import re
from datetime import datetime
from pathlib import Path

from .errors import UnknownFingerprint
from .fixtime import FixTimeStore, derive_auto
from .identity import RunDiff, carry_forward, match_runs
from .ingest import (
    canonical_json_bytes,
    run_from_doc,
    run_to_doc,
    triage_state_from_doc,
    triage_state_to_doc,
)
from .knowledge import KnowledgeStore
from .model import AnalysisRun, TriageState

DOT_DIR = ".warden"

_RUN_FILE = re.compile(r"^(\d{4})-.*\.json$")


class ProjectLock:
    """Advisory whole-project lock; held for the life of one CLI command."""

    def __init__(self, path: Path) -> None:
        self._path = path
        self._fd: int | None = None

    def __enter__(self) -> "ProjectLock":
        self._fd = os.open(self._path, os.O_CREAT | os.O_RDWR, 0o644)
        fcntl.flock(self._fd, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc_info) -> None:
        if self._fd is not None:
            fcntl.flock(self._fd, fcntl.LOCK_UN)
            os.close(self._fd)
            self._fd = None


class Project:
    """One project root's triage state, runs, and local stores."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.dot = self.root / DOT_DIR
        self.runs_dir = self.dot / "runs"
        self.dot.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(exist_ok=True)

    def lock(self) -> ProjectLock:
        return ProjectLock(self.dot / "lock")

    # -- runs -------------------------------------------------------------

    def _run_paths(self) -> list[Path]:
        entries = []
        for path in self.runs_dir.iterdir():
            m = _RUN_FILE.match(path.name)
            if m:
                entries.append((int(m.group(1)), path))
        entries.sort()
        return [path for _, path in entries]

    def runs(self) -> list[AnalysisRun]:
        return [
            run_from_doc(json.loads(path.read_bytes())) for path in self._run_paths()
        ]

    def latest_run(self) -> AnalysisRun | None:
        paths = self._run_paths()
        if not paths:
            return None
        return run_from_doc(json.loads(paths[-1].read_bytes()))

    def add_run(self, run: AnalysisRun) -> RunDiff | None:
        """Persist a run; returns the diff against the previous run, if any.

        Triage marks follow moved findings, marks on findings absent from
        the new run go dormant, and stale dormant marks are dropped.
        """
        previous = self.latest_run()
        index = len(self._run_paths()) + 1
        path = self.runs_dir / f"{index:04d}-{run.run_id}.json"
        _atomic_write(path, canonical_json_bytes(run_to_doc(run)))

        if previous is None:
            return None
        diff = match_runs(previous, run)
        triage, version = self.load_triage()
        self.save_triage(carry_forward(triage, diff, now=run.timestamp), version + 1)
        return diff

    def derive_fix_records(
        self, diff: RunDiff, previous: AnalysisRun, current: AnalysisRun
    ) -> int:
        """Auto fix-time records from the inter-run gap, one per file whose
        single resolved finding makes the attribution unambiguous."""
        elapsed = (current.timestamp - previous.timestamp).total_seconds() / 60.0
        if elapsed <= 0:
            return 0
        files = sorted({f.location.file_path for f in diff.resolved})
        store = self.load_fixtimes()
        added = 0
        for file_path in files:
            records = derive_auto(
                diff, elapsed, file_path, recorded_at=current.timestamp
            )
            store.extend(records)
            added += len(records)
        if added:
            self.save_fixtimes(store)
        return added

    # -- triage -----------------------------------------------------------

    @property
    def _triage_path(self) -> Path:
        return self.dot / "triage.json"

    def load_triage(self) -> tuple[TriageState, int]:
        if not self._triage_path.exists():
            return TriageState(), 0
        doc = json.loads(self._triage_path.read_bytes())
        return triage_state_from_doc(doc), int(doc.get("version", 0))

    def save_triage(self, state: TriageState, version: int) -> None:
        doc = triage_state_to_doc(state)
        doc["version"] = version
        _atomic_write(self._triage_path, canonical_json_bytes(doc))

    def require_known_fingerprint(self, fingerprint: str) -> None:
        run = self.latest_run()
        known = {f.fingerprint for f in run.findings} if run else set()
        if fingerprint not in known:
            raise UnknownFingerprint(fingerprint)

    def mark_fp(self, fingerprint: str, now: datetime) -> None:
        self.require_known_fingerprint(fingerprint)
        state, version = self.load_triage()
        self.save_triage(state.with_fp_mark(fingerprint, now), version + 1)

    def unmark_fp(self, fingerprint: str) -> None:
        state, version = self.load_triage()
        self.save_triage(state.without_fp_mark(fingerprint), version + 1)

    def set_override(self, fingerprint: str, rank: int) -> None:
        self.require_known_fingerprint(fingerprint)
        state, version = self.load_triage()
        self.save_triage(state.with_override(fingerprint, rank), version + 1)

    def clear_override(self, fingerprint: str) -> None:
        state, version = self.load_triage()
        self.save_triage(state.without_override(fingerprint), version + 1)

    # -- local stores -------------------------------------------------------

    @property
    def _knowledge_path(self) -> Path:
        return self.dot / "knowledge.json"

    def load_knowledge(self) -> KnowledgeStore:
        if not self._knowledge_path.exists():
            return KnowledgeStore()
        return KnowledgeStore.from_doc(json.loads(self._knowledge_path.read_bytes()))

    def save_knowledge(self, store: KnowledgeStore) -> None:
        _atomic_write(self._knowledge_path, canonical_json_bytes(store.to_doc()))

    @property
    def _fixtimes_path(self) -> Path:
        return self.dot / "fixtimes.json"

    def load_fixtimes(self) -> FixTimeStore:
        if not self._fixtimes_path.exists():
            return FixTimeStore()
        return FixTimeStore.from_doc(json.loads(self._fixtimes_path.read_bytes()))

    def save_fixtimes(self, store: FixTimeStore) -> None:
        _atomic_write(self._fixtimes_path, canonical_json_bytes(store.to_doc()))


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
