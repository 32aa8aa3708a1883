"""Durable append-only journal with periodic snapshots.

The journal is newline-delimited JSON, one event per line, each carrying a
monotonically increasing ``seq``. A snapshot file holds the full store
state as of some seq; loading replays only the tail. Replaying the journal
from the last snapshot reconstructs the exact store state.

A malformed or truncated line refuses the load with the last valid
sequence number, so an operator sees exactly where recovery stands instead
of silently running on partial state.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from ..errors import CorruptJournal
from ..model import format_instant

JOURNAL_FILE = "journal.ndjson"
SNAPSHOT_FILE = "snapshot.json"


@dataclass(frozen=True)
class Event:
    seq: int
    ts: str
    type: str
    data: dict


class Journal:
    """Single-writer event log under one directory."""

    def __init__(self, directory: Path | str, *, fsync: bool = False) -> None:
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._path = self._dir / JOURNAL_FILE
        self._snapshot_path = self._dir / SNAPSHOT_FILE
        self._lock = threading.Lock()
        self._fsync = fsync
        self._last_seq = 0

    @property
    def path(self) -> Path:
        return self._path

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def load(self) -> tuple[dict | None, list[Event]]:
        """Snapshot state (if any) plus the events to replay after it.

        Raises CorruptJournal on a malformed line, a torn tail, or a
        non-monotonic sequence, reporting the last valid seq.
        """
        snapshot = self._load_snapshot()
        snapshot_seq = snapshot["seq"] if snapshot is not None else 0

        events: list[Event] = []
        last_valid = 0
        if self._path.exists():
            raw = self._path.read_bytes()
            lines = raw.split(b"\n")
            torn = lines.pop() if raw and not raw.endswith(b"\n") else None
            for line in lines:
                if not line:
                    continue
                event = self._decode_line(line, last_valid)
                if event.seq != last_valid + 1:
                    raise CorruptJournal(
                        f"sequence jumped from {last_valid} to {event.seq}",
                        last_valid_seq=last_valid,
                    )
                last_valid = event.seq
                events.append(event)
            if torn is not None:
                raise CorruptJournal(
                    f"journal ends mid-event after seq {last_valid}",
                    last_valid_seq=last_valid,
                )

        self._last_seq = last_valid
        if snapshot_seq > last_valid:
            raise CorruptJournal(
                f"snapshot at seq {snapshot_seq} is ahead of journal end {last_valid}",
                last_valid_seq=last_valid,
            )
        tail = [e for e in events if e.seq > snapshot_seq]
        state = snapshot["state"] if snapshot is not None else None
        return state, tail

    def _decode_line(self, line: bytes, last_valid: int) -> Event:
        try:
            doc = json.loads(line.decode("utf-8"))
            return Event(seq=doc["seq"], ts=doc["ts"], type=doc["type"], data=doc["data"])
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorruptJournal(
                f"malformed event after seq {last_valid}: {exc}",
                last_valid_seq=last_valid,
            ) from exc

    def _load_snapshot(self) -> dict | None:
        if not self._snapshot_path.exists():
            return None
        try:
            doc = json.loads(self._snapshot_path.read_text("utf-8"))
            if not isinstance(doc, dict) or "seq" not in doc or "state" not in doc:
                raise ValueError("snapshot missing seq/state")
            return doc
        except (ValueError, json.JSONDecodeError) as exc:
            raise CorruptJournal(
                f"unreadable snapshot: {exc}", last_valid_seq=0
            ) from exc

    def append(self, event_type: str, data: dict, *, now: datetime | None = None) -> int:
        """Write one event; the line is on disk before this returns."""
        with self._lock:
            seq = self._last_seq + 1
            doc = {
                "seq": seq,
                "ts": format_instant(now or datetime.now(timezone.utc)),
                "type": event_type,
                "data": data,
            }
            line = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                if self._fsync:
                    os.fsync(fh.fileno())
            self._last_seq = seq
            return seq

    def write_snapshot(self, state: dict) -> None:
        """Atomically persist the full state as of the last appended seq."""
        with self._lock:
            doc = {"seq": self._last_seq, "state": state}
            tmp = self._snapshot_path.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(doc, sort_keys=True, separators=(",", ":")), "utf-8"
            )
            os.replace(tmp, self._snapshot_path)


def replay(
    journal: Journal,
    restore: Callable[[dict], None],
    apply: Callable[[Event], None],
) -> int:
    """Load a journal, restoring snapshot state then applying the tail.

    Returns the last applied seq.
    """
    state, events = journal.load()
    if state is not None:
        restore(state)
    for event in events:
        apply(event)
    return journal.last_seq
