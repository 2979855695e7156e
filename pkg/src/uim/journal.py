"""Append-only journal of operator submissions, one JSON object per line.

All sessions funnel through a single writer thread, so lines never
interleave and same-session ordering follows commit order.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
from pathlib import Path

from .shell import DataRecord

log = logging.getLogger("uim.journal")


class JournalError(Exception):
    pass


def record_to_json(record: DataRecord) -> str:
    return json.dumps(
        {
            "ts": record.ts,
            "session_id": record.session_id,
            "flow": record.flow,
            "screen": record.screen,
            "bindings": record.bindings,
        },
        separators=(",", ":"),
    )


class _Pending:
    __slots__ = ("line", "done", "error")

    def __init__(self, line: str) -> None:
        self.line = line
        self.done = threading.Event()
        self.error: Exception | None = None


class Journal:
    """Serialized journal writer fed by a queue; append blocks for a receipt."""

    def __init__(self, path: str | Path, fsync: bool = False) -> None:
        self.path = Path(path)
        self.fsync = fsync
        self._queue: queue.Queue[_Pending | None] = queue.Queue()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._thread = threading.Thread(target=self._run, name="journal", daemon=True)
        self._thread.start()

    def close(self) -> None:
        if self._thread is None:
            return
        self._queue.put(None)
        self._thread.join(timeout=5)
        self._thread = None

    def append(self, record: DataRecord, timeout: float = 5.0) -> None:
        """Enqueue one record and wait until it hit the file (or failed)."""
        if self._thread is None:
            raise JournalError("journal not started")
        pending = _Pending(record_to_json(record))
        self._queue.put(pending)
        if not pending.done.wait(timeout):
            raise JournalError("journal write timed out")
        if pending.error is not None:
            raise JournalError(str(pending.error))

    def _run(self) -> None:
        while True:
            pending = self._queue.get()
            if pending is None:
                return
            try:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(pending.line + "\n")
                    fh.flush()
                    if self.fsync:
                        os.fsync(fh.fileno())
            except OSError as exc:
                log.error("journal write failed: %s", exc)
                pending.error = exc
            finally:
                pending.done.set()
