"""Append-only time-series store for the edge node.

Records are plain dicts with at least "t" and "kind".  They live in memory
for queries and, when a path is given, are appended to a JSONL file with a
periodic flush so a crash loses at most one flush window.  There is no
update or delete; history only ever grows.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Iterable, Optional

FLUSH_EVERY_DEFAULT = 256


class TimeSeriesStore:
    def __init__(self, path: Optional[Any] = None, flush_every: int = FLUSH_EVERY_DEFAULT):
        self._records: list[tuple[float, int, dict[str, Any]]] = []
        self._lock = threading.Lock()
        self._flush_every = max(1, flush_every)
        self._unflushed = 0
        self._fh = None
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: dict[str, Any]) -> None:
        if "t" not in record or "kind" not in record:
            raise ValueError("store records need 't' and 'kind' fields")
        with self._lock:
            self._records.append((float(record["t"]), len(self._records), record))
            if self._fh is not None:
                self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
                self._unflushed += 1
                if self._unflushed >= self._flush_every:
                    self._fh.flush()
                    self._unflushed = 0

    def query(
        self,
        kind: Optional[str] = None,
        greenhouse: Optional[str] = None,
        t_from: Optional[float] = None,
        t_to: Optional[float] = None,
    ) -> list[dict[str, Any]]:
        """Matching records in timestamp order (ties keep insertion order)."""
        with self._lock:
            rows = list(self._records)
        out = []
        for t, _seq, rec in sorted(rows, key=lambda r: (r[0], r[1])):
            if kind is not None and rec["kind"] != kind:
                continue
            if greenhouse is not None and rec.get("greenhouse") != greenhouse:
                continue
            if t_from is not None and t < t_from:
                continue
            if t_to is not None and t > t_to:
                continue
            out.append(rec)
        return out

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def flush(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                self._unflushed = 0

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                self._fh.close()
                self._fh = None

    @classmethod
    def load(cls, path: Any) -> "TimeSeriesStore":
        """Reopen an existing store file; records are loaded and the file is
        kept open for further appends."""
        store = cls.__new__(cls)
        store._records = []
        store._lock = threading.Lock()
        store._flush_every = FLUSH_EVERY_DEFAULT
        store._unflushed = 0
        store.path = Path(path)
        with open(store.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    store._records.append((float(rec["t"]), len(store._records), rec))
        store._fh = open(store.path, "a", encoding="utf-8")
        return store
