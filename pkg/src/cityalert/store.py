"""Durable append-only persistence with crash recovery.

Records are JSON Lines, each line carrying a CRC32 suffix so torn writes are
detectable: `<json-record><TAB><crc32-hex>`. One writer, many readers; the
in-memory index is rebuilt by replaying the log on open.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import zlib
from datetime import datetime
from pathlib import Path
from typing import Iterator

from .errors import CorruptLog, StorageFull
from .geo import BBox
from .pipeline import Incident

logger = logging.getLogger(__name__)


def _encode(record: dict) -> str:
    payload = json.dumps(record, sort_keys=True, separators=(",", ":"))
    crc = zlib.crc32(payload.encode("utf-8")) & 0xFFFFFFFF
    return f"{payload}\t{crc:08x}\n"


def _decode(line: str) -> dict | None:
    """Parsed record, or None when the line fails its checksum or shape."""
    body, sep, crc_text = line.rstrip("\n").rpartition("\t")
    if not sep:
        return None
    try:
        expected = int(crc_text, 16)
    except ValueError:
        return None
    if zlib.crc32(body.encode("utf-8")) & 0xFFFFFFFF != expected:
        return None
    try:
        record = json.loads(body)
    except ValueError:
        return None
    return record if isinstance(record, dict) else None


class AppendLog:
    """Single-writer checksummed record log with optional size-based rotation."""

    def __init__(self, path: str | Path, fsync: bool = True, max_bytes: int | None = None):
        self.path = Path(path)
        self.fsync = fsync
        self.max_bytes = max_bytes
        self.torn_lines = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._handle = open(self.path, "a", encoding="utf-8")

    def _generations(self) -> list[Path]:
        """Rotated files oldest first, then the live log."""
        rotated = sorted(
            self.path.parent.glob(self.path.name + ".*"),
            key=lambda p: int(p.suffix[1:]),
        )
        return [*rotated, self.path]

    def replay(self) -> Iterator[dict]:
        """Yield all intact records; a torn line is tolerated only at the very
        end of the newest file, anything else raises CorruptLog."""
        files = [p for p in self._generations() if p.exists()]
        for file_pos, file_path in enumerate(files):
            with open(file_path, encoding="utf-8") as fh:
                lines = fh.readlines()
            for line_pos, line in enumerate(lines):
                record = _decode(line)
                if record is None:
                    at_tail = file_pos == len(files) - 1 and line_pos == len(lines) - 1
                    if at_tail:
                        self.torn_lines += 1
                        logger.warning(
                            "discarding torn trailing line in %s", file_path
                        )
                        continue
                    raise CorruptLog(f"{file_path}:{line_pos + 1}: checksum failure")
                yield record

    def append(self, record: dict) -> None:
        line = _encode(record)
        with self._lock:
            try:
                if (
                    self.max_bytes is not None
                    and self._handle.tell() + len(line) > self.max_bytes
                    and self._handle.tell() > 0
                ):
                    self._rotate()
                self._handle.write(line)
                self._handle.flush()
                if self.fsync:
                    os.fsync(self._handle.fileno())
            except OSError as exc:
                raise StorageFull(str(exc)) from exc

    def _rotate(self) -> None:
        self._handle.close()
        existing = [
            int(p.suffix[1:]) for p in self.path.parent.glob(self.path.name + ".*")
        ]
        generation = max(existing, default=0) + 1
        self.path.rename(self.path.with_name(f"{self.path.name}.{generation}"))
        self._handle = open(self.path, "a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            self._handle.close()


class IncidentStore:
    """Queryable incident index over an append-only log.

    Appends are idempotent on incident id; readers see a consistent snapshot
    no older than the last acknowledged append.
    """

    def __init__(self, path: str | Path, fsync: bool = True, max_bytes: int | None = None):
        self._log = AppendLog(path, fsync=fsync, max_bytes=max_bytes)
        self._lock = threading.Lock()
        self._order: list[Incident] = []
        self._by_id: dict[str, Incident] = {}
        for record in self._log.replay():
            incident = Incident.from_record(record)
            if incident.id not in self._by_id:
                self._by_id[incident.id] = incident
                self._order.append(incident)

    @property
    def torn_lines(self) -> int:
        return self._log.torn_lines

    def __len__(self) -> int:
        return len(self._order)

    def append(self, incident: Incident) -> bool:
        """Durably persist an incident; False when its id is already stored."""
        with self._lock:
            if incident.id in self._by_id:
                return False
            self._log.append(incident.to_record())
            self._by_id[incident.id] = incident
            self._order.append(incident)
            return True

    def get(self, incident_id: str) -> Incident | None:
        return self._by_id.get(incident_id)

    def query(
        self,
        since: datetime | None = None,
        category: str | None = None,
        bbox: BBox | None = None,
        limit: int = 200,
    ) -> list[Incident]:
        """Incidents matching every given predicate, newest first.

        Incidents without coordinates never match a bbox query.
        """
        with self._lock:
            snapshot = list(self._order)
        out: list[Incident] = []
        for incident in reversed(snapshot):
            if since is not None and incident.detected_at < since:
                continue
            if category is not None and incident.category != category:
                continue
            if bbox is not None:
                if incident.geo is None:
                    continue
                min_lat, min_lon, max_lat, max_lon = bbox
                if not (
                    min_lat <= incident.geo.lat <= max_lat
                    and min_lon <= incident.geo.lon <= max_lon
                ):
                    continue
            out.append(incident)
            if len(out) >= limit:
                break
        return out

    def after(self, last_id: str | None) -> list[Incident]:
        """Incidents appended after `last_id` in append order; all of them when
        the id is unknown or None."""
        with self._lock:
            snapshot = list(self._order)
        if last_id is None:
            return snapshot
        for pos, incident in enumerate(snapshot):
            if incident.id == last_id:
                return snapshot[pos + 1 :]
        return snapshot

    def close(self) -> None:
        self._log.close()


class PreferenceStore:
    """Per-user notification preferences on the same append-log mechanism;
    the latest record per user wins."""

    def __init__(self, path: str | Path, fsync: bool = True):
        self._log = AppendLog(path, fsync=fsync)
        self._lock = threading.Lock()
        self._prefs: dict[str, dict] = {}
        for record in self._log.replay():
            user = record.get("user_id")
            if isinstance(user, str):
                self._prefs[user] = record

    def get(self, user_id: str) -> dict | None:
        with self._lock:
            record = self._prefs.get(user_id)
            return dict(record) if record else None

    def put(self, user_id: str, preferences: dict) -> dict:
        record = dict(preferences)
        record["user_id"] = user_id
        with self._lock:
            self._log.append(record)
            self._prefs[user_id] = record
            return dict(record)

    def close(self) -> None:
        self._log.close()
