"""The live processing path: keyword pre-filter, sanitize, two-stage
classification, geolocation and incident creation.

`run_stream` decouples ingestion from processing with a bounded queue so one
slow post never stalls the source beyond the queue capacity.
"""

from __future__ import annotations

import hashlib
import json
import logging
import queue
import re
import socket
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from .classify import EMERGENCY, ModelBundle, two_stage_classify
from .errors import EmptyAfterCleaning, GeocoderUnavailable, SourceClosed
from .geo import BBox, Gazetteer, GeocoderClient, GeoPoint, in_bounds, resolve_location
from .preprocess import Dictionary, NormalizationMap, RawPost, sanitize

logger = logging.getLogger(__name__)

DEFAULT_QUEUE_SIZE = 1024


class FilterList:
    """Ordered lowercase keyword phrases matched on whole-word boundaries."""

    def __init__(self, phrases: Iterable[str]):
        seen: dict[str, None] = {}
        for phrase in phrases:
            cleaned = " ".join(phrase.lower().split())
            if cleaned:
                seen.setdefault(cleaned)
        if not seen:
            raise ValueError("filter list is empty")
        self.phrases: tuple[str, ...] = tuple(seen)
        self._patterns = [
            re.compile(r"(?<!\w)" + re.escape(p).replace(r"\ ", r"\s+") + r"(?!\w)")
            for p in self.phrases
        ]

    def __len__(self) -> int:
        return len(self.phrases)

    def matches(self, text: str) -> bool:
        lowered = text.lower()
        return any(p.search(lowered) for p in self._patterns)


def load_filter_list(path: str | Path) -> FilterList:
    with open(path, encoding="utf-8") as fh:
        return FilterList(
            line.strip() for line in fh if line.strip() and not line.startswith("#")
        )


def keyword_filter(post: RawPost, filters: FilterList) -> bool:
    """True iff the raw text contains any filter phrase as a whole word."""
    return filters.matches(post.text)


@dataclass(frozen=True)
class Incident:
    """A positively classified post with its category, scores and location."""

    id: str
    source_id: str
    category: str
    stage1_score: float
    stage2_scores: dict[str, float]
    geo: GeoPoint | None
    out_of_area: bool
    sanitized_text: str
    raw_text: str
    detected_at: datetime

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "source_id": self.source_id,
            "category": self.category,
            "lat": self.geo.lat if self.geo else None,
            "lon": self.geo.lon if self.geo else None,
            "geo_source": self.geo.source if self.geo else None,
            "place_name": self.geo.place_name if self.geo else None,
            "out_of_area": self.out_of_area,
            "sanitized_text": self.sanitized_text,
            "raw_text": self.raw_text,
            "detected_at": self.detected_at.isoformat(),
            "scores": {"stage1": self.stage1_score, "stage2": self.stage2_scores},
        }

    @classmethod
    def from_record(cls, record: dict) -> "Incident":
        geo = None
        if record.get("lat") is not None and record.get("lon") is not None:
            geo = GeoPoint(
                lat=record["lat"],
                lon=record["lon"],
                source=record.get("geo_source") or "post-metadata",
                place_name=record.get("place_name"),
            )
        return cls(
            id=record["id"],
            source_id=record["source_id"],
            category=record["category"],
            stage1_score=record["scores"]["stage1"],
            stage2_scores=dict(record["scores"]["stage2"]),
            geo=geo,
            out_of_area=record["out_of_area"],
            sanitized_text=record["sanitized_text"],
            raw_text=record["raw_text"],
            detected_at=datetime.fromisoformat(record["detected_at"]),
        )


def incident_id(source_id: str, category: str) -> str:
    """Deterministic digest so replaying a stream is idempotent."""
    digest = hashlib.sha256(f"{source_id}\x00{category}".encode()).hexdigest()
    return digest[:16]


def _default_clock(post: RawPost) -> datetime:
    now = datetime.now(timezone.utc)
    return max(now, post.timestamp)


def replay_clock(post: RawPost) -> datetime:
    """Clock for deterministic replays: detection time = post time."""
    return post.timestamp


@dataclass
class PipelineContext:
    """Everything the live path needs, immutable once loaded."""

    dictionary: Dictionary
    normalization: NormalizationMap
    gazetteer: Gazetteer
    filters: FilterList
    bbox: BBox
    stage1: ModelBundle
    stage2: ModelBundle
    categories: tuple[str, ...]
    geocoder: GeocoderClient | None = None
    clock: Callable[[RawPost], datetime] = _default_clock

    def __post_init__(self):
        self.categories = tuple(self.categories)


DROP_FILTER = "filter"
DROP_EMPTY = "empty-after-cleaning"
DROP_STAGE1 = "stage1"


def classify_and_locate(post: RawPost, ctx: PipelineContext):
    """Full per-post decision: returns (Incident, None) or (None, drop reason)."""
    if not keyword_filter(post, ctx.filters):
        return None, DROP_FILTER
    try:
        sanitized = sanitize(post, ctx.dictionary, ctx.normalization)
    except EmptyAfterCleaning:
        return None, DROP_EMPTY
    result = two_stage_classify(sanitized, ctx.stage1, ctx.stage2)
    if result is None:
        return None, DROP_STAGE1
    try:
        geo = resolve_location(post, sanitized, ctx.gazetteer, ctx.geocoder)
    except GeocoderUnavailable as exc:
        logger.warning("geocoder unavailable for post %s: %s", post.id, exc)
        geo = resolve_location(post, sanitized, ctx.gazetteer, None)
    out_of_area = geo is not None and not in_bounds(geo, ctx.bbox)
    incident = Incident(
        id=incident_id(post.id, result.category),
        source_id=post.id,
        category=result.category,
        stage1_score=result.stage1_scores.get(EMERGENCY, 0.0),
        stage2_scores=result.stage2_scores,
        geo=geo,
        out_of_area=out_of_area,
        sanitized_text=" ".join(sanitized.tokens),
        raw_text=post.text,
        detected_at=ctx.clock(post),
    )
    return incident, None


def process_post(post: RawPost, ctx: PipelineContext) -> Incident | None:
    """Incident for emergency posts, None otherwise; drops are logged."""
    incident, reason = classify_and_locate(post, ctx)
    if incident is None:
        logger.info("dropped post %s (%s)", post.id, reason)
    return incident


def parse_post_record(data: dict, default_id: str | None = None) -> RawPost:
    """Build a RawPost from a `{id, text, lat, lon, timestamp, author}` record."""
    if not isinstance(data, dict):
        raise ValueError("post record must be an object")
    text = data.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("post record needs non-empty text")
    post_id = data.get("id") or default_id
    if not post_id:
        raise ValueError("post record needs an id")
    raw_ts = data.get("timestamp")
    if raw_ts:
        timestamp = datetime.fromisoformat(str(raw_ts).replace("Z", "+00:00"))
        if timestamp.tzinfo is None:
            timestamp = timestamp.replace(tzinfo=timezone.utc)
    else:
        timestamp = datetime.now(timezone.utc)
    coords = None
    if data.get("lat") is not None and data.get("lon") is not None:
        coords = (float(data["lat"]), float(data["lon"]))
    return RawPost(
        id=str(post_id),
        text=text,
        timestamp=timestamp,
        author=str(data.get("author") or ""),
        coords=coords,
    )


class ReplayFileSource:
    """JSON Lines replay source with optional posts-per-second throttling."""

    def __init__(self, path: str | Path, rate: float | None = None):
        self.path = Path(path)
        self.rate = rate

    def __iter__(self) -> Iterator[str]:
        delay = 1.0 / self.rate if self.rate else 0.0
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield line
                if delay:
                    time.sleep(delay)


class SocketSource:
    """Line-delimited JSON records from a TCP connection."""

    def __init__(self, host: str, port: int, timeout: float | None = None):
        self.host = host
        self.port = port
        self.timeout = timeout

    def __iter__(self) -> Iterator[str]:
        with socket.create_connection((self.host, self.port), self.timeout) as conn:
            with conn.makefile("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        yield line


@dataclass
class StreamSummary:
    """Per-run accounting; every ingested record lands in exactly one bucket."""

    ingested: int = 0
    malformed: int = 0
    duplicates: int = 0
    filtered: int = 0
    empty_dropped: int = 0
    stage1_rejected: int = 0
    incidents: int = 0
    mean_latency_ms: float = 0.0
    max_latency_ms: float = 0.0

    def conserved(self) -> bool:
        return self.ingested == (
            self.malformed
            + self.duplicates
            + self.filtered
            + self.empty_dropped
            + self.stage1_rejected
            + self.incidents
        )

    def to_dict(self) -> dict:
        return dict(self.__dict__)


_SENTINEL = object()


def run_stream(
    source: Iterable[str],
    ctx: PipelineContext,
    sink: Callable[[Incident], None],
    queue_size: int = DEFAULT_QUEUE_SIZE,
) -> StreamSummary:
    """Process a post stream in arrival order and deliver incidents to `sink`.

    A reader thread feeds a bounded queue (backpressure: the reader blocks
    when processing falls behind by `queue_size` posts). Malformed records
    are counted and skipped; duplicate post ids are dropped at ingestion.
    """
    lines: queue.Queue = queue.Queue(maxsize=queue_size)

    def read():
        try:
            for line in source:
                lines.put(line)
        except SourceClosed:
            pass
        finally:
            lines.put(_SENTINEL)

    reader = threading.Thread(target=read, name="stream-reader", daemon=True)
    reader.start()

    summary = StreamSummary()
    seen_ids: set[str] = set()
    latencies: list[float] = []
    reasons = {
        DROP_FILTER: "filtered",
        DROP_EMPTY: "empty_dropped",
        DROP_STAGE1: "stage1_rejected",
    }
    while True:
        item = lines.get()
        if item is _SENTINEL:
            break
        summary.ingested += 1
        started = time.perf_counter()
        try:
            post = parse_post_record(json.loads(item))
        except (ValueError, TypeError) as exc:
            logger.warning("skipping malformed record: %s", exc)
            summary.malformed += 1
            continue
        if post.id in seen_ids:
            summary.duplicates += 1
            continue
        seen_ids.add(post.id)
        incident, reason = classify_and_locate(post, ctx)
        if incident is not None:
            sink(incident)
            summary.incidents += 1
        else:
            setattr(summary, reasons[reason], getattr(summary, reasons[reason]) + 1)
        latencies.append((time.perf_counter() - started) * 1000.0)
    reader.join(timeout=5.0)
    if latencies:
        summary.mean_latency_ms = sum(latencies) / len(latencies)
        summary.max_latency_ms = max(latencies)
    return summary
