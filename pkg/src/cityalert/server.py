"""HTTP service: ingest endpoint, incident queries, live event push over
server-sent events, notification preferences and the authority contact
directory.

One worker thread drains the bounded ingest queue through the pipeline; every
stored incident fans out to all live subscriptions. Per-connection delivery
queues are bounded and drop the oldest event, leaving a gap marker so clients
know to re-sync.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import uuid
from collections import deque
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Sequence

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import evaluate, training
from .classify import EMERGENCY
from .config import Config, build_context, load_contacts, models_present
from .errors import CityAlertError
from .geo import BBox
from .pipeline import (
    Incident,
    PipelineContext,
    RawPost,
    classify_and_locate,
    parse_post_record,
)
from .store import IncidentStore, PreferenceStore

logger = logging.getLogger(__name__)

HEARTBEAT_SECONDS = 15.0
SUBSCRIPTION_QUEUE_SIZE = 256


class PostIn(BaseModel):
    text: str = Field(min_length=1)
    id: str | None = None
    lat: float | None = Field(default=None, ge=-90, le=90)
    lon: float | None = Field(default=None, ge=-180, le=180)
    timestamp: str | None = None
    author: str | None = None


class PreferencesIn(BaseModel):
    notifications_enabled: bool = True
    categories: list[str] | None = None
    bbox: tuple[float, float, float, float] | None = None


def _parse_bbox(text: str) -> BBox:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4 or parts[0] >= parts[2] or parts[1] >= parts[3]:
        raise ValueError(f"malformed bbox {text!r}")
    return (parts[0], parts[1], parts[2], parts[3])


class Subscription:
    """One live connection's bounded delivery queue (drop-oldest on overflow)."""

    def __init__(
        self,
        categories: frozenset[str] | None,
        bbox: BBox | None,
        maxlen: int = SUBSCRIPTION_QUEUE_SIZE,
    ):
        self.categories = categories
        self.bbox = bbox
        self._events: deque[Incident] = deque(maxlen=maxlen)
        self._dropped = 0
        self._cond = threading.Condition()
        self.closed = False

    def wants(self, incident: Incident) -> bool:
        if self.categories is not None and incident.category not in self.categories:
            return False
        if self.bbox is not None:
            if incident.geo is None:
                return False
            min_lat, min_lon, max_lat, max_lon = self.bbox
            if not (
                min_lat <= incident.geo.lat <= max_lat
                and min_lon <= incident.geo.lon <= max_lon
            ):
                return False
        return True

    def offer(self, incident: Incident) -> None:
        with self._cond:
            if len(self._events) == self._events.maxlen:
                self._dropped += 1
            self._events.append(incident)
            self._cond.notify()

    def take(self, timeout: float) -> tuple[Incident | None, int]:
        """Next incident (or None on timeout) plus dropped-event count to report."""
        with self._cond:
            if not self._events:
                self._cond.wait(timeout)
            dropped, self._dropped = self._dropped, 0
            incident = self._events.popleft() if self._events else None
            return incident, dropped


class Hub:
    """Broadcast fan-out from the pipeline worker to live subscriptions."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscriptions: list[Subscription] = []

    def subscribe(self, subscription: Subscription) -> None:
        with self._lock:
            self._subscriptions.append(subscription)

    def unsubscribe(self, subscription: Subscription) -> None:
        with self._lock:
            if subscription in self._subscriptions:
                self._subscriptions.remove(subscription)

    def publish(self, incident: Incident) -> None:
        with self._lock:
            targets = list(self._subscriptions)
        for sub in targets:
            if sub.wants(incident):
                sub.offer(incident)


class PipelineWorker(threading.Thread):
    """Drains the ingest queue: classify, persist, broadcast."""

    def __init__(self, ctx: PipelineContext, store: IncidentStore, hub: Hub, size: int):
        super().__init__(name="pipeline-worker", daemon=True)
        self.ctx = ctx
        self.store = store
        self.hub = hub
        self.ingest: queue.Queue = queue.Queue(maxsize=size)
        self.processed = 0
        self.drops: dict[str, int] = {}
        self._running = threading.Event()
        self._running.set()
        self._stop = object()

    def submit(self, post: RawPost) -> bool:
        try:
            self.ingest.put_nowait(post)
            return True
        except queue.Full:
            return False

    def pause(self) -> None:
        self._running.clear()

    def resume(self) -> None:
        self._running.set()

    def shutdown(self) -> None:
        self._running.set()
        self.ingest.put(self._stop)

    def drain(self, timeout: float = 10.0) -> None:
        """Block until every accepted post has been processed (test helper)."""
        self.ingest.join()

    def run(self) -> None:
        while True:
            item = self.ingest.get()
            try:
                if item is self._stop:
                    return
                self._running.wait()
                incident, reason = classify_and_locate(item, self.ctx)
                self.processed += 1
                if incident is None:
                    self.drops[reason] = self.drops.get(reason, 0) + 1
                    continue
                self.store.append(incident)
                self.hub.publish(incident)
            except Exception:  # keep the worker alive; a bad post is not fatal
                logger.exception("failed to process post")
            finally:
                self.ingest.task_done()


def _sse_frame(event: str, data: dict, event_id: str | None = None) -> str:
    frame = f"event: {event}\n"
    if event_id is not None:
        frame += f"id: {event_id}\n"
    return frame + f"data: {json.dumps(data)}\n\n"


def _ensure_models(config: Config) -> None:
    if models_present(config.resolved_models_dir):
        return
    if not config.auto_train:
        raise FileNotFoundError(
            f"no trained models under {config.resolved_models_dir}; "
            "run `cityalert train` or enable auto_train"
        )
    logger.warning(
        "no models under %s; training on the synthetic corpus (seed %d)",
        config.resolved_models_dir,
        config.train_seed,
    )
    examples = evaluate.generate_synthetic_corpus(
        evaluate.CorpusSpec(seed=config.train_seed)
    )
    categories, _ = load_contacts(config.contacts_path)
    stage1, stage2, ranking = training.train_stage_models(examples, categories)
    training.save_stage_models(stage1, stage2, ranking, config.resolved_models_dir)


def create_app(
    config: Config | None = None,
    context: PipelineContext | None = None,
    store: IncidentStore | None = None,
    preferences: PreferenceStore | None = None,
) -> FastAPI:
    """Build the service; tests may inject a prebuilt context and stores."""
    config = config or Config()
    config.data_dir.mkdir(parents=True, exist_ok=True)
    if context is None:
        _ensure_models(config)
        context = build_context(config)
    categories, contacts = load_contacts(config.contacts_path)
    store = store or IncidentStore(config.incidents_log)
    preferences = preferences or PreferenceStore(config.preferences_log)
    hub = Hub()
    worker = PipelineWorker(context, store, hub, config.queue_size)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        worker.start()
        yield
        worker.shutdown()

    app = FastAPI(title="cityalert", version="0.1.0", lifespan=lifespan)
    app.state.config = config
    app.state.context = context
    app.state.store = store
    app.state.preferences = preferences
    app.state.hub = hub
    app.state.worker = worker

    @app.exception_handler(RequestValidationError)
    async def validation_as_400(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def contacts_for(category: str) -> list[dict]:
        return [dict(entry) for entry in contacts if entry["category"] == category]

    @app.post("/api/posts", status_code=202)
    def http_ingest(body: PostIn, response: Response):
        record = body.model_dump()
        try:
            post = parse_post_record(record, default_id=uuid.uuid4().hex)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        if not worker.submit(post):
            return JSONResponse(status_code=429, content={"detail": "ingest queue full"})
        return {"id": post.id}

    @app.get("/api/incidents")
    def http_incidents(
        since: str | None = None,
        category: str | None = None,
        bbox: str | None = None,
        limit: int = Query(default=200, ge=1, le=5000),
    ):
        since_dt = None
        if since is not None:
            try:
                since_dt = datetime.fromisoformat(since.replace("Z", "+00:00"))
                if since_dt.tzinfo is None:
                    since_dt = since_dt.replace(tzinfo=timezone.utc)
            except ValueError:
                return JSONResponse(status_code=400, content={"detail": "bad since"})
        box = None
        if bbox is not None:
            try:
                box = _parse_bbox(bbox)
            except ValueError:
                return JSONResponse(status_code=400, content={"detail": "bad bbox"})
        found = store.query(since=since_dt, category=category, bbox=box, limit=limit)
        return [incident.to_record() for incident in found]

    @app.get("/api/incidents/{incident_id}")
    def http_incident(incident_id: str):
        incident = store.get(incident_id)
        if incident is None:
            return JSONResponse(status_code=404, content={"detail": "unknown incident"})
        return incident.to_record()

    @app.get("/api/contacts")
    def http_contacts(category: str):
        if category not in categories:
            return JSONResponse(status_code=404, content={"detail": "unknown category"})
        return contacts_for(category)

    def _default_preferences(user_id: str) -> dict:
        return {
            "user_id": user_id,
            "notifications_enabled": True,
            "categories": list(categories),
            "bbox": None,
        }

    @app.get("/api/preferences/{user_id}")
    def preferences_get(user_id: str):
        stored = preferences.get(user_id)
        if stored is None:
            return _default_preferences(user_id)
        merged = _default_preferences(user_id)
        merged.update(stored)
        return merged

    @app.put("/api/preferences/{user_id}")
    def preferences_put(user_id: str, body: PreferencesIn):
        if body.categories is not None:
            unknown = [c for c in body.categories if c not in categories]
            if unknown:
                return JSONResponse(
                    status_code=400,
                    content={"detail": f"unknown categories: {unknown}"},
                )
        record = {
            "notifications_enabled": body.notifications_enabled,
            "categories": (
                list(body.categories) if body.categories is not None else list(categories)
            ),
            "bbox": list(body.bbox) if body.bbox is not None else None,
        }
        stored = preferences.put(user_id, record)
        merged = _default_preferences(user_id)
        merged.update(stored)
        return merged

    @app.get("/api/wordcloud")
    def http_wordcloud():
        path = Path(config.wordcloud_path)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {"records": []}

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "incidents": len(store),
            "queue_depth": worker.ingest.qsize(),
            "categories": list(categories),
        }

    @app.get("/api/stream")
    def event_stream(
        request: Request,
        category: str | None = None,
        bbox: str | None = None,
        user: str | None = None,
        last_event_id: str | None = None,
    ):
        wanted_categories: frozenset[str] | None = None
        wanted_bbox: BBox | None = None
        silenced = False
        if user is not None:
            stored = preferences.get(user) or _default_preferences(user)
            if not stored.get("notifications_enabled", True):
                silenced = True
            if stored.get("categories") is not None:
                wanted_categories = frozenset(stored["categories"])
            if stored.get("bbox"):
                wanted_bbox = tuple(stored["bbox"])  # type: ignore[assignment]
        if category is not None:
            wanted_categories = frozenset({category})
        if bbox is not None:
            try:
                wanted_bbox = _parse_bbox(bbox)
            except ValueError:
                return JSONResponse(status_code=400, content={"detail": "bad bbox"})
        resume_from = request.headers.get("last-event-id") or last_event_id
        # subscribe before streaming starts so nothing published after the
        # request is handled can be missed; silenced users keep the
        # connection but are never subscribed
        subscription = Subscription(wanted_categories, wanted_bbox)
        if not silenced:
            hub.subscribe(subscription)

        def stream() -> Iterator[str]:
            replayed: set[str] = set()
            try:
                yield ": connected\n\n"
                if resume_from is not None and not silenced:
                    for incident in store.after(resume_from):
                        if subscription.wants(incident):
                            replayed.add(incident.id)
                            yield _sse_frame(
                                "incident",
                                {
                                    "incident": incident.to_record(),
                                    "contacts": contacts_for(incident.category),
                                },
                                event_id=incident.id,
                            )
                while True:
                    incident, dropped = subscription.take(timeout=HEARTBEAT_SECONDS)
                    if dropped:
                        yield _sse_frame("gap", {"dropped": dropped})
                    if incident is None:
                        yield ": ping\n\n"
                        continue
                    if incident.id in replayed:
                        replayed.discard(incident.id)
                        continue
                    yield _sse_frame(
                        "incident",
                        {
                            "incident": incident.to_record(),
                            "contacts": contacts_for(incident.category),
                        },
                        event_id=incident.id,
                    )
            finally:
                hub.unsubscribe(subscription)

        return StreamingResponse(stream(), media_type="text/event-stream")

    static_dir = config.static_dir
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")

    return app
