"""Operator HTTP surface over a running engine.

Plain JSON request/response plus one server-sent-events stream. The server
holds only snapshots and a handle to the engine control queue, so no
request can block engine progress: slow event subscribers are disconnected
once their buffer fills, never backpressured upstream.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .engine import COMMAND_KINDS, Engine, VALID_TOP_K
from .errors import ConfigError, EdgeTaggerError
from .inference import ModelManifest, load_manifest
from .telemetry import agg_csv_text, aggregate, raw_csv_text

log = logging.getLogger(__name__)

DEFAULT_LISTEN = "127.0.0.1:8787"
DEFAULT_MAX_SUBSCRIBERS = 4
DEFAULT_SUBSCRIBER_BUFFER = 64
COMMAND_TIMEOUT_S = 30.0
HEARTBEAT_S = 15.0


def parse_listen(text: str) -> tuple:
    """'host:port' -> (host, port); the port may be 0 for an ephemeral one."""
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"listen address must be host:port, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"invalid listen port in {text!r}")


class ModelRegistry:
    """The set of manifests an operator may swap to, keyed by model_id."""

    def __init__(self, manifests=()):
        self._manifests: dict[str, ModelManifest] = {}
        for manifest in manifests:
            self.add(manifest)

    @classmethod
    def from_dir(cls, directory: Path) -> "ModelRegistry":
        registry = cls()
        for path in sorted(Path(directory).glob("*.json")):
            try:
                registry.add(load_manifest(path))
            except EdgeTaggerError as exc:
                log.warning("skipping %s: %s", path.name, exc)
        return registry

    def add(self, manifest: ModelManifest) -> None:
        self._manifests[manifest.model_id] = manifest

    def get(self, model_id: str) -> Optional[ModelManifest]:
        return self._manifests.get(model_id)

    def list(self) -> list:
        return [{"model_id": m.model_id, "pipeline_kind": m.pipeline_kind}
                for m in sorted(self._manifests.values(),
                                key=lambda m: m.model_id)]

    def __len__(self) -> int:
        return len(self._manifests)


class _Subscription:
    def __init__(self, buffer: int):
        self.queue: queue.Queue = queue.Queue(maxsize=buffer)
        self.dead = False


class EventBroadcaster:
    """Fans engine events out to bounded per-subscriber queues."""

    def __init__(self, max_subscribers: int = DEFAULT_MAX_SUBSCRIBERS,
                 buffer: int = DEFAULT_SUBSCRIBER_BUFFER):
        self.max_subscribers = max_subscribers
        self.buffer = buffer
        self._subs: list[_Subscription] = []
        self._lock = threading.Lock()

    def attach(self, engine: Engine) -> None:
        engine.add_listener(self.publish)

    def publish(self, event: dict) -> None:
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            try:
                sub.queue.put_nowait(event)
            except queue.Full:
                # A reader this far behind is shed, not waited for.
                sub.dead = True
                self._remove(sub)
                log.warning("disconnecting slow event subscriber")

    def subscribe(self) -> Optional[_Subscription]:
        with self._lock:
            if len(self._subs) >= self.max_subscribers:
                return None
            sub = _Subscription(self.buffer)
            self._subs.append(sub)
            return sub

    def unsubscribe(self, sub: _Subscription) -> None:
        self._remove(sub)

    def _remove(self, sub: _Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    @property
    def subscriber_count(self) -> int:
        with self._lock:
            return len(self._subs)


def _sse_frame(event: dict) -> str:
    return (f"event: {event.get('type', 'message')}\n"
            f"data: {json.dumps(event, sort_keys=True)}\n\n")


def create_app(engine: Engine, registry: ModelRegistry, *,
               broadcaster: Optional[EventBroadcaster] = None,
               static_dir: Optional[Path] = None) -> FastAPI:
    """Wire the API routes around one engine instance."""
    app = FastAPI(title="edge-tagger", docs_url=None, redoc_url=None)
    events = broadcaster or EventBroadcaster()
    events.attach(engine)
    app.state.broadcaster = events

    @app.get("/api/status")
    def get_status() -> JSONResponse:
        status = engine.status()
        status["subscribers"] = events.subscriber_count
        return JSONResponse(status)

    @app.get("/api/models")
    def get_models() -> JSONResponse:
        active = engine.status()["model_id"]
        return JSONResponse({"models": registry.list(), "active": active})

    @app.get("/api/metrics/raw.csv")
    def get_raw_csv() -> Response:
        text = raw_csv_text(engine.telemetry.snapshot())
        return Response(text, media_type="text/csv")

    @app.get("/api/metrics/agg.csv")
    def get_agg_csv() -> Response:
        buckets = aggregate(engine.telemetry.snapshot(), engine.cfg.bucket_s)
        return Response(agg_csv_text(buckets), media_type="text/csv")

    @app.post("/api/command")
    def post_command(body: dict) -> JSONResponse:
        kind = body.get("kind")
        if kind not in COMMAND_KINDS:
            return JSONResponse({"ok": False,
                                 "error": f"unknown command kind {kind!r}"},
                                status_code=400)
        manifest = None
        value = body.get("value")
        if kind == "change_model":
            model_id = body.get("manifest_id")
            manifest = registry.get(model_id) if model_id else None
            if manifest is None:
                return JSONResponse(
                    {"ok": False,
                     "error": f"unknown manifest_id {model_id!r}"},
                    status_code=404)
        if kind == "set_topk" and value not in VALID_TOP_K:
            return JSONResponse(
                {"ok": False, "error": f"top_k must be one of {VALID_TOP_K}"},
                status_code=400)
        ack = engine.control.submit(kind, manifest=manifest, value=value)
        if not ack.wait(COMMAND_TIMEOUT_S):
            return JSONResponse({"ok": False, "error": "command timed out"},
                                status_code=504)
        if not ack.ok:
            return JSONResponse({"ok": False, "error": ack.error},
                                status_code=400)
        return JSONResponse({"ok": True, "latency_ms": ack.latency_ms})

    @app.get("/api/events")
    def stream_events() -> Response:
        sub = events.subscribe()
        if sub is None:
            return JSONResponse(
                {"ok": False,
                 "error": f"subscriber limit {events.max_subscribers}"},
                status_code=503)

        def generate():
            try:
                while not sub.dead:
                    try:
                        event = sub.queue.get(timeout=HEARTBEAT_S)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield _sse_frame(event)
            finally:
                events.unsubscribe(sub)

        return StreamingResponse(generate(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")
    else:
        @app.get("/")
        def no_ui() -> JSONResponse:
            return JSONResponse(
                {"ok": False, "error": "UI assets not installed"},
                status_code=404)

    return app


class ApiServer:
    """Uvicorn in a daemon thread, so the engine owns the main thread."""

    def __init__(self, app: FastAPI, host: str = "127.0.0.1",
                 port: int = 8787):
        import uvicorn
        self._config = uvicorn.Config(app, host=host, port=port,
                                      log_level="warning", access_log=False)
        self._server = uvicorn.Server(self._config)
        self._thread: Optional[threading.Thread] = None

    def start(self, timeout: float = 10.0) -> None:
        self._thread = threading.Thread(target=self._server.run,
                                        name="api-server", daemon=True)
        self._thread.start()
        deadline = time.monotonic() + timeout
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("API server failed to start")
            if not self._thread.is_alive():
                raise RuntimeError("API server exited during startup")
            time.sleep(0.01)

    @property
    def port(self) -> int:
        sockets = self._server.servers[0].sockets
        return sockets[0].getsockname()[1]

    @property
    def base_url(self) -> str:
        return f"http://{self._config.host}:{self.port}"

    def stop(self, timeout: float = 10.0) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout)
