"""HTTP chat API: sessions, messages, traces (with an event-stream replay),
ingest, and health.

Sessions live in memory with a TTL and optional append-only JSONL logging.
Each session serializes its own messages, so a second message to the same
session queues behind the first; distinct sessions run concurrently.
Engine failures surface as opaque error ids - stack traces never cross the
wire.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import corpus
from .config import EngineConfig
from .engine import Engine
from .errors import UsageError
from .provider import ChatMessage

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
_MAX_STORED_TRACES = 1000


class MessageIn(BaseModel):
    text: str


@dataclass
class Session:
    session_id: str
    created_at: float
    messages: list[ChatMessage] = field(default_factory=list)
    last_user_query: str | None = None
    last_active: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory sessions with TTL expiry against an injectable clock."""

    def __init__(
        self,
        ttl_seconds: float,
        clock: Callable[[], float] = time.time,
        log_dir: str | None = None,
    ):
        self._ttl = ttl_seconds
        self._clock = clock
        self._log_dir = Path(log_dir) if log_dir else None
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        now = self._clock()
        session = Session(session_id=str(uuid.uuid4()), created_at=now, last_active=now)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise KeyError(session_id)
            if self._clock() - session.last_active > self._ttl:
                del self._sessions[session_id]
                raise KeyError(session_id)
            return session

    def touch(self, session: Session) -> None:
        session.last_active = self._clock()

    def append_exchange(self, session: Session, question: str, answer_text: str) -> None:
        session.messages.append(ChatMessage("user", question))
        session.messages.append(ChatMessage("assistant", answer_text or " "))
        session.last_user_query = question
        self.touch(session)
        if self._log_dir is not None:
            self._log_dir.mkdir(parents=True, exist_ok=True)
            log_path = self._log_dir / f"{session.session_id}.jsonl"
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"role": "user", "content": question}) + "\n")
                fh.write(json.dumps({"role": "assistant", "content": answer_text}) + "\n")


class TraceStore:
    """Bounded trace storage for the debug endpoints."""

    def __init__(self, limit: int = _MAX_STORED_TRACES):
        self._traces: OrderedDict[str, dict] = OrderedDict()
        self._limit = limit
        self._lock = threading.Lock()

    def put(self, trace: dict) -> str:
        trace_id = str(uuid.uuid4())
        with self._lock:
            self._traces[trace_id] = trace
            while len(self._traces) > self._limit:
                self._traces.popitem(last=False)
        return trace_id

    def get(self, trace_id: str) -> dict:
        with self._lock:
            return self._traces[trace_id]


def create_app(
    engine: Engine,
    config: EngineConfig | None = None,
    *,
    clock: Callable[[], float] = time.time,
) -> FastAPI:
    config = config or engine.config
    app = FastAPI(title="grasp", version="0.1.0")
    sessions = SessionStore(
        ttl_seconds=config.session_ttl_seconds,
        clock=clock,
        log_dir=config.session_log_dir,
    )
    traces = TraceStore()
    ingest_lock = threading.Lock()
    app.state.ingest_lock = ingest_lock

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.middleware("http")
    async def add_schema_version(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Schema-Version"] = SCHEMA_VERSION
        return response

    @app.post("/api/sessions")
    def create_session() -> dict:
        session = sessions.create()
        return {"session_id": session.session_id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        try:
            session = sessions.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        return {
            "session_id": session.session_id,
            "created_at": session.created_at,
            "messages": [{"role": m.role, "content": m.content} for m in session.messages],
        }

    @app.post("/api/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageIn) -> dict:
        try:
            session = sessions.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="message text must be non-empty")
        with session.lock:
            try:
                answer = engine.ask(
                    body.text,
                    last_query=session.last_user_query,
                    history=session.messages,
                )
            except Exception:
                error_id = str(uuid.uuid4())
                logger.exception("engine failure (error_id=%s)", error_id)
                return JSONResponse(status_code=500, content={"error_id": error_id})
            sessions.append_exchange(session, body.text, answer.text)
        trace_id = traces.put(answer.trace.to_dict())
        payload = answer.to_dict()
        payload["trace_id"] = trace_id
        return payload

    @app.get("/api/traces/{trace_id}")
    def get_trace(trace_id: str) -> dict:
        try:
            return traces.get(trace_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown trace")

    @app.get("/api/traces/{trace_id}/events")
    def trace_events(trace_id: str) -> StreamingResponse:
        try:
            trace = traces.get(trace_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown trace")

        def stream():
            for step in trace["steps"]:
                yield f"event: step\ndata: {json.dumps(step)}\n\n"
            done = {"iterations": trace["iterations"], "terminated_by": trace["terminated_by"]}
            yield f"event: done\ndata: {json.dumps(done)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/api/ingest")
    def ingest_endpoint(manifest: dict) -> dict:
        if not ingest_lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="an ingest is already running")
        try:
            parsed = corpus.manifest_from_dict(manifest, base_dir=Path.cwd())
            report = engine.ingest_manifest(parsed)
        except UsageError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        finally:
            ingest_lock.release()
        return report.to_dict()

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "status": "ok",
            "index_chunks": len(engine.index),
            "provider_kind": engine.provider.kind,
        }

    return app
