"""HTTP facade: analysis, one-shot rewriting, and human-in-the-loop edit
sessions consumed by the browser editor."""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import replace
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from depolar.annealer import AnnealConfig
from depolar.errors import DepolarError, UnknownOptionError
from depolar.runtime import Pipeline


class SortedJSONResponse(Response):
    """Deterministic JSON bytes: sorted keys, compact separators."""

    media_type = "application/json"

    def render(self, content: Any) -> bytes:
        return json.dumps(content, sort_keys=True, separators=(",", ":")).encode("utf-8")


class AnalyzeRequest(BaseModel):
    text: str
    topic: str
    ideology: str
    model_config = {"extra": "forbid"}


class DepolarizeRequest(BaseModel):
    text: str
    topic: str
    ideology: str
    seed: int | None = None
    model_config = {"extra": "forbid"}


class SessionRequest(BaseModel):
    text: str
    topic: str
    ideology: str
    model_config = {"extra": "forbid"}


class ApplyRequest(BaseModel):
    position: int
    choice: str | None = None  # null reverts the position to its original word
    version: int | None = None
    model_config = {"extra": "forbid"}


class Session:
    def __init__(self, session_id: str, pipeline: Pipeline, text: str, topic: str, ideology: str, config: AnnealConfig):
        self.id = session_id
        self.topic = topic
        self.ideology = ideology
        self.version = 0
        self.audit: list[dict] = []
        tokens, spans = pipeline.prepare_text(text)
        self.spans = spans
        self.state = pipeline.depolarizer.suggest(tokens, topic, ideology, config)

    def export_text(self) -> str:
        tokens = self.state.current_tokens()
        paragraphs = [" ".join(tokens[start:end]) for start, end in self.spans]
        return "\n\n".join(p for p in paragraphs if p)

    def payload(self, include_suggestions: bool = True) -> dict:
        body = {
            "session_id": self.id,
            "version": self.version,
            "topic": self.topic,
            "ideology": self.ideology,
            "tokens": self.state.current_tokens(),
            "original_tokens": list(self.state.original),
            "scores": self.state.scores(),
            "replacements": [
                {"position": r.position, "old": r.old, "new": r.new}
                for r in self.state.replacements()
            ],
            "audit": list(self.audit),
        }
        if include_suggestions:
            body["suggestions"] = self.state.suggestions()
        return body


class SessionStore:
    """In-memory sessions with an optional append-only JSONL audit log."""

    def __init__(self, log_path: str | None = None):
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.log_path = log_path

    def create(self, session: Session) -> None:
        with self.lock:
            self.sessions[session.id] = session
        self._log({"event": "create", "session": session.id, "topic": session.topic, "ideology": session.ideology})

    def get(self, session_id: str) -> Session | None:
        with self.lock:
            return self.sessions.get(session_id)

    def _log(self, entry: dict) -> None:
        if not self.log_path:
            return
        with self.lock, open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def log_apply(self, session: Session, position: int, choice: str | None) -> None:
        self._log(
            {
                "event": "apply",
                "session": session.id,
                "seq": len(session.audit),
                "position": position,
                "choice": choice,
            }
        )


def create_app(
    pipeline: Pipeline,
    session_log: str | None = None,
    anneal_config: AnnealConfig | None = None,
) -> FastAPI:
    app = FastAPI(title="depolar", default_response_class=SortedJSONResponse)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(session_log)
    base_config = anneal_config or AnnealConfig()
    app.state.pipeline = pipeline
    app.state.sessions = store

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed", "detail": exc.errors()})

    @app.exception_handler(UnknownOptionError)
    async def unknown_option(request: Request, exc: UnknownOptionError):
        return JSONResponse(status_code=422, content={"error": "unknown_option", "message": str(exc)})

    @app.exception_handler(DepolarError)
    async def depolar_error(request: Request, exc: DepolarError):
        return JSONResponse(status_code=400, content={"error": type(exc).__name__, "message": str(exc)})

    @app.post("/v1/analyze")
    def analyze(body: AnalyzeRequest):
        pipeline.check_topic(body.topic)
        pipeline.check_ideology(body.ideology)
        return pipeline.analyze_text(body.text, body.topic)

    @app.post("/v1/depolarize")
    def depolarize(body: DepolarizeRequest):
        config = base_config if body.seed is None else replace(base_config, seed=body.seed)
        return pipeline.depolarize_text(body.text, body.topic, body.ideology, config)

    @app.post("/v1/sessions")
    def create_session(body: SessionRequest):
        pipeline.check_topic(body.topic)
        pipeline.check_ideology(body.ideology, polar_only=True)
        session = Session(uuid.uuid4().hex, pipeline, body.text, body.topic, body.ideology, base_config)
        store.create(session)
        return session.payload()

    @app.post("/v1/sessions/{session_id}/apply")
    def apply_choice(session_id: str, body: ApplyRequest):
        session = store.get(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "unknown_session"})
        with store.lock:
            if body.version is not None and body.version != session.version:
                return JSONResponse(
                    status_code=409,
                    content={"error": "version_conflict", "expected": session.version},
                )
            try:
                scores = session.state.apply(body.position, body.choice)
            except ValueError as exc:
                return JSONResponse(status_code=400, content={"error": "bad_choice", "message": str(exc)})
            session.version += 1
            session.audit.append({"position": body.position, "choice": body.choice})
        store.log_apply(session, body.position, body.choice)
        return {
            "session_id": session.id,
            "version": session.version,
            "scores": scores,
            "replacements": [
                {"position": r.position, "old": r.old, "new": r.new}
                for r in session.state.replacements()
            ],
        }

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "unknown_session"})
        return session.payload()

    @app.get("/v1/sessions/{session_id}/export")
    def export_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "unknown_session"})
        return Response(content=session.export_text(), media_type="text/plain; charset=utf-8")

    @app.get("/v1/meta")
    def meta():
        return {
            "topics": list(pipeline.topics),
            "ideologies": list(pipeline.model.vocab.options("ideology")),
            "vocab_size": len(pipeline.model.vocab),
            "dims": pipeline.model.dims,
        }

    return app
