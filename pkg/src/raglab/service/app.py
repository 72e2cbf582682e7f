"""HTTP API for the chat service.

All error responses share one JSON shape: ``{"code", "message",
"detail"}``. Session history is displayed to the user but never fed back
into the generation prompt; each ask is answered from retrieval alone.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..engine import QAEngine
from ..providers.base import ProviderError
from .store import Message, Session, SessionStore, UnknownSession

MAX_K = 100


class ApiError(Exception):
    """Error with a wire-format code and HTTP status."""

    def __init__(self, status: int, code: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail or {}


class CreateSessionBody(BaseModel):
    title: str = ""


class AskBody(BaseModel):
    question: str
    k: int | None = None


class SearchBody(BaseModel):
    query: str
    k: int = 5


def _session_json(session: Session, message_count: int) -> dict:
    return {
        "id": session.id,
        "title": session.title,
        "created_at": session.created_at,
        "message_count": message_count,
    }


def _message_json(msg: Message) -> dict:
    return {
        "id": msg.id,
        "role": msg.role,
        "text": msg.text,
        "ts": msg.ts,
        "error": msg.error,
        "citations": list(msg.citations),
    }


def _check_k(k: int | None) -> None:
    if k is not None and not 0 <= k <= MAX_K:
        raise ApiError(400, "invalid_k", f"k must be between 0 and {MAX_K}")


def create_app(
    engine: QAEngine,
    store: SessionStore,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="raglab", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"code": "unknown_session", "message": str(exc), "detail": {}},
        )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "chunks": len(engine.chunks)}

    @app.get("/api/sessions")
    def list_sessions() -> list[dict]:
        return [
            _session_json(s, store.message_count(s.id))
            for s in store.list_sessions()
        ]

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        session = store.create_session(body.title)
        return _session_json(session, 0)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        session = store.get_session(session_id)
        messages = store.messages(session_id)
        return {
            "session": _session_json(session, len(messages)),
            "messages": [_message_json(m) for m in messages],
        }

    @app.delete("/api/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        store.get_session(session_id)
        store.delete_session(session_id)

    @app.post("/api/sessions/{session_id}/ask")
    def ask(session_id: str, body: AskBody) -> dict:
        question = body.question.strip()
        if not question:
            raise ApiError(400, "empty_question", "question must be non-empty")
        _check_k(body.k)
        store.get_session(session_id)
        # The lock spans both appends plus generation, so readers never
        # observe a user message without its assistant reply.
        with store.session_lock(session_id):
            user_msg = store.append_message(session_id, "user", question)
            try:
                grounded = engine.ask(question, k=body.k)
            except ProviderError as exc:
                assistant_msg = store.append_message(
                    session_id,
                    "assistant",
                    f"O provedor de modelo falhou: {exc}",
                    error=True,
                )
                raise ApiError(
                    502,
                    "provider_error",
                    "model provider call failed",
                    detail={
                        "reason": str(exc),
                        "user_message_id": user_msg.id,
                        "assistant_message_id": assistant_msg.id,
                    },
                )
            citations = tuple(
                {
                    "chunk_id": c.chunk_id,
                    "title": c.title,
                    "date": c.date,
                    "score": c.score,
                    "text": c.text,
                }
                for c in grounded.citations
            )
            assistant_msg = store.append_message(
                session_id, "assistant", grounded.answer, citations=citations
            )
        return {
            "user_message": _message_json(user_msg),
            "assistant_message": _message_json(assistant_msg),
        }

    @app.post("/api/search")
    def search(body: SearchBody) -> dict:
        query = body.query.strip()
        if not query:
            raise ApiError(400, "empty_query", "query must be non-empty")
        if not 1 <= body.k <= MAX_K:
            raise ApiError(400, "invalid_k", f"k must be between 1 and {MAX_K}")
        return {"results": engine.search(query, body.k)}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
