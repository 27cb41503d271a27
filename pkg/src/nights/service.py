"""HTTP JSON API v1 over the game engine.

Session event delivery is poll-based: the session view carries a
monotonically increasing ``revision`` so clients re-render only on change.
Every engine error maps to exactly one ApiError code and HTTP status.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .chronicle import Storybook
from .config import AppConfig, build_engine
from .engine import GameEngine
from .errors import (
    AlreadyPlayedError,
    BackendError,
    BusyError,
    CapacityError,
    ContractError,
    EmptyTextError,
    GameError,
    IllegalTransitionError,
    SessionNotFoundError,
    StorageError,
    UnknownCardError,
    ValidationError,
    WrongPhaseError,
)
from .session import GameSession

logger = logging.getLogger(__name__)

# (exception class, HTTP status, ApiError code, retryable); order matters,
# first match by isinstance wins.
ERROR_TABLE: list[tuple[type, int, str, bool]] = [
    (BusyError, 409, "busy", True),
    (WrongPhaseError, 409, "wrong_phase", False),
    (IllegalTransitionError, 409, "wrong_phase", False),
    (EmptyTextError, 400, "validation", False),
    (CapacityError, 400, "validation", False),
    (AlreadyPlayedError, 400, "validation", False),
    (ValidationError, 400, "validation", False),
    (SessionNotFoundError, 404, "not_found", False),
    (UnknownCardError, 404, "not_found", False),
    (ContractError, 502, "contract_error", False),
    (BackendError, 502, "backend_error", True),
    (StorageError, 500, "backend_error", True),
]


def map_error(err: GameError) -> tuple[int, dict]:
    for klass, status, code, retryable in ERROR_TABLE:
        if isinstance(err, klass):
            return status, {"code": code, "message": str(err), "retryable": retryable}
    return 500, {"code": "backend_error", "message": str(err), "retryable": False}


class CreateSessionBody(BaseModel):
    seed: int | None = None
    persona: dict | None = None


class TurnBody(BaseModel):
    text: str = Field(default="")


class PlayBody(BaseModel):
    card_id: str


def _image_url(ref) -> str | None:
    if ref is None:
        return None
    # path_or_url is data-dir relative ("images/<id>.png"); absolute URLs pass through.
    if ref.path_or_url.startswith(("http://", "https://")):
        return ref.path_or_url
    return "/" + ref.path_or_url.lstrip("/")


def card_view(card) -> dict:
    doc = card.to_dict()
    doc["artwork_url"] = _image_url(card.artwork)
    return doc


def session_view(session: GameSession) -> dict:
    return {
        "id": session.id,
        "seed": session.seed,
        "phase": session.phase.value,
        "outcome": session.outcome.value if session.outcome else None,
        "revision": session.revision,
        "mood": session.mood,
        "anger_count": session.anger_count,
        "anger_limit": session.persona.anger_limit,
        "turns": [t.to_dict() for t in session.turns],
        "cards": [card_view(w) for w in session.weapons],
        "background_url": _image_url(session.background),
        "battle": session.battle.to_dict() if session.battle else None,
        "ending": session.ending.to_dict() if session.ending else None,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }


def storybook_refs(book: Storybook) -> dict:
    return {
        "session_id": book.session_id,
        "outcome": book.outcome,
        "storybook_url": f"/v1/sessions/{book.session_id}/storybook",
        "storybook_markdown_url": f"/v1/sessions/{book.session_id}/storybook?format=md",
        "json_path": book.json_path,
        "markdown_path": book.markdown_path,
    }


def create_app(config: AppConfig | None = None, engine: GameEngine | None = None) -> FastAPI:
    config = config or AppConfig.from_env()
    engine = engine or build_engine(config)
    app = FastAPI(title="nights", version="1.0")
    app.state.engine = engine
    app.state.config = config

    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(GameError)
    async def game_error_handler(request: Request, err: GameError):
        status, body = map_error(err)
        return JSONResponse(status_code=status, content=body)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "backend": config.backend_kind}

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = engine.create_session(seed=body.seed, persona_overrides=body.persona)
        return session_view(session)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return session_view(engine.get_session(session_id))

    @app.post("/v1/sessions/{session_id}/turns")
    def submit_turn(session_id: str, body: TurnBody):
        outcome = engine.submit_player_turn(session_id, body.text)
        view = outcome.to_dict()
        if view["new_card"] is not None:
            view["new_card"] = card_view(outcome.new_card)
        return view

    @app.post("/v1/sessions/{session_id}/battle/plays")
    def play_card(session_id: str, body: PlayBody):
        play = engine.play_card(session_id, body.card_id)
        session = engine.get_session(session_id)
        doc = play.to_dict()
        doc["phase"] = session.phase.value
        doc["battle_outcome"] = (
            session.battle.outcome.value if session.battle and session.battle.outcome else None
        )
        return doc

    @app.post("/v1/sessions/{session_id}/close")
    def close_session(session_id: str):
        book = engine.close_session(session_id)
        return storybook_refs(book)

    @app.get("/v1/sessions/{session_id}/storybook")
    def get_storybook(session_id: str, format: str = "json"):
        book = engine.storybook(session_id)
        if format == "md":
            from .chronicle import render_markdown

            return PlainTextResponse(render_markdown(book), media_type="text/markdown")
        return JSONResponse(book.to_doc())

    @app.get("/images/{name}")
    def get_image(name: str):
        if "/" in name or ".." in name or not name.endswith(".png"):
            return JSONResponse(
                status_code=404,
                content={"code": "not_found", "message": "no such image", "retryable": False},
            )
        path = Path(config.data_dir) / "images" / name
        if not path.exists():
            return JSONResponse(
                status_code=404,
                content={"code": "not_found", "message": "no such image", "retryable": False},
            )
        return FileResponse(path, media_type="image/png")

    if config.ui_dir and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
