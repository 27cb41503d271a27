"""Environment-driven configuration and engine wiring."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends import RemoteBackend, ScriptedBackend, placeholder_backend
from .clock import FixedClock, SystemClock
from .engine import GameEngine
from .errors import ValidationError
from .forge import default_lexicon, load_lexicon
from .king import PersonaConfig
from .store import FileSessionStore

BACKEND_KINDS = ("remote", "scripted", "placeholder")


@dataclass
class AppConfig:
    backend_kind: str = "placeholder"
    chat_base_url: str = ""
    chat_model: str = ""
    chat_api_key: str = ""
    image_base_url: str = ""
    data_dir: str = "data"
    seed: int | None = None
    script_path: str | None = None
    strict_script: bool = False
    lexicon_path: str | None = None
    port: int = 8023
    anger_limit: int = 3
    fixed_clock: bool = False
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    ui_dir: str | None = None

    @classmethod
    def from_env(cls, env=None) -> "AppConfig":
        env = env if env is not None else os.environ
        cfg = cls(
            backend_kind=env.get("BACKEND_KIND", "placeholder"),
            chat_base_url=env.get("CHAT_BASE_URL", ""),
            chat_model=env.get("CHAT_MODEL", ""),
            chat_api_key=env.get("CHAT_API_KEY", ""),
            image_base_url=env.get("IMAGE_BASE_URL", ""),
            data_dir=env.get("DATA_DIR", "data"),
            seed=int(env["SEED"]) if env.get("SEED") else None,
            script_path=env.get("SCRIPT_PATH"),
            strict_script=env.get("STRICT_SCRIPT", "") == "1",
            lexicon_path=env.get("LEXICON_PATH"),
            port=int(env.get("PORT", "8023")),
            anger_limit=int(env.get("ANGER_LIMIT", "3")),
            fixed_clock=env.get("FIXED_CLOCK", "") == "1",
            ui_dir=env.get("UI_DIR"),
        )
        origins = env.get("CORS_ORIGINS")
        if origins:
            cfg.cors_origins = [o.strip() for o in origins.split(",") if o.strip()]
        return cfg

    def validate(self) -> None:
        if self.backend_kind not in BACKEND_KINDS:
            raise ValidationError(f"BACKEND_KIND must be one of {BACKEND_KINDS}")
        if self.backend_kind == "remote" and not self.chat_base_url:
            raise ValidationError("remote backend requires CHAT_BASE_URL")


def load_script(path: str) -> list[str]:
    """A script file is a JSON array of canned backend replies."""
    with open(path, encoding="utf-8") as f:
        steps = json.load(f)
    if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
        raise ValidationError("script file must be a JSON array of strings")
    if not steps:
        raise ValidationError("script file must not be empty")
    return steps


def build_engine(config: AppConfig) -> GameEngine:
    """Wire a GameEngine from configuration.

    Remote backends are shared across sessions; scripted and placeholder
    backends keep per-session state (script cursor, fallback counter) and are
    instantiated per session, keyed by session id.
    """
    config.validate()
    clock = FixedClock() if config.fixed_clock else SystemClock()
    data_dir = Path(config.data_dir)
    lexicon = load_lexicon(config.lexicon_path) if config.lexicon_path else default_lexicon()
    persona = PersonaConfig(anger_limit=config.anger_limit)

    if config.backend_kind == "remote":
        shared = RemoteBackend(
            chat_base_url=config.chat_base_url,
            chat_model=config.chat_model,
            api_key=config.chat_api_key,
            image_base_url=config.image_base_url,
            data_dir=data_dir,
            clock=clock,
        )

        def provider(session):
            return shared

    elif config.backend_kind == "scripted":
        if not config.script_path:
            raise ValidationError("scripted backend requires SCRIPT_PATH")
        script = load_script(config.script_path)
        cache: dict[str, ScriptedBackend] = {}

        def provider(session):
            backend = cache.get(session.id)
            if backend is None:
                backend = ScriptedBackend(
                    script,
                    strict=config.strict_script,
                    seed=session.seed,
                    data_dir=data_dir,
                    clock=clock,
                )
                cache[session.id] = backend
            return backend

    else:
        cache = {}

        def provider(session):
            backend = cache.get(session.id)
            if backend is None:
                backend = placeholder_backend(seed=session.seed, data_dir=data_dir, clock=clock)
                cache[session.id] = backend
            return backend

    return GameEngine(
        FileSessionStore(data_dir),
        provider,
        data_dir=data_dir,
        clock=clock,
        lexicon=lexicon,
        default_persona=persona,
    )
