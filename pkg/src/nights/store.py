"""Session persistence: one canonical JSON document per session."""

from __future__ import annotations

import os
from pathlib import Path

from .errors import SessionNotFoundError, StorageError


class MemorySessionStore:
    """In-memory store holding serialized documents (tests, property suites)."""

    def __init__(self):
        self._docs: dict[str, str] = {}

    def save_doc(self, session_id: str, text: str) -> None:
        self._docs[session_id] = text

    def load_doc(self, session_id: str) -> str:
        try:
            return self._docs[session_id]
        except KeyError:
            raise SessionNotFoundError(session_id) from None

    def exists(self, session_id: str) -> bool:
        return session_id in self._docs

    def list_ids(self) -> list[str]:
        return sorted(self._docs)


class FileSessionStore:
    """One file per session at <data_dir>/sessions/<id>.json, written atomically."""

    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir) / "sessions"

    def _path(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.json"

    def save_doc(self, session_id: str, text: str) -> None:
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
            tmp = self._path(session_id).with_suffix(".json.tmp")
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, self._path(session_id))
        except OSError as err:
            raise StorageError(f"failed to persist session {session_id}: {err}") from err

    def load_doc(self, session_id: str) -> str:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFoundError(session_id)
        try:
            return path.read_text(encoding="utf-8")
        except OSError as err:
            raise StorageError(f"failed to read session {session_id}: {err}") from err

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def list_ids(self) -> list[str]:
        if not self._dir.exists():
            return []
        return sorted(p.stem for p in self._dir.glob("*.json"))
