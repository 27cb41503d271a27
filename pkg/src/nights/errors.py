"""Exception hierarchy shared by the engine, HTTP service, and CLI."""

from __future__ import annotations


class GameError(Exception):
    """Base class for every error the engine can surface."""


class WrongPhaseError(GameError):
    """Operation not legal in the session's current phase."""


class BusyError(GameError):
    """Another operation on the same session is already in flight."""


class EmptyTextError(GameError):
    """Player submitted an empty (after trimming) story turn."""


class ValidationError(GameError):
    """Input failed a structural check (length caps, bad persona, ...)."""


class IllegalTransitionError(GameError):
    def __init__(self, phase: str, event: str):
        super().__init__(f"event {event!r} is not legal in phase {phase!r}")
        self.phase = phase
        self.event = event


class BackendError(GameError):
    """Generation backend failed after retries.

    ``kind`` is one of: transport, timeout, http_status, quota, protocol,
    script_exhausted.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class ContractError(GameError):
    """Backend output did not satisfy the expected JSON contract."""


class StorageError(GameError):
    """Session or storybook persistence failed."""


class CapacityError(GameError):
    """Session already holds the maximum number of weapon cards."""


class UnknownCardError(GameError):
    """Referenced card id is not held by the session."""


class AlreadyPlayedError(GameError):
    """Card was already played this battle."""


class SessionNotFoundError(GameError):
    """No persisted session with the given id."""
