"""Injectable time source so golden-file tests can pin every timestamp."""

from __future__ import annotations

from datetime import datetime, timezone


class SystemClock:
    """Wall clock. Timestamps are UTC ISO-8601 with a Z suffix."""

    def now(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


class FixedClock:
    """Returns one constant instant forever; used for byte-exact replays."""

    def __init__(self, instant: str = "2024-01-01T00:00:00Z"):
        self.instant = instant

    def now(self) -> str:
        return self.instant
