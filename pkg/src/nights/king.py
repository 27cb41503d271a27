"""The King's persona, verdict contract, prompt assembly, and mood dynamics.

Every player turn is judged by the King: he continues tales he likes, demands
a rephrase when the telling is muddled, and grows angry at nonsense or modern
words. His reply is a single JSON object; ``parse_verdict`` is total over
arbitrary strings and either yields a valid verdict or raises ContractError
for the repair retry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ContractError, ValidationError
from .util import clamp, extract_json_objects

MOOD_MIN = 0
MOOD_MAX = 100
MOOD_DELTA_MIN = -20
MOOD_DELTA_MAX = 10
# When an angry verdict arrives without a usable negative delta, this keeps
# the "angry implies the mood drops" invariant honest.
DEFAULT_ANGRY_DELTA = -10

TRANSCRIPT_BUDGET = 6000
SYNOPSIS_PREFIX = "Earlier in the tale:"

STORYTELLER_NAME = "Shahrzad"


class VerdictKind(str, Enum):
    CONTINUE = "continue"
    REPHRASE = "rephrase"
    ANGRY_CORRECT = "angry"


_KIND_ALIASES = {
    "continue": VerdictKind.CONTINUE,
    "continued": VerdictKind.CONTINUE,
    "rephrase": VerdictKind.REPHRASE,
    "angry": VerdictKind.ANGRY_CORRECT,
    "angrycorrect": VerdictKind.ANGRY_CORRECT,
    "angry_correct": VerdictKind.ANGRY_CORRECT,
    "angry-correct": VerdictKind.ANGRY_CORRECT,
}


@dataclass
class PersonaConfig:
    name: str = "Shahryar"
    traits: list[str] = field(default_factory=lambda: ["arrogant", "greedy"])
    likes: list[str] = field(default_factory=lambda: ["battles", "treasures"])
    rejects: list[str] = field(default_factory=lambda: ["modern technology", "nonsense text"])
    anger_limit: int = 3
    style_note: str = "Speak with imperious, archaic grandeur; never break character."

    def validate(self) -> None:
        for label, values in (("traits", self.traits), ("likes", self.likes), ("rejects", self.rejects)):
            if not values:
                raise ValidationError(f"persona {label} must be non-empty")
        if self.anger_limit < 1:
            raise ValidationError("anger_limit must be >= 1")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "traits": list(self.traits),
            "likes": list(self.likes),
            "rejects": list(self.rejects),
            "anger_limit": self.anger_limit,
            "style_note": self.style_note,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PersonaConfig":
        persona = cls(
            name=doc.get("name", "Shahryar"),
            traits=list(doc.get("traits", ["arrogant", "greedy"])),
            likes=list(doc.get("likes", ["battles", "treasures"])),
            rejects=list(doc.get("rejects", ["modern technology", "nonsense text"])),
            anger_limit=doc.get("anger_limit", 3),
            style_note=doc.get("style_note", cls.style_note),
        )
        persona.validate()
        return persona


@dataclass
class KingVerdict:
    kind: VerdictKind
    comment: str
    continuation: str | None = None
    mood_delta: int = 0

    def validate(self) -> None:
        has_continuation = bool(self.continuation)
        if (self.kind == VerdictKind.CONTINUE) != has_continuation:
            raise ValidationError("continuation present iff kind is continue")
        if self.kind == VerdictKind.ANGRY_CORRECT and self.mood_delta >= 0:
            raise ValidationError("angry verdicts must carry a negative mood_delta")
        if not MOOD_DELTA_MIN <= self.mood_delta <= MOOD_DELTA_MAX:
            raise ValidationError("mood_delta out of range")

    def to_wire(self) -> dict:
        doc = {"kind": self.kind.value, "comment": self.comment, "mood_delta": self.mood_delta}
        if self.continuation is not None:
            doc["continuation"] = self.continuation
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "KingVerdict":
        return cls(
            kind=VerdictKind(doc["kind"]),
            comment=doc["comment"],
            continuation=doc.get("continuation"),
            mood_delta=doc["mood_delta"],
        )


def _normalize_kind(value: object) -> VerdictKind | None:
    if not isinstance(value, str):
        return None
    return _KIND_ALIASES.get(value.strip().lower())


def _coerce_delta(value: object) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            return None
    return None


def parse_verdict(raw: str) -> KingVerdict:
    """Parse the King's reply into a valid KingVerdict.

    Scans for the first JSON object with a recognizable ``kind`` (markdown
    fences and surrounding prose are tolerated), normalizes the kind
    case-insensitively, clamps mood_delta into [-20, +10], and repairs an
    angry verdict's delta to a default negative value if needed. Total: any
    input either yields a valid verdict or raises ContractError.
    """
    for obj in extract_json_objects(raw):
        kind = _normalize_kind(obj.get("kind"))
        if kind is None:
            continue
        comment = obj.get("comment")
        comment = comment if isinstance(comment, str) else ""
        continuation = obj.get("continuation")
        if kind == VerdictKind.CONTINUE:
            if not isinstance(continuation, str) or not continuation.strip():
                raise ContractError("kind is 'continue' but 'continuation' is missing or empty")
        else:
            continuation = None
        delta = _coerce_delta(obj.get("mood_delta"))
        if delta is None:
            delta = DEFAULT_ANGRY_DELTA if kind == VerdictKind.ANGRY_CORRECT else 0
        delta = clamp(delta, MOOD_DELTA_MIN, MOOD_DELTA_MAX)
        if kind == VerdictKind.ANGRY_CORRECT and delta >= 0:
            delta = DEFAULT_ANGRY_DELTA
        verdict = KingVerdict(kind=kind, comment=comment, continuation=continuation, mood_delta=delta)
        verdict.validate()
        return verdict
    raise ContractError("no JSON object with a recognizable 'kind' field")


def apply_mood(session_mood: int, verdict: KingVerdict) -> int:
    """New mood after a verdict, clamped into [0, 100]."""
    return clamp(session_mood + verdict.mood_delta, MOOD_MIN, MOOD_MAX)


@dataclass(frozen=True)
class PromptBundle:
    system: str
    transcript: str
    user_text: str

    def user_content(self) -> str:
        parts = []
        if self.transcript:
            parts.append(self.transcript)
        parts.append(f"{STORYTELLER_NAME} offers the next passage of the tale:\n{self.user_text}")
        parts.append("Judge it and reply with your JSON verdict.")
        return "\n\n".join(parts)


def _persona_system_text(persona: PersonaConfig) -> str:
    return (
        f"You are {persona.name}, an ancient King listening to {STORYTELLER_NAME}'s tale "
        f"through the night. You are {', '.join(persona.traits)}. "
        f"Tales of {', '.join(persona.likes)} delight you. "
        f"You refuse {', '.join(persona.rejects)}: such things are nonsense to your ears. "
        f"{persona.style_note}\n"
        "Judge the storyteller's newest passage against the tale so far and your own taste, "
        "then answer with a single JSON object and nothing else, with fields:\n"
        '  "kind": "continue" when the passage flows logically and pleases you, '
        '"rephrase" when it is muddled and must be told again, '
        '"angry" only when it clearly contradicts the tale, reads as random text, or leans on modern terms\n'
        '  "comment": your spoken reaction, in character\n'
        '  "continuation": when kind is "continue", your own next passage of the tale (omit it otherwise)\n'
        '  "mood_delta": integer from -20 to 10, how the passage moved your disposition'
    )


def _format_turn(author: str, text: str, rejected: bool) -> str:
    if author == "player":
        label = f"{STORYTELLER_NAME} (struck from the tale)" if rejected else STORYTELLER_NAME
    else:
        label = "The King"
    return f"{label}: {text}"


def build_evaluation_prompt(
    persona: PersonaConfig,
    story_so_far,
    player_text: str,
    *,
    transcript_budget: int = TRANSCRIPT_BUDGET,
) -> PromptBundle:
    """Deterministic prompt bundle for one evaluation round-trip.

    The transcript keeps the most recent turns that fit the character budget;
    anything older collapses into a single synopsis line so the King never
    loses the thread entirely.
    """
    if not player_text:
        raise ValidationError("player text must be non-empty")
    lines = [
        _format_turn(t.author.value if hasattr(t.author, "value") else t.author, t.text, t.rejected)
        for t in story_so_far
    ]
    synopsis_reserve = 120
    kept: list[str] = []
    used = 0
    for index in range(len(lines) - 1, -1, -1):
        line = lines[index]
        cost = len(line) + (1 if kept else 0)
        # Reserve room for the synopsis line unless everything fits.
        budget = transcript_budget if index == 0 else transcript_budget - synopsis_reserve
        if used + cost > budget:
            break
        kept.insert(0, line)
        used += cost
    omitted = len(lines) - len(kept)
    if omitted > 0:
        synopsis = f"{SYNOPSIS_PREFIX} {omitted} earlier passages passed between {STORYTELLER_NAME} and the King."
        kept.insert(0, synopsis)
    transcript = "\n".join(kept)
    if len(transcript) > transcript_budget:
        transcript = transcript[:transcript_budget]
    return PromptBundle(system=_persona_system_text(persona), transcript=transcript, user_text=player_text)
