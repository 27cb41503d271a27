"""Per-session game state: phases, the turn log, and the transition table.

A GameSession is the single authoritative record of one playthrough. All
mutation goes through engine operations; this module owns the data model,
the phase transition rules, serialization (schema v1), and an invariant
checker the property tests lean on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .backends import SceneImageRef
from .battle import BattleOutcome, BattleState
from .errors import IllegalTransitionError
from .forge import WeaponCard
from .king import KingVerdict, PersonaConfig

SCHEMA_VERSION = 1
TURN_TEXT_LIMIT = 2000
INITIAL_MOOD = 50


class PhaseName(str, Enum):
    STORYTELLING = "storytelling"
    BATTLE = "battle"
    ENDING = "ending"
    CLOSED = "closed"


class Outcome(str, Enum):
    VICTORY = "victory"
    DAWN = "dawn"
    ABANDONED = "abandoned"


class Author(str, Enum):
    PLAYER = "player"
    KING = "king"


class PhaseEvent(str, Enum):
    FOURTH_WEAPON = "fourth_weapon"
    ALL_CARDS_PLAYED = "all_cards_played"
    ANGER_LIMIT = "anger_limit"
    BATTLE_WON = "battle_won"
    BATTLE_LOST = "battle_lost"
    ABANDON = "abandon"


_TRANSITIONS: dict[tuple[PhaseName, PhaseEvent], tuple[PhaseName, Outcome | None]] = {
    (PhaseName.STORYTELLING, PhaseEvent.FOURTH_WEAPON): (PhaseName.BATTLE, None),
    (PhaseName.STORYTELLING, PhaseEvent.ANGER_LIMIT): (PhaseName.CLOSED, Outcome.DAWN),
    (PhaseName.BATTLE, PhaseEvent.ALL_CARDS_PLAYED): (PhaseName.ENDING, None),
    (PhaseName.ENDING, PhaseEvent.BATTLE_WON): (PhaseName.CLOSED, Outcome.VICTORY),
    (PhaseName.ENDING, PhaseEvent.BATTLE_LOST): (PhaseName.CLOSED, Outcome.DAWN),
}

_TERMINAL_OUTCOMES: dict[PhaseEvent, Outcome] = {
    PhaseEvent.ANGER_LIMIT: Outcome.DAWN,
    PhaseEvent.BATTLE_WON: Outcome.VICTORY,
    PhaseEvent.BATTLE_LOST: Outcome.DAWN,
    PhaseEvent.ABANDON: Outcome.ABANDONED,
}


@dataclass
class StoryTurn:
    index: int
    author: Author
    text: str
    verdict: KingVerdict | None = None
    rejected: bool = False
    materialized_card: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "author": self.author.value,
            "text": self.text,
            "verdict": self.verdict.to_wire() if self.verdict else None,
            "rejected": self.rejected,
            "materialized_card": self.materialized_card,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StoryTurn":
        verdict = doc.get("verdict")
        return cls(
            index=doc["index"],
            author=Author(doc["author"]),
            text=doc["text"],
            verdict=KingVerdict.from_dict(verdict) if verdict else None,
            rejected=doc.get("rejected", False),
            materialized_card=doc.get("materialized_card"),
        )


@dataclass
class EndingChronicle:
    actions: list[str]
    downfall: str
    title: str
    narration: str

    def to_dict(self) -> dict:
        return {
            "actions": list(self.actions),
            "downfall": self.downfall,
            "title": self.title,
            "narration": self.narration,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EndingChronicle":
        return cls(
            actions=list(doc["actions"]),
            downfall=doc["downfall"],
            title=doc["title"],
            narration=doc["narration"],
        )


@dataclass
class GameSession:
    id: str
    seed: int
    phase: PhaseName = PhaseName.STORYTELLING
    outcome: Outcome | None = None
    turns: list[StoryTurn] = field(default_factory=list)
    mood: int = INITIAL_MOOD
    anger_count: int = 0
    weapons: list[WeaponCard] = field(default_factory=list)
    background: SceneImageRef | None = None
    battle: BattleState | None = None
    ending: EndingChronicle | None = None
    persona: PersonaConfig = field(default_factory=PersonaConfig)
    revision: int = 0
    created_at: str = ""
    updated_at: str = ""

    def to_doc(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "id": self.id,
            "seed": self.seed,
            "phase": self.phase.value,
            "outcome": self.outcome.value if self.outcome else None,
            "turns": [t.to_dict() for t in self.turns],
            "mood": self.mood,
            "anger_count": self.anger_count,
            "weapons": [w.to_dict() for w in self.weapons],
            "background": self.background.to_dict() if self.background else None,
            "battle": self.battle.to_dict() if self.battle else None,
            "ending": self.ending.to_dict() if self.ending else None,
            "persona": self.persona.to_dict(),
            "revision": self.revision,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GameSession":
        if doc.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported session schema {doc.get('schema')!r}")
        return cls(
            id=doc["id"],
            seed=doc["seed"],
            phase=PhaseName(doc["phase"]),
            outcome=Outcome(doc["outcome"]) if doc.get("outcome") else None,
            turns=[StoryTurn.from_dict(t) for t in doc["turns"]],
            mood=doc["mood"],
            anger_count=doc["anger_count"],
            weapons=[WeaponCard.from_dict(w) for w in doc["weapons"]],
            background=SceneImageRef.from_dict(doc["background"]) if doc.get("background") else None,
            battle=BattleState.from_dict(doc["battle"]) if doc.get("battle") else None,
            ending=EndingChronicle.from_dict(doc["ending"]) if doc.get("ending") else None,
            persona=PersonaConfig.from_dict(doc["persona"]),
            revision=doc["revision"],
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
        )

    def clone(self) -> "GameSession":
        """Deep copy via the serialization round-trip (rollback working copy)."""
        return GameSession.from_doc(self.to_doc())

    def story_record(self) -> str:
        """The accepted tale so far, for card and ending prompts."""
        from .king import STORYTELLER_NAME

        lines = []
        for turn in self.turns:
            if turn.rejected:
                continue
            speaker = "The King" if turn.author == Author.KING else STORYTELLER_NAME
            lines.append(f"{speaker}: {turn.text}")
        return "\n".join(lines)


def _event_guard(session: GameSession, event: PhaseEvent) -> bool:
    """An event is only legal when the session state actually warrants it."""
    if event == PhaseEvent.FOURTH_WEAPON:
        return len(session.weapons) == 4
    if event == PhaseEvent.ALL_CARDS_PLAYED:
        return session.battle is not None and session.battle.round == 4
    if event == PhaseEvent.ANGER_LIMIT:
        return session.anger_count >= session.persona.anger_limit
    if event == PhaseEvent.BATTLE_WON:
        return session.battle is not None and session.battle.outcome == BattleOutcome.VICTORY
    if event == PhaseEvent.BATTLE_LOST:
        return session.battle is not None and session.battle.outcome == BattleOutcome.DEFEAT
    return True  # ABANDON is always available outside Closed


def advance_phase(session: GameSession, event: PhaseEvent) -> PhaseName:
    """Apply a phase event; repeated identical terminal events are no-ops."""
    if session.phase == PhaseName.CLOSED:
        expected = _TERMINAL_OUTCOMES.get(event)
        if expected is not None and session.outcome == expected and _event_guard(session, event):
            return session.phase
        raise IllegalTransitionError(session.phase.value, event.value)
    if not _event_guard(session, event):
        raise IllegalTransitionError(session.phase.value, event.value)
    if event == PhaseEvent.ABANDON:
        session.phase = PhaseName.CLOSED
        session.outcome = Outcome.ABANDONED
        return session.phase
    target = _TRANSITIONS.get((session.phase, event))
    if target is None:
        raise IllegalTransitionError(session.phase.value, event.value)
    session.phase, session.outcome = target
    return session.phase


class InvariantViolation(AssertionError):
    pass


def verify_session(session: GameSession, lexicon=None) -> None:
    """Raise InvariantViolation if any GameSession invariant is broken."""

    def check(condition: bool, message: str) -> None:
        if not condition:
            raise InvariantViolation(message)

    check(0 <= session.mood <= 100, f"mood {session.mood} out of [0, 100]")
    check(session.anger_count >= 0, "anger_count negative")
    check(len(session.weapons) <= 4, "more than four weapons")
    check((session.outcome is not None) == (session.phase == PhaseName.CLOSED),
          "outcome present iff phase is closed")
    if session.phase == PhaseName.BATTLE:
        check(len(session.weapons) == 4, "battle phase without four weapons")
    if session.battle is not None:
        check(session.phase in (PhaseName.BATTLE, PhaseName.ENDING, PhaseName.CLOSED),
              "battle state present outside battle/ending/closed")
    if session.phase == PhaseName.ENDING:
        check(session.battle is not None and session.battle.outcome is not None,
              "ending phase without a resolved battle")
        check(session.ending is not None, "ending phase without an ending")
    if session.ending is not None:
        check(session.phase in (PhaseName.ENDING, PhaseName.CLOSED), "ending present too early")
        check(session.battle is not None, "ending present without battle")
        check(len(session.ending.actions) == 4, "ending must carry four actions")
    if session.phase == PhaseName.CLOSED and session.outcome == Outcome.VICTORY:
        check(session.battle is not None and session.battle.outcome == BattleOutcome.VICTORY,
              "closed victory without a won battle")

    materialized_ids = []
    for i, turn in enumerate(session.turns):
        expected_author = Author.PLAYER if i % 2 == 0 else Author.KING
        check(turn.index == i, f"turn {i} has index {turn.index}")
        check(turn.author == expected_author, f"turn {i} breaks player/king alternation")
        check(1 <= len(turn.text) <= TURN_TEXT_LIMIT, f"turn {i} text length out of bounds")
        if turn.rejected:
            check(turn.author == Author.PLAYER, f"turn {i} rejected but not a player turn")
        if turn.verdict is not None:
            check(turn.author == Author.PLAYER, f"turn {i} has a verdict but is not a player turn")
        if turn.materialized_card is not None:
            check(turn.author == Author.KING, f"turn {i} materialized a card but is not a king turn")
            materialized_ids.append(turn.materialized_card)
    card_ids = [w.id for w in session.weapons]
    check(materialized_ids == card_ids, "materialized card ids do not mirror held weapons")

    for card in session.weapons:
        check(10 <= card.power <= 40, f"card {card.name!r} power {card.power} out of [10, 40]")
        check(bool(card.name) and bool(card.description), "card name/description must be non-empty")
        haystack = card.source_excerpt.lower()
        terms_hit = any(term in haystack for term in _category_terms(card.category, lexicon))
        check(terms_hit, f"card source excerpt lacks a {card.category} term")

    if session.battle is not None:
        b = session.battle
        check(b.round == len(b.plays), "battle round != plays length")
        check((b.outcome is not None) == (b.round == 4), "battle outcome present iff round is 4")
        total = sum(p.damage for p in b.plays)
        check(b.king_hp == max(0, 100 - total), "king_hp does not match damage sum")
        played = [p.card_id for p in b.plays]
        check(len(played) == len(set(played)), "a card was played twice")
        held = {w.id: w for w in session.weapons}
        for play in b.plays:
            check(play.card_id in held, "play references a card the session does not hold")
            check(play.damage == held[play.card_id].power, "play damage != card power")


def _category_terms(category: str, lexicon=None) -> tuple[str, ...]:
    from .forge import default_lexicon

    for cat in (lexicon or default_lexicon()).categories:
        if cat.id == category:
            return cat.terms()
    return (category,)
