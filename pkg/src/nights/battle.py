"""The four-card confrontation with the King.

Combat is a pure function of the authored cards: each play subtracts the
card's power from the King's 100 HP (floored at zero), and after the fourth
play the outcome is Victory exactly when HP reached zero. No generation calls
happen here; all drama text was pre-generated at forge time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .errors import AlreadyPlayedError, UnknownCardError, WrongPhaseError

if TYPE_CHECKING:
    from .session import GameSession

KING_STARTING_HP = 100
BATTLE_ROUNDS = 4


class BattleOutcome(str, Enum):
    VICTORY = "victory"
    DEFEAT = "defeat"


@dataclass
class BattlePlay:
    card_id: str
    damage: int
    player_line: str
    king_line: str
    effect_description: str
    king_hp_after: int

    def to_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "damage": self.damage,
            "player_line": self.player_line,
            "king_line": self.king_line,
            "effect_description": self.effect_description,
            "king_hp_after": self.king_hp_after,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BattlePlay":
        return cls(
            card_id=doc["card_id"],
            damage=doc["damage"],
            player_line=doc["player_line"],
            king_line=doc["king_line"],
            effect_description=doc["effect_description"],
            king_hp_after=doc["king_hp_after"],
        )


@dataclass
class BattleState:
    king_hp: int = KING_STARTING_HP
    round: int = 0
    plays: list[BattlePlay] = field(default_factory=list)
    outcome: BattleOutcome | None = None

    def to_dict(self) -> dict:
        return {
            "king_hp": self.king_hp,
            "round": self.round,
            "plays": [p.to_dict() for p in self.plays],
            "outcome": self.outcome.value if self.outcome else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BattleState":
        return cls(
            king_hp=doc["king_hp"],
            round=doc["round"],
            plays=[BattlePlay.from_dict(p) for p in doc["plays"]],
            outcome=BattleOutcome(doc["outcome"]) if doc.get("outcome") else None,
        )


def start_battle(session: "GameSession") -> BattleState:
    """Initialize the battle; legal once, only in the battle phase."""
    from .session import PhaseName

    if session.phase != PhaseName.BATTLE:
        raise WrongPhaseError(f"cannot start a battle in phase {session.phase.value!r}")
    if session.battle is not None:
        raise WrongPhaseError("battle already started")
    if len(session.weapons) != 4:
        raise WrongPhaseError("battle requires exactly four weapon cards")
    session.battle = BattleState()
    return session.battle


def play_card(session: "GameSession", card_id: str) -> BattlePlay:
    """Play one held, unplayed card; the fourth play resolves the battle."""
    from .session import PhaseEvent, PhaseName, advance_phase

    if session.phase != PhaseName.BATTLE or session.battle is None:
        raise WrongPhaseError("no battle in progress")
    state = session.battle
    if state.round >= BATTLE_ROUNDS:
        raise WrongPhaseError("battle already resolved")
    card = next((w for w in session.weapons if w.id == card_id), None)
    if card is None:
        raise UnknownCardError(f"card {card_id!r} is not held by this session")
    if any(p.card_id == card_id for p in state.plays):
        raise AlreadyPlayedError(f"card {card.name!r} was already played")

    hp_after = max(0, state.king_hp - card.power)
    play = BattlePlay(
        card_id=card.id,
        damage=card.power,
        player_line=card.player_line,
        king_line=card.king_line,
        effect_description=card.effect_description,
        king_hp_after=hp_after,
    )
    state.plays.append(play)
    state.round += 1
    state.king_hp = hp_after
    if state.round == BATTLE_ROUNDS:
        state.outcome = BattleOutcome.VICTORY if state.king_hp == 0 else BattleOutcome.DEFEAT
        advance_phase(session, PhaseEvent.ALL_CARDS_PLAYED)
    return play
