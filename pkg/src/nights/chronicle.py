"""Bardic endings and the persistent storybook artifact.

The ending is generated at low temperature against a strict JSON contract;
if the backend cannot satisfy it even after the repair retry (or is down),
a deterministic template ending built from the battle log steps in, so a
session can always close. The storybook is the immutable end-of-session
record: canonical JSON plus a human-readable Markdown render.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from .backends import Backend, generate_with_repair
from .battle import BattleOutcome, BattleState
from .errors import BackendError, ContractError, StorageError, WrongPhaseError
from .forge import WeaponCard
from .king import STORYTELLER_NAME
from .session import (
    Author,
    EndingChronicle,
    GameSession,
    Outcome,
    PhaseEvent,
    PhaseName,
    StoryTurn,
    advance_phase,
)
from .util import canonical_json, extract_json_objects, truncate

logger = logging.getLogger(__name__)

STORYBOOK_SCHEMA_VERSION = 1
TITLE_LIMIT = 80
ENDING_ACTION_COUNT = 4

ENDING_SYSTEM_PROMPT = (
    "You are the court bard closing a long night of storytelling. Recount the duel "
    "in rich, rhythmic language. Reply with a single JSON object and nothing else, "
    'with fields: "actions" (array of exactly 4 strings, one vivid description per '
    "weapon the storyteller used, in the order they were played), "
    '"downfall" (a dramatic portrayal of how the King fell; if he survived, of how he stood at dawn), '
    '"title" (an honorific bestowed on the storyteller, at most 80 characters), '
    '"narration" (the full bardic ending, spoken as if to a hushed hall).'
)

_ENDING_FIELDS = ("actions", "downfall", "title", "narration")


def parse_ending_fields(raw: str) -> dict:
    """Extract and validate the ending JSON from a backend reply."""
    for obj in extract_json_objects(raw):
        if not any(key in obj for key in _ENDING_FIELDS):
            continue
        actions = obj.get("actions")
        if not isinstance(actions, list) or len(actions) != ENDING_ACTION_COUNT:
            raise ContractError("actions must have length 4")
        if not all(isinstance(a, str) and a.strip() for a in actions):
            raise ContractError("every action must be a non-empty string")
        fields = {"actions": [a.strip() for a in actions]}
        for key in ("downfall", "title", "narration"):
            value = obj.get(key)
            if not isinstance(value, str) or not value.strip():
                raise ContractError(f"'{key}' must be a non-empty string")
            fields[key] = value.strip()
        fields["title"] = truncate(fields["title"], TITLE_LIMIT)
        return fields
    raise ContractError("no JSON object with ending fields found")


def build_ending_prompt(session: GameSession) -> str:
    assert session.battle is not None
    held = {w.id: w for w in session.weapons}
    beats = []
    for i, play in enumerate(session.battle.plays, start=1):
        card = held[play.card_id]
        beats.append(
            f"{i}. {STORYTELLER_NAME} wielded {card.name} ({card.category}, power {play.damage}); "
            f"the King's strength fell to {play.king_hp_after}."
        )
    fate = (
        "the King was brought to nothing"
        if session.battle.outcome == BattleOutcome.VICTORY
        else f"the King still stood at {session.battle.king_hp} strength"
    )
    return (
        "The tale as told through the night:\n"
        f"{session.story_record()}\n\n"
        "The confrontation, blow by blow:\n" + "\n".join(beats) + "\n\n"
        f"When the fourth weapon had spoken, {fate}.\n"
        "Now sing the ending."
    )


_ORDINALS = ("first", "second", "third", "fourth")


def template_ending(session: GameSession) -> EndingChronicle:
    """Deterministic fallback ending assembled from the battle log."""
    assert session.battle is not None
    held = {w.id: w for w in session.weapons}
    actions = []
    for ordinal, play in zip(_ORDINALS, session.battle.plays):
        card = held[play.card_id]
        actions.append(
            f"With {card.name}, {STORYTELLER_NAME} struck the {ordinal} blow, "
            f"and the King's strength fell to {play.king_hp_after}."
        )
    if session.battle.outcome == BattleOutcome.VICTORY:
        downfall = (
            "The King's crown rang against the marble and rolled to the storyteller's feet; "
            "the last tale of the night was his own ending."
        )
        title = "Sovereign of the Spoken Blade"
    else:
        downfall = (
            "When the fourth weapon fell silent the King yet stood, wounded but unbowed, "
            "and dawn found him smiling his old, patient smile."
        )
        title = "The Teller Who Dared"
    narration = (
        f"Hear now how {STORYTELLER_NAME} spent the night forging weapons out of words. "
        + " ".join(actions)
        + " "
        + downfall
    )
    return EndingChronicle(actions=actions, downfall=downfall, title=title, narration=narration)


def generate_ending(session: GameSession, backend: Backend) -> EndingChronicle:
    """Generate the bardic ending; the template fallback guarantees success."""
    if session.phase != PhaseName.ENDING or session.battle is None or session.battle.outcome is None:
        raise WrongPhaseError("ending can only be generated after the battle resolves")
    try:
        fields = generate_with_repair(
            backend,
            system=ENDING_SYSTEM_PROMPT,
            user_text=build_ending_prompt(session),
            parse=parse_ending_fields,
            temperature=0.2,
            seed=session.seed,
        )
    except (ContractError, BackendError) as err:
        logger.warning("ending generation fell back to template: %s", err)
        return template_ending(session)
    return EndingChronicle(
        actions=fields["actions"],
        downfall=fields["downfall"],
        title=fields["title"],
        narration=fields["narration"],
    )


def outcome_label(session: GameSession) -> str:
    """Storybook outcome: victory, defeat (lost battle), dawn, or abandoned."""
    if session.battle is not None and session.battle.outcome == BattleOutcome.DEFEAT:
        return "defeat"
    return session.outcome.value if session.outcome else "dawn"


@dataclass
class Storybook:
    session_id: str
    seed: int
    created_at: str
    turns: list[StoryTurn]
    weapons: list[WeaponCard]
    battle: BattleState | None
    ending: EndingChronicle | None
    outcome: str
    json_path: str | None = None
    markdown_path: str | None = None

    def to_doc(self) -> dict:
        return {
            "schema": STORYBOOK_SCHEMA_VERSION,
            "session_id": self.session_id,
            "seed": self.seed,
            "created_at": self.created_at,
            "turns": [t.to_dict() for t in self.turns],
            "weapons": [w.to_dict() for w in self.weapons],
            "battle": self.battle.to_dict() if self.battle else None,
            "ending": self.ending.to_dict() if self.ending else None,
            "outcome": self.outcome,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Storybook":
        return cls(
            session_id=doc["session_id"],
            seed=doc["seed"],
            created_at=doc["created_at"],
            turns=[StoryTurn.from_dict(t) for t in doc["turns"]],
            weapons=[WeaponCard.from_dict(w) for w in doc["weapons"]],
            battle=BattleState.from_dict(doc["battle"]) if doc.get("battle") else None,
            ending=EndingChronicle.from_dict(doc["ending"]) if doc.get("ending") else None,
            outcome=doc["outcome"],
        )


def assemble_storybook(session: GameSession, data_dir: str | Path | None, clock) -> Storybook:
    """Build, persist, and return the storybook for a finished session.

    An Ending-phase session (with its ending present) is closed here first.
    Once written, the artifact is immutable: a second call returns the stored
    document untouched.
    """
    if session.phase == PhaseName.ENDING:
        assert session.battle is not None
        event = (
            PhaseEvent.BATTLE_WON
            if session.battle.outcome == BattleOutcome.VICTORY
            else PhaseEvent.BATTLE_LOST
        )
        advance_phase(session, event)
    elif session.phase != PhaseName.CLOSED:
        raise WrongPhaseError("storybook can only be assembled for a closed session")

    if data_dir is not None:
        book_dir = Path(data_dir) / "storybooks"
        json_path = book_dir / f"{session.id}.json"
        md_path = book_dir / f"{session.id}.md"
        if json_path.exists():
            import json as _json

            stored = Storybook.from_doc(_json.loads(json_path.read_text(encoding="utf-8")))
            stored.json_path = str(json_path)
            stored.markdown_path = str(md_path)
            return stored

    book = Storybook(
        session_id=session.id,
        seed=session.seed,
        created_at=clock.now(),
        turns=list(session.turns),
        weapons=list(session.weapons),
        battle=session.battle,
        ending=session.ending,
        outcome=outcome_label(session),
    )
    if data_dir is not None:
        try:
            book_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(json_path, canonical_json(book.to_doc()))
            _atomic_write(md_path, render_markdown(book))
        except OSError as err:
            raise StorageError(f"failed to persist storybook: {err}") from err
        book.json_path = str(json_path)
        book.markdown_path = str(md_path)
    return book


def _atomic_write(path: Path, content: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)


_OUTCOME_LINES = {
    "victory": "The King fell before the fourth weapon, and the storyteller walked free.",
    "defeat": "Four weapons spoke, yet the King endured; the telling was not enough.",
    "dawn": "The King's patience broke before the tale was done, and dawn came early.",
    "abandoned": "The tale was left unfinished, its teller gone from the hall.",
}


def render_markdown(book: Storybook) -> str:
    """Human-readable storybook; mirrors the JSON document exactly."""
    title = book.ending.title if book.ending else "An Unfinished Tale"
    lines = [f"# {title}", ""]
    lines.append(_OUTCOME_LINES.get(book.outcome, ""))
    lines.append("")
    lines.append(f"Session {book.session_id}, seed {book.seed}, recorded {book.created_at}.")
    lines.append("")

    lines.append("## The Night's Telling")
    lines.append("")
    for turn in book.turns:
        if turn.author == Author.PLAYER:
            if turn.rejected:
                lines.append(f"**{STORYTELLER_NAME}** *(struck from the tale)*: ~~{turn.text}~~")
            else:
                lines.append(f"**{STORYTELLER_NAME}:** {turn.text}")
            if turn.verdict is not None and turn.verdict.comment:
                lines.append(f"> *The King, aside:* {turn.verdict.comment}")
        else:
            lines.append(f"**The King:** {turn.text}")
        lines.append("")

    if book.weapons:
        lines.append("## The Arsenal")
        lines.append("")
        lines.append("| Name | Category | Power | Description |")
        lines.append("| --- | --- | --- | --- |")
        for card in book.weapons:
            lines.append(
                f"| {_cell(card.name)} | {_cell(card.category)} | {card.power} | {_cell(card.description)} |"
            )
        lines.append("")

    if book.battle is not None and book.battle.plays:
        held = {w.id: w for w in book.weapons}
        lines.append("## The Confrontation")
        lines.append("")
        for i, play in enumerate(book.battle.plays, start=1):
            name = held[play.card_id].name if play.card_id in held else play.card_id
            lines.append(f"**Round {i} — {name}** (strikes for {play.damage})")
            if play.player_line:
                lines.append(f"- {STORYTELLER_NAME}: {play.player_line}")
            if play.king_line:
                lines.append(f"- The King: {play.king_line}")
            if play.effect_description:
                lines.append(f"- {play.effect_description}")
            lines.append(f"- The King's strength stands at {play.king_hp_after}.")
            lines.append("")

    if book.ending is not None:
        lines.append("## The Bard's Ending")
        lines.append("")
        for i, action in enumerate(book.ending.actions, start=1):
            lines.append(f"{i}. {action}")
        lines.append("")
        lines.append(book.ending.downfall)
        lines.append("")
        lines.append(f"And the hall bestowed a title upon her: **{book.ending.title}**.")
        lines.append("")
        lines.append(book.ending.narration)
        lines.append("")

    return "\n".join(lines).rstrip() + "\n"


def _cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")
