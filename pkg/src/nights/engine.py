"""The engine: serialized, transactional operations over game sessions.

Every operation loads the session, mutates a working copy, and commits it
only when the whole operation succeeded; backend or contract failures leave
the stored session byte-identical. One operation per session at a time:
concurrent submissions are rejected with BusyError, never queued.
"""

from __future__ import annotations

import json
import logging
import random
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import battle as battle_ops
from .backends import Backend, generate_with_repair, paint_scene
from .chronicle import Storybook, assemble_storybook, generate_ending
from .clock import SystemClock
from .errors import (
    BackendError,
    BusyError,
    EmptyTextError,
    ValidationError,
    WrongPhaseError,
)
from .forge import WeaponCard, default_lexicon, detect_keyword, forge_card
from .king import (
    KingVerdict,
    PersonaConfig,
    VerdictKind,
    apply_mood,
    build_evaluation_prompt,
    parse_verdict,
)
from .session import (
    TURN_TEXT_LIMIT,
    Author,
    GameSession,
    Outcome,
    PhaseEvent,
    PhaseName,
    StoryTurn,
    advance_phase,
)
from .util import canonical_json, derived_uuid, truncate

logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1

# Spoken when a rejecting verdict arrives with an empty comment; the turn log
# requires non-empty King text.
REPHRASE_STOCK_LINE = "Tell it again, storyteller, and tell it better."
ANGRY_STOCK_LINE = "Enough! You test the patience of a king."


@dataclass
class TurnOutcome:
    verdict: KingVerdict
    king_text: str
    new_card: WeaponCard | None
    phase: PhaseName
    outcome: Outcome | None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.to_wire(),
            "king_text": self.king_text,
            "new_card": self.new_card.to_dict() if self.new_card else None,
            "phase": self.phase.value,
            "outcome": self.outcome.value if self.outcome else None,
        }


class GameEngine:
    def __init__(
        self,
        store,
        backend_provider: Callable[[GameSession], Backend],
        *,
        data_dir: str | Path | None = None,
        clock=None,
        lexicon=None,
        default_persona: PersonaConfig | None = None,
        transcript_budget: int = 6000,
    ):
        self.store = store
        self.backend_provider = backend_provider
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.clock = clock or SystemClock()
        self.lexicon = lexicon or default_lexicon()
        self.default_persona = default_persona or PersonaConfig()
        self.transcript_budget = transcript_budget
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # ------------------------------------------------------------------
    # Session lifecycle
    # ------------------------------------------------------------------

    def create_session(self, seed: int | None = None, persona_overrides: dict | None = None) -> GameSession:
        if seed is None:
            seed = random.SystemRandom().randint(0, MAX_SEED)
        if not 0 <= seed <= MAX_SEED:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        persona_doc = self.default_persona.to_dict()
        if persona_overrides:
            persona_doc.update(persona_overrides)
        persona = PersonaConfig.from_dict(persona_doc)
        now = self.clock.now()
        session = GameSession(
            id=derived_uuid("session", seed),
            seed=seed,
            persona=persona,
            created_at=now,
            updated_at=now,
        )
        self._commit(session, bump=False)
        return session

    def get_session(self, session_id: str) -> GameSession:
        return GameSession.from_doc(json.loads(self.store.load_doc(session_id)))

    def list_sessions(self) -> list[str]:
        return self.store.list_ids()

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def submit_player_turn(self, session_id: str, text: str) -> TurnOutcome:
        with self._exclusive(session_id):
            base = self.get_session(session_id)
            if base.phase != PhaseName.STORYTELLING:
                raise WrongPhaseError(f"cannot submit a turn in phase {base.phase.value!r}")
            text = text.strip()
            if not text:
                raise EmptyTextError("player turn is empty")
            if len(text) > TURN_TEXT_LIMIT:
                raise ValidationError(f"player turn exceeds {TURN_TEXT_LIMIT} characters")

            work = base.clone()
            backend = self.backend_provider(work)
            bundle = build_evaluation_prompt(
                work.persona, work.turns, text, transcript_budget=self.transcript_budget
            )
            # BackendError/ContractError propagate here: nothing was committed.
            verdict = generate_with_repair(
                backend,
                system=bundle.system,
                user_text=bundle.user_content(),
                parse=parse_verdict,
                temperature=0.8,
                seed=work.seed,
            )

            player_turn = StoryTurn(
                index=len(work.turns), author=Author.PLAYER, text=text, verdict=verdict
            )
            work.mood = apply_mood(work.mood, verdict)
            new_card = None

            if verdict.kind == VerdictKind.CONTINUE:
                king_text = truncate(verdict.continuation.strip(), TURN_TEXT_LIMIT)
                king_turn = StoryTurn(index=len(work.turns) + 1, author=Author.KING, text=king_text)
                work.turns.extend([player_turn, king_turn])
                new_card = self._maybe_materialize(work, king_turn, backend)
            else:
                player_turn.rejected = True
                stock = ANGRY_STOCK_LINE if verdict.kind == VerdictKind.ANGRY_CORRECT else REPHRASE_STOCK_LINE
                king_text = truncate(verdict.comment.strip() or stock, TURN_TEXT_LIMIT)
                king_turn = StoryTurn(index=len(work.turns) + 1, author=Author.KING, text=king_text)
                work.turns.extend([player_turn, king_turn])
                if verdict.kind == VerdictKind.ANGRY_CORRECT:
                    work.anger_count += 1
                    if work.anger_count >= work.persona.anger_limit:
                        advance_phase(work, PhaseEvent.ANGER_LIMIT)

            self._commit(work)
            return TurnOutcome(
                verdict=verdict,
                king_text=king_turn.text,
                new_card=new_card,
                phase=work.phase,
                outcome=work.outcome,
            )

    def _maybe_materialize(self, work: GameSession, king_turn: StoryTurn, backend: Backend) -> WeaponCard | None:
        """Detect a weapon keyword in the King's text and forge its card.

        Card forging is best-effort; the scene repaint happens only when a
        card materialized, and its failure keeps the previous backdrop. The
        freshly painted backdrop is also attached to the new card.
        """
        hit = detect_keyword(king_turn.text, self.lexicon)
        if hit is None or len(work.weapons) >= 4:
            return None
        card = forge_card(work, hit, backend, work.story_record())
        if card is None:
            return None
        king_turn.materialized_card = card.id
        try:
            work.background = paint_scene(backend, king_turn.text, seed=work.seed)
        except BackendError as err:
            logger.warning("scene repaint failed, keeping previous backdrop: %s", err)
        if work.background is not None:
            card.artwork = work.background
        if len(work.weapons) == 4:
            advance_phase(work, PhaseEvent.FOURTH_WEAPON)
        return card

    def start_battle(self, session_id: str):
        with self._exclusive(session_id):
            work = self.get_session(session_id).clone()
            state = battle_ops.start_battle(work)
            self._commit(work)
            return state

    def play_card(self, session_id: str, card_id: str):
        with self._exclusive(session_id):
            work = self.get_session(session_id).clone()
            if work.phase == PhaseName.BATTLE and work.battle is None:
                battle_ops.start_battle(work)
            play = battle_ops.play_card(work, card_id)
            if work.phase == PhaseName.ENDING and work.ending is None:
                work.ending = generate_ending(work, self.backend_provider(work))
            self._commit(work)
            return play

    def advance(self, session_id: str, event: PhaseEvent) -> PhaseName:
        with self._exclusive(session_id):
            work = self.get_session(session_id).clone()
            phase = advance_phase(work, event)
            self._commit(work)
            return phase

    def close_session(self, session_id: str) -> Storybook:
        """Close the session (abandon if the tale is unfinished) and assemble
        its storybook. Idempotent once closed."""
        with self._exclusive(session_id):
            base = self.get_session(session_id)
            if base.phase == PhaseName.CLOSED:
                return assemble_storybook(base, self.data_dir, self.clock)
            work = base.clone()
            if work.phase == PhaseName.ENDING:
                assert work.battle is not None
                event = (
                    PhaseEvent.BATTLE_WON
                    if work.battle.outcome == battle_ops.BattleOutcome.VICTORY
                    else PhaseEvent.BATTLE_LOST
                )
                advance_phase(work, event)
            else:
                advance_phase(work, PhaseEvent.ABANDON)
            self._commit(work)
            return assemble_storybook(work, self.data_dir, self.clock)

    def storybook(self, session_id: str) -> Storybook:
        session = self.get_session(session_id)
        if session.phase != PhaseName.CLOSED:
            raise WrongPhaseError("storybook is available once the session is closed")
        return assemble_storybook(session, self.data_dir, self.clock)

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _commit(self, session: GameSession, *, bump: bool = True) -> None:
        if bump:
            session.revision += 1
            session.updated_at = self.clock.now()
        self.store.save_doc(session.id, canonical_json(session.to_doc()))

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = threading.Lock()
                self._locks[session_id] = lock
            return lock

    def _exclusive(self, session_id: str):
        return _SessionGuard(self._lock_for(session_id))


class _SessionGuard:
    def __init__(self, lock: threading.Lock):
        self._lock = lock

    def __enter__(self):
        if not self._lock.acquire(blocking=False):
            raise BusyError("another operation on this session is in flight")
        return self

    def __exit__(self, *exc_info):
        self._lock.release()
        return False
