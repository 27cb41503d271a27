"""1001 Nights: a co-creative story-crafting game engine.

The player trades story passages with a moody King; weapon words in his
replies materialize into cards, four cards trigger a battle, and every
finished session is preserved as a storybook.
"""

from .backends import (
    GenerationRequest,
    GenerationResult,
    RemoteBackend,
    SceneImageRef,
    ScriptedBackend,
    paint_scene,
    placeholder_backend,
)
from .battle import BattleOutcome, BattlePlay, BattleState, play_card, start_battle
from .chronicle import Storybook, assemble_storybook, generate_ending
from .clock import FixedClock, SystemClock
from .config import AppConfig, build_engine
from .engine import GameEngine, TurnOutcome
from .forge import (
    KeywordHit,
    WeaponCard,
    WeaponCategory,
    WeaponLexicon,
    default_lexicon,
    detect_keyword,
    forge_card,
)
from .king import (
    KingVerdict,
    PersonaConfig,
    PromptBundle,
    VerdictKind,
    apply_mood,
    build_evaluation_prompt,
    parse_verdict,
)
from .session import (
    Author,
    EndingChronicle,
    GameSession,
    Outcome,
    PhaseEvent,
    PhaseName,
    StoryTurn,
    advance_phase,
    verify_session,
)
from .store import FileSessionStore, MemorySessionStore

__all__ = [
    "AppConfig",
    "Author",
    "BattleOutcome",
    "BattlePlay",
    "BattleState",
    "EndingChronicle",
    "FileSessionStore",
    "FixedClock",
    "GameEngine",
    "GameSession",
    "GenerationRequest",
    "GenerationResult",
    "KeywordHit",
    "KingVerdict",
    "MemorySessionStore",
    "Outcome",
    "PersonaConfig",
    "PhaseEvent",
    "PhaseName",
    "PromptBundle",
    "RemoteBackend",
    "SceneImageRef",
    "ScriptedBackend",
    "StoryTurn",
    "Storybook",
    "SystemClock",
    "TurnOutcome",
    "VerdictKind",
    "WeaponCard",
    "WeaponCategory",
    "WeaponLexicon",
    "advance_phase",
    "apply_mood",
    "assemble_storybook",
    "build_engine",
    "build_evaluation_prompt",
    "default_lexicon",
    "detect_keyword",
    "forge_card",
    "generate_ending",
    "paint_scene",
    "parse_verdict",
    "placeholder_backend",
    "play_card",
    "start_battle",
    "verify_session",
]
