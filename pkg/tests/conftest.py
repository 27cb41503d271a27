import json
from pathlib import Path

import pytest

from nights import FixedClock, GameEngine, ScriptedBackend
from nights.store import MemorySessionStore

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_SCRIPT = REPO_ROOT / "demo" / "script.json"
DEMO_INPUTS = REPO_ROOT / "demo" / "inputs.txt"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def load_demo_script() -> list[str]:
    return json.loads(DEMO_SCRIPT.read_text(encoding="utf-8"))


def load_demo_inputs() -> list[str]:
    return [line for line in DEMO_INPUTS.read_text(encoding="utf-8").splitlines() if line.strip()]


def verdict_json(kind="continue", comment="Hm.", continuation="The tale went on.", mood_delta=2) -> str:
    doc = {"kind": kind, "comment": comment, "mood_delta": mood_delta}
    if kind == "continue":
        doc["continuation"] = continuation
    return json.dumps(doc, ensure_ascii=False)


def card_json(name="Plain Blade", description="A plain one.", power=20, **extra) -> str:
    doc = {
        "name": name,
        "description": description,
        "power": power,
        "effect_description": "It gleams.",
        "player_line": "Have at you!",
        "king_line": "Bah!",
    }
    doc.update(extra)
    return json.dumps(doc, ensure_ascii=False)


def ending_json(actions=None, **overrides) -> str:
    doc = {
        "actions": actions
        or ["She struck once.", "She struck twice.", "She struck thrice.", "She ended it."],
        "downfall": "The crown rolled.",
        "title": "Sovereign of the Spoken Blade",
        "narration": "Hear how the night was won.",
    }
    doc.update(overrides)
    return json.dumps(doc, ensure_ascii=False)


def make_engine(script, *, seed_for_backend=0, strict=True, data_dir=None, clock=None, **engine_kwargs):
    """Engine over a MemoryStore with one scripted backend shared by all its sessions.

    Tests drive a single session per engine, so sharing is safe here.
    """
    clock = clock or FixedClock()
    backend = ScriptedBackend(script, strict=strict, seed=seed_for_backend, data_dir=data_dir, clock=clock)
    engine = GameEngine(
        MemorySessionStore(), lambda s: backend, data_dir=data_dir, clock=clock, **engine_kwargs
    )
    return engine, backend


@pytest.fixture
def fixed_clock():
    return FixedClock()
