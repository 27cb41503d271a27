"""Engine orchestration: atomic turn commits, determinism, and the busy lock."""

import json
import threading
import time

import pytest

from nights import (
    FixedClock,
    GameEngine,
    PhaseName,
    ScriptedBackend,
    VerdictKind,
    verify_session,
)
from nights.errors import (
    BackendError,
    BusyError,
    ContractError,
    EmptyTextError,
    ValidationError,
    WrongPhaseError,
)
from nights.session import Outcome
from nights.store import MemorySessionStore

from conftest import card_json, ending_json, load_demo_inputs, load_demo_script, make_engine, verdict_json


def run_full_playthrough(engine, session_id, inputs):
    for text in inputs:
        outcome = engine.submit_player_turn(session_id, text)
        if outcome.phase != PhaseName.STORYTELLING:
            break
    session = engine.get_session(session_id)
    if session.phase == PhaseName.BATTLE:
        engine.start_battle(session_id)
        for card in engine.get_session(session_id).weapons:
            engine.play_card(session_id, card.id)
    return engine.close_session(session_id)


# ----------------------------------------------------------------------
# create_session
# ----------------------------------------------------------------------

def test_create_session_initial_state():
    engine, _ = make_engine([])
    s = engine.create_session(seed=42)
    assert s.phase == PhaseName.STORYTELLING
    assert s.mood == 50
    assert s.turns == [] and s.weapons == []
    assert s.seed == 42
    assert engine.store.exists(s.id)


def test_create_session_random_seeds_distinct():
    engine, _ = make_engine([])
    a = engine.create_session()
    b = engine.create_session()
    assert a.id != b.id and a.seed != b.seed


def test_create_session_same_seed_same_id():
    engine, _ = make_engine([])
    engine2, _ = make_engine([])
    assert engine.create_session(seed=42).id == engine2.create_session(seed=42).id


def test_create_session_persona_overrides():
    engine, _ = make_engine([])
    s = engine.create_session(seed=1, persona_overrides={"anger_limit": 5, "likes": ["astronomy"]})
    assert s.persona.anger_limit == 5
    assert s.persona.likes == ["astronomy"]
    assert s.persona.name == "Shahryar"


def test_create_session_rejects_bad_seed():
    engine, _ = make_engine([])
    with pytest.raises(ValidationError):
        engine.create_session(seed=-1)


# ----------------------------------------------------------------------
# submit_player_turn
# ----------------------------------------------------------------------

def test_continue_appends_both_turns():
    engine, _ = make_engine([verdict_json(continuation="And so the court fell silent.")])
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "A well-formed ancient-setting paragraph.")
    assert out.verdict.kind == VerdictKind.CONTINUE
    assert out.king_text == "And so the court fell silent."
    session = engine.get_session(s.id)
    assert [t.author.value for t in session.turns] == ["player", "king"]
    assert session.turns[0].verdict is not None
    assert not session.turns[0].rejected
    verify_session(session)


def test_angry_marks_rejected_and_counts():
    engine, _ = make_engine([verdict_json(kind="angry", comment="Nonsense!", mood_delta=-15)])
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "qwerty asdf 12345 rocket laser wifi")
    assert out.verdict.kind == VerdictKind.ANGRY_CORRECT
    session = engine.get_session(s.id)
    assert session.anger_count == 1
    assert session.turns[0].rejected
    assert session.turns[1].author.value == "king"
    assert session.mood == 35
    verify_session(session)


def test_third_angry_closes_dawn():
    engine, _ = make_engine([verdict_json(kind="angry", mood_delta=-5)] * 3)
    s = engine.create_session(seed=1)
    for i in range(3):
        out = engine.submit_player_turn(s.id, f"rocket nonsense {i}")
    assert out.phase == PhaseName.CLOSED and out.outcome == Outcome.DAWN
    session = engine.get_session(s.id)
    assert session.anger_count == 3
    verify_session(session)
    with pytest.raises(WrongPhaseError):
        engine.submit_player_turn(s.id, "one more tale")


def test_anger_limit_configurable():
    engine, _ = make_engine([verdict_json(kind="angry", mood_delta=-5)])
    s = engine.create_session(seed=1, persona_overrides={"anger_limit": 1})
    out = engine.submit_player_turn(s.id, "rocket")
    assert out.phase == PhaseName.CLOSED


def test_empty_text_rejected():
    engine, _ = make_engine([])
    s = engine.create_session(seed=1)
    with pytest.raises(EmptyTextError):
        engine.submit_player_turn(s.id, "   ")


def test_oversized_text_rejected():
    engine, _ = make_engine([])
    s = engine.create_session(seed=1)
    with pytest.raises(ValidationError):
        engine.submit_player_turn(s.id, "x" * 2001)


def test_rejected_turn_changes_no_weapons_or_background():
    engine, _ = make_engine([verdict_json(kind="rephrase", comment="A sword! (ignored)")])
    s = engine.create_session(seed=1)
    engine.submit_player_turn(s.id, "Mumble mumble.")
    session = engine.get_session(s.id)
    assert session.weapons == [] and session.background is None and session.battle is None


def test_rejection_with_empty_comment_gets_stock_line():
    engine, _ = make_engine(['{"kind":"rephrase","comment":"","mood_delta":0}'])
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "Hmm.")
    assert out.king_text  # non-empty; the turn log requires it
    verify_session(engine.get_session(s.id))


def test_long_continuation_truncated_to_turn_limit():
    engine, _ = make_engine([verdict_json(continuation="y" * 5000)])
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "Tell me more.")
    assert len(out.king_text) == 2000
    verify_session(engine.get_session(s.id))


# ----------------------------------------------------------------------
# Rollback semantics
# ----------------------------------------------------------------------

def stored_doc(engine, session_id):
    return engine.store.load_doc(session_id)


def test_backend_error_rolls_back():
    engine, _ = make_engine([])  # empty strict script: first call explodes
    s = engine.create_session(seed=1)
    before = stored_doc(engine, s.id)
    with pytest.raises(BackendError):
        engine.submit_player_turn(s.id, "A tale.")
    assert stored_doc(engine, s.id) == before


def test_contract_error_rolls_back_after_repair():
    engine, backend = make_engine(["not json", "still not json"])
    s = engine.create_session(seed=1)
    before = stored_doc(engine, s.id)
    with pytest.raises(ContractError):
        engine.submit_player_turn(s.id, "A tale.")
    assert stored_doc(engine, s.id) == before
    assert backend.calls_remaining == 0  # repair retry consumed both steps


def test_failed_card_forge_still_commits_turn():
    engine, _ = make_engine(
        [verdict_json(continuation="He drew a sword."), "card junk", "more junk"]
    )
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "Tell of arms.")
    assert out.new_card is None
    session = engine.get_session(s.id)
    assert len(session.turns) == 2 and session.weapons == []
    verify_session(session)


# ----------------------------------------------------------------------
# Card materialization through the engine
# ----------------------------------------------------------------------

def test_card_materializes_with_background(tmp_path):
    engine, _ = make_engine(
        [verdict_json(continuation="He drew a sword from the vault."), card_json(power=25)],
        data_dir=tmp_path,
    )
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "Tell of the vault.")
    assert out.new_card is not None and out.new_card.power == 25
    session = engine.get_session(s.id)
    assert len(session.weapons) == 1
    assert session.background is not None
    assert session.weapons[0].artwork == session.background
    assert session.turns[1].materialized_card == session.weapons[0].id
    assert session.background.prompt_used.startswith("He drew a sword")
    verify_session(session)


def test_no_keyword_no_card_no_repaint():
    engine, _ = make_engine([verdict_json(continuation="The court applauded politely.")])
    s = engine.create_session(seed=1)
    out = engine.submit_player_turn(s.id, "A quiet turn.")
    assert out.new_card is None
    session = engine.get_session(s.id)
    assert session.background is None


def test_player_keyword_alone_does_not_forge():
    engine, _ = make_engine([verdict_json(continuation="The King nodded along.")])
    s = engine.create_session(seed=1)
    engine.submit_player_turn(s.id, "I sharpened my sword and shield and dagger.")
    assert engine.get_session(s.id).weapons == []


def test_duplicate_categories_allowed_across_cards(tmp_path):
    script = []
    for i in range(2):
        script.append(verdict_json(continuation=f"Yet another sword, the {i}th, gleamed."))
        script.append(card_json(name=f"Sword {i}", power=20))
    engine, _ = make_engine(script, data_dir=tmp_path)
    s = engine.create_session(seed=1)
    engine.submit_player_turn(s.id, "one")
    engine.submit_player_turn(s.id, "two")
    session = engine.get_session(s.id)
    assert [w.category for w in session.weapons] == ["sword", "sword"]
    verify_session(session)


def test_fourth_card_enters_battle_atomically(tmp_path):
    script = []
    for kw in ("sword", "shield", "dagger", "spear"):
        script.append(verdict_json(continuation=f"He revealed a {kw} of renown."))
        script.append(card_json(name=f"The {kw}", power=30))
    engine, _ = make_engine(script, data_dir=tmp_path)
    s = engine.create_session(seed=1)
    phases = [engine.submit_player_turn(s.id, f"turn {i}").phase for i in range(4)]
    assert phases == [PhaseName.STORYTELLING] * 3 + [PhaseName.BATTLE]
    session = engine.get_session(s.id)
    assert len(session.weapons) == 4
    verify_session(session)


# ----------------------------------------------------------------------
# Battle + ending through the engine
# ----------------------------------------------------------------------

def full_script(powers=(30, 30, 25, 20)):
    script = []
    for kw, power in zip(("sword", "shield", "dagger", "spear"), powers):
        script.append(verdict_json(continuation=f"He revealed a {kw} of renown."))
        script.append(card_json(name=f"The {kw}", power=power))
    script.append(ending_json())
    return script


def test_fourth_play_generates_ending(tmp_path):
    engine, _ = make_engine(full_script(), data_dir=tmp_path)
    s = engine.create_session(seed=1)
    for i in range(4):
        engine.submit_player_turn(s.id, f"turn {i}")
    engine.start_battle(s.id)
    for card in engine.get_session(s.id).weapons:
        engine.play_card(s.id, card.id)
    session = engine.get_session(s.id)
    assert session.phase == PhaseName.ENDING
    assert session.ending is not None and len(session.ending.actions) == 4
    verify_session(session)


def test_play_card_lazy_starts_battle(tmp_path):
    engine, _ = make_engine(full_script(), data_dir=tmp_path)
    s = engine.create_session(seed=1)
    for i in range(4):
        engine.submit_player_turn(s.id, f"turn {i}")
    card = engine.get_session(s.id).weapons[0]
    play = engine.play_card(s.id, card.id)  # no explicit start_battle
    assert play.king_hp_after == 70


def test_close_victory(tmp_path):
    engine, _ = make_engine(full_script(), data_dir=tmp_path)
    s = engine.create_session(seed=1)
    book = run_full_playthrough(engine, s.id, [f"turn {i}" for i in range(4)])
    assert book.outcome == "victory"
    session = engine.get_session(s.id)
    assert session.phase == PhaseName.CLOSED and session.outcome == Outcome.VICTORY
    verify_session(session)


def test_close_defeat_labelled(tmp_path):
    engine, _ = make_engine(full_script(powers=(10, 10, 10, 10)), data_dir=tmp_path)
    s = engine.create_session(seed=1)
    book = run_full_playthrough(engine, s.id, [f"turn {i}" for i in range(4)])
    assert book.outcome == "defeat"
    assert engine.get_session(s.id).outcome == Outcome.DAWN


def test_abandon_close(tmp_path):
    engine, _ = make_engine([verdict_json()], data_dir=tmp_path)
    s = engine.create_session(seed=1)
    engine.submit_player_turn(s.id, "One turn only.")
    book = engine.close_session(s.id)
    assert book.outcome == "abandoned"
    assert engine.get_session(s.id).phase == PhaseName.CLOSED


def test_closed_session_is_frozen(tmp_path):
    engine, _ = make_engine([verdict_json(kind="angry")] * 3, data_dir=tmp_path)
    s = engine.create_session(seed=1, persona_overrides={"anger_limit": 1})
    engine.submit_player_turn(s.id, "rocket")
    before = stored_doc(engine, s.id)
    with pytest.raises(WrongPhaseError):
        engine.submit_player_turn(s.id, "again")
    with pytest.raises(WrongPhaseError):
        engine.start_battle(s.id)
    with pytest.raises(WrongPhaseError):
        engine.play_card(s.id, "whatever")
    engine.close_session(s.id)  # idempotent close is allowed
    assert json.loads(stored_doc(engine, s.id)) == json.loads(before)


# ----------------------------------------------------------------------
# Replay determinism
# ----------------------------------------------------------------------

def test_replay_determinism_bytes(tmp_path):
    docs = []
    books = []
    for run in range(2):
        data_dir = tmp_path / f"run{run}"
        engine, _ = make_engine(load_demo_script(), data_dir=data_dir, clock=FixedClock())
        s = engine.create_session(seed=42)
        book = run_full_playthrough(engine, s.id, load_demo_inputs())
        docs.append(stored_doc(engine, s.id))
        books.append((data_dir / "storybooks" / f"{s.id}.json").read_bytes())
    assert docs[0] == docs[1]
    assert books[0] == books[1]


# ----------------------------------------------------------------------
# Concurrency: one in-flight operation per session
# ----------------------------------------------------------------------

class SlowBackend:
    def __init__(self, inner, delay=0.15):
        self.inner = inner
        self.delay = delay
        self.id = "slow"

    def generate(self, request):
        time.sleep(self.delay)
        return self.inner.generate(request)


def test_concurrent_turns_one_wins():
    backend = SlowBackend(ScriptedBackend([verdict_json()] * 4, strict=False))
    engine = GameEngine(MemorySessionStore(), lambda s: backend, clock=FixedClock())
    s = engine.create_session(seed=1)

    results = []

    def submit(i):
        try:
            engine.submit_player_turn(s.id, f"racer {i}")
            results.append("ok")
        except BusyError:
            results.append("busy")

    threads = [threading.Thread(target=submit, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results.count("ok") == 1
    assert results.count("busy") == 3
    assert len(engine.get_session(s.id).turns) == 2


def test_cross_session_operations_do_not_block():
    backend = ScriptedBackend([], strict=False)
    engine = GameEngine(MemorySessionStore(), lambda s: backend, clock=FixedClock())
    a = engine.create_session(seed=1)
    b = engine.create_session(seed=2)
    engine.submit_player_turn(a.id, "tale one")
    engine.submit_player_turn(b.id, "tale two")
    assert len(engine.get_session(a.id).turns) == 2
    assert len(engine.get_session(b.id).turns) == 2
