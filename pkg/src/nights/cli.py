"""Terminal client and service launcher.

``play`` runs a full playthrough (interactive, or scripted via --inputs for
CI and golden replays), ``replay`` pretty-prints a stored storybook, and
``serve`` exposes the HTTP API for the browser UI.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .chronicle import Storybook
from .config import AppConfig, build_engine
from .engine import GameEngine
from .errors import BackendError, ContractError, GameError, StorageError
from .king import STORYTELLER_NAME, VerdictKind
from .session import PhaseName

VERDICT_BADGES = {
    VerdictKind.CONTINUE: "the King continues",
    VerdictKind.REPHRASE: "the King demands a rephrase",
    VerdictKind.ANGRY_CORRECT: "the King is ANGRY",
}


@click.group()
def main():
    """1001 Nights: craft a tale, forge its weapons, and face the King."""


def _config_from_options(backend, script, seed, data_dir, anger_limit, fixed_clock, strict) -> AppConfig:
    config = AppConfig.from_env()
    if backend:
        config.backend_kind = backend
    if script:
        config.script_path = script
    if seed is not None:
        config.seed = seed
    if data_dir:
        config.data_dir = data_dir
    if anger_limit is not None:
        config.anger_limit = anger_limit
    if fixed_clock:
        config.fixed_clock = True
    if strict:
        config.strict_script = True
    return config


@main.command()
@click.option("--backend", type=click.Choice(["scripted", "placeholder", "remote"]), default=None)
@click.option("--script", type=str, default=None, help="Canned backend replies (JSON array of strings).")
@click.option("--inputs", "inputs_path", type=str, default=None, help="Player lines, one per line; non-interactive.")
@click.option("--seed", type=int, default=None)
@click.option("--data-dir", type=str, default=None)
@click.option("--anger-limit", type=int, default=None)
@click.option("--fixed-clock", is_flag=True, help="Pin all timestamps (byte-exact replays).")
@click.option("--strict", is_flag=True, help="Fail when the script is exhausted instead of improvising.")
def play(backend, script, inputs_path, seed, data_dir, anger_limit, fixed_clock, strict):
    """Play one session from the terminal."""
    if script and not Path(script).exists():
        click.echo(f"script not found: {script}", err=True)
        sys.exit(2)
    if inputs_path and not Path(inputs_path).exists():
        click.echo(f"inputs not found: {inputs_path}", err=True)
        sys.exit(2)

    config = _config_from_options(backend, script, seed, data_dir, anger_limit, fixed_clock, strict)
    try:
        engine = build_engine(config)
        session = engine.create_session(seed=config.seed)
    except GameError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)

    click.echo(f"A new night begins (session {session.id}, seed {session.seed}).")
    click.echo("The King waits. Tell your tale; he will judge every passage.\n")

    scripted_inputs = None
    if inputs_path:
        lines = Path(inputs_path).read_text(encoding="utf-8").splitlines()
        scripted_inputs = iter([line for line in lines if line.strip()])

    try:
        _storytelling_loop(engine, session.id, scripted_inputs)
        _battle_loop(engine, session.id, interactive=scripted_inputs is None)
        book = engine.close_session(session.id)
    except (BackendError, ContractError, StorageError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    except (EOFError, KeyboardInterrupt):
        click.echo("\nThe tale is abandoned.", err=True)
        book = engine.close_session(session.id)

    click.echo(f"\nOutcome: {book.outcome}")
    if book.json_path:
        click.echo(f"Storybook written to {book.json_path}")
        click.echo(f"Readable version at {book.markdown_path}")
    sys.exit(0)


def _storytelling_loop(engine: GameEngine, session_id: str, scripted_inputs) -> None:
    while True:
        session = engine.get_session(session_id)
        if session.phase != PhaseName.STORYTELLING:
            return
        if scripted_inputs is not None:
            text = next(scripted_inputs, None)
            if text is None:
                return
            click.echo(f"{STORYTELLER_NAME}: {text}")
        else:
            text = click.prompt(STORYTELLER_NAME, prompt_suffix="> ")
            if not text.strip():
                continue
        outcome = engine.submit_player_turn(session_id, text)
        badge = VERDICT_BADGES[outcome.verdict.kind]
        click.echo(f"[{badge}] {outcome.verdict.comment}")
        if outcome.verdict.kind == VerdictKind.CONTINUE:
            click.echo(f"The King: {outcome.king_text}")
        if outcome.new_card is not None:
            card = outcome.new_card
            click.echo(f"*** A weapon takes form: {card.name} ({card.category}, power {card.power}) ***")
        session = engine.get_session(session_id)
        click.echo(f"(mood {session.mood}/100, anger {session.anger_count}, cards {len(session.weapons)}/4)\n")
        if outcome.phase == PhaseName.BATTLE:
            click.echo("Four weapons are gathered. The battle begins!\n")
            return
        if outcome.phase == PhaseName.CLOSED:
            click.echo("The King's patience is spent. Dawn comes early.\n")
            return


def _battle_loop(engine: GameEngine, session_id: str, *, interactive: bool) -> None:
    session = engine.get_session(session_id)
    if session.phase != PhaseName.BATTLE:
        return
    while True:
        session = engine.get_session(session_id)
        if session.phase != PhaseName.BATTLE:
            break
        played = {p.card_id for p in session.battle.plays} if session.battle else set()
        unplayed = [w for w in session.weapons if w.id not in played]
        if interactive:
            click.echo("Your hand:")
            for i, card in enumerate(unplayed, start=1):
                click.echo(f"  {i}. {card.name} (power {card.power})")
            choice = click.prompt("Play which card?", type=click.IntRange(1, len(unplayed)))
            card = unplayed[choice - 1]
        else:
            card = unplayed[0]
        play = engine.play_card(session_id, card.id)
        click.echo(f"\n{STORYTELLER_NAME}: {play.player_line}")
        click.echo(f"The King: {play.king_line}")
        if play.effect_description:
            click.echo(play.effect_description)
        click.echo(f"The King's strength stands at {play.king_hp_after}.\n")
    session = engine.get_session(session_id)
    if session.ending is not None:
        click.echo("--- The Bard's Ending ---")
        for action in session.ending.actions:
            click.echo(f"  {action}")
        click.echo(session.ending.downfall)
        click.echo(f'You are named "{session.ending.title}".')
        click.echo(session.ending.narration)


@main.command()
@click.option("--storybook", "storybook_path", type=str, required=True)
def replay(storybook_path):
    """Pretty-print a recorded playthrough."""
    path = Path(storybook_path)
    if not path.exists():
        click.echo(f"storybook not found: {storybook_path}", err=True)
        sys.exit(2)
    book = Storybook.from_doc(json.loads(path.read_text(encoding="utf-8")))
    from .chronicle import render_markdown

    click.echo(render_markdown(book))
    sys.exit(0)


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--backend", type=click.Choice(["scripted", "placeholder", "remote"]), default=None)
@click.option("--script", type=str, default=None)
@click.option("--data-dir", type=str, default=None)
@click.option("--fixed-clock", is_flag=True)
def serve(port, host, backend, script, data_dir, fixed_clock):
    """Run the HTTP API for the browser client."""
    import uvicorn

    from .service import create_app

    if script and not Path(script).exists():
        click.echo(f"script not found: {script}", err=True)
        sys.exit(2)
    config = _config_from_options(backend, script, None, data_dir, None, fixed_clock, False)
    if port is not None:
        config.port = port
    try:
        app = create_app(config)
    except GameError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    uvicorn.run(app, host=host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
