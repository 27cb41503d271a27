// DOM rendering. The UI is a stateless mirror of the session view: every
// render rebuilds from the latest GET, so a page reload reconstructs the
// exact same screen.

import type { ApiClient } from "./api.js";
import type { Battle, Card, SessionView, StoryTurn } from "./types.js";

export interface UiState {
  view: SessionView | null;
  pending: boolean;
  error: { message: string; retryable: boolean } | null;
  draft: string;
}

export interface UiActions {
  submitTurn(text: string): void;
  playCard(cardId: string): void;
  closeSession(): void;
  retry(): void;
}

function el(
  doc: Document,
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

const VERDICT_LABELS: Record<string, string> = {
  continue: "the King continues",
  rephrase: "the King demands a rephrase",
  angry: "the King is angry",
};

function renderTurn(doc: Document, turn: StoryTurn): HTMLElement {
  const bubble = el(doc, "div", {
    class: `turn ${turn.author}${turn.rejected ? " rejected" : ""}`,
    "data-role": "turn",
    "data-author": turn.author,
    "data-index": String(turn.index),
    "data-rejected": String(turn.rejected),
  });
  const who = turn.author === "player" ? "Shahrzad" : "The King";
  bubble.append(el(doc, "div", { class: "speaker" }, [who]));
  const text = el(doc, turn.rejected ? "s" : "p", { class: "turn-text", "data-role": "turn-text" }, [
    turn.text,
  ]);
  bubble.append(text);
  if (turn.verdict && turn.verdict.comment) {
    bubble.append(
      el(doc, "div", { class: "verdict", "data-role": "verdict", "data-kind": turn.verdict.kind }, [
        `${VERDICT_LABELS[turn.verdict.kind] ?? turn.verdict.kind}: ${turn.verdict.comment}`,
      ]),
    );
  }
  return bubble;
}

function renderMood(doc: Document, view: SessionView): HTMLElement {
  const gauge = el(doc, "div", { class: "mood-panel" });
  const bar = el(doc, "div", { class: "mood-bar", "data-role": "mood", "data-mood": String(view.mood) });
  bar.append(el(doc, "div", { class: "mood-fill", style: `width:${view.mood}%` }));
  gauge.append(el(doc, "div", { class: "label" }, [`The King's mood: ${view.mood}/100`]), bar);
  const pips = el(doc, "div", { class: "anger-pips", "data-role": "anger", "data-count": String(view.anger_count) });
  for (let i = 0; i < view.anger_limit; i += 1) {
    pips.append(el(doc, "span", { class: `pip${i < view.anger_count ? " lit" : ""}` }, ["●"]));
  }
  gauge.append(
    el(doc, "div", { class: "label" }, [
      `Anger: ${view.anger_count}/${view.anger_limit} before dawn comes early`,
    ]),
    pips,
  );
  return gauge;
}

function renderComposer(doc: Document, state: UiState, actions: UiActions): HTMLElement {
  const box = el(doc, "div", { class: "composer" });
  const textarea = el(doc, "textarea", {
    "data-role": "draft",
    placeholder: "Continue the tale… tempt the King to speak of weapons.",
    maxlength: "2000",
  }) as HTMLTextAreaElement;
  textarea.value = state.draft;
  if (state.pending) textarea.setAttribute("disabled", "disabled");
  textarea.addEventListener("input", () => {
    state.draft = textarea.value;
  });
  const button = el(doc, "button", { "data-role": "submit-turn" }, [
    state.pending ? "The King listens…" : "Tell it",
  ]) as HTMLButtonElement;
  if (state.pending) button.setAttribute("disabled", "disabled");
  button.addEventListener("click", () => actions.submitTurn(textarea.value));
  box.append(textarea, button);
  return box;
}

function renderCard(
  doc: Document,
  card: Card,
  api: ApiClient,
  options: { playable: boolean; played: boolean },
  actions: UiActions,
): HTMLElement {
  const node = el(doc, "div", {
    class: `card${options.played ? " played" : ""}`,
    "data-role": "card",
    "data-card-id": card.id,
    "data-played": String(options.played),
  });
  if (card.artwork_url) {
    node.append(el(doc, "img", { class: "card-art", src: api.resolve(card.artwork_url) ?? "", alt: card.name }));
  }
  node.append(
    el(doc, "div", { class: "card-name" }, [card.name]),
    el(doc, "div", { class: "card-meta" }, [`${card.category} · power ${card.power}`]),
    el(doc, "p", { class: "card-desc" }, [card.description]),
  );
  if (options.playable) {
    const button = el(doc, "button", { "data-role": "play-card" }, ["Play this card"]) as HTMLButtonElement;
    if (options.played) button.setAttribute("disabled", "disabled");
    button.addEventListener("click", () => actions.playCard(card.id));
    node.append(button);
  }
  return node;
}

function renderGallery(doc: Document, view: SessionView, api: ApiClient, actions: UiActions): HTMLElement {
  const panel = el(doc, "section", { class: "gallery", "data-role": "gallery" });
  panel.append(el(doc, "h2", {}, [`Arsenal (${view.cards.length}/4)`]));
  if (view.cards.length === 0) {
    panel.append(
      el(doc, "p", { class: "empty-hint", "data-role": "gallery-empty" }, [
        "No weapons yet — tempt the King to speak of weapons.",
      ]),
    );
    return panel;
  }
  const playedIds = new Set((view.battle?.plays ?? []).map((p) => p.card_id));
  const inBattle = view.phase === "battle";
  for (const card of view.cards) {
    const played = playedIds.has(card.id);
    panel.append(renderCard(doc, card, api, { playable: inBattle && !played, played }, actions));
  }
  return panel;
}

function renderBattle(doc: Document, view: SessionView, battle: Battle): HTMLElement {
  const stage = el(doc, "section", { class: "battle", "data-role": "battle" });
  stage.append(el(doc, "h2", {}, ["The Confrontation"]));
  const bar = el(doc, "div", { class: "hp-bar", "data-role": "king-hp", "data-hp": String(battle.king_hp) });
  bar.append(el(doc, "div", { class: "hp-fill", style: `width:${battle.king_hp}%` }));
  stage.append(el(doc, "div", { class: "label" }, [`The King's strength: ${battle.king_hp}/100`]), bar);
  const cardsById = new Map(view.cards.map((c) => [c.id, c]));
  for (const [i, play] of battle.plays.entries()) {
    const name = cardsById.get(play.card_id)?.name ?? play.card_id;
    const beat = el(doc, "div", { class: "beat", "data-role": "beat", "data-round": String(i + 1) });
    beat.append(el(doc, "div", { class: "beat-title" }, [`Round ${i + 1} — ${name} strikes for ${play.damage}`]));
    if (play.player_line) beat.append(el(doc, "p", { class: "line player" }, [`Shahrzad: ${play.player_line}`]));
    if (play.king_line) beat.append(el(doc, "p", { class: "line king" }, [`The King: ${play.king_line}`]));
    if (play.effect_description) beat.append(el(doc, "p", { class: "line effect" }, [play.effect_description]));
    stage.append(beat);
  }
  return stage;
}

function renderEnding(doc: Document, view: SessionView, api: ApiClient, actions: UiActions): HTMLElement {
  const panel = el(doc, "section", { class: "ending", "data-role": "ending" });
  const ending = view.ending;
  if (!ending) {
    panel.append(el(doc, "p", {}, ["The tale ended before its battle; dawn came early."]));
  } else {
    panel.append(el(doc, "h2", { "data-role": "ending-title" }, [ending.title]));
    const list = el(doc, "ol", { "data-role": "ending-actions" });
    for (const action of ending.actions) {
      list.append(el(doc, "li", {}, [action]));
    }
    panel.append(list);
    panel.append(el(doc, "p", { class: "downfall", "data-role": "downfall" }, [ending.downfall]));
    panel.append(el(doc, "p", { class: "narration", "data-role": "narration" }, [ending.narration]));
  }
  if (view.phase === "ending") {
    const button = el(doc, "button", { "data-role": "close-session" }, ["Seal the storybook"]) as HTMLButtonElement;
    button.addEventListener("click", () => actions.closeSession());
    panel.append(button);
  } else {
    const links = el(doc, "p", { class: "downloads" });
    links.append(
      el(doc, "a", { "data-role": "storybook-json", href: api.resolve(`/v1/sessions/${view.id}/storybook`) ?? "#" }, [
        "Download storybook (JSON)",
      ]),
      " · ",
      el(doc, "a", { "data-role": "storybook-md", href: api.resolve(`/v1/sessions/${view.id}/storybook?format=md`) ?? "#" }, [
        "Download storybook (Markdown)",
      ]),
    );
    panel.append(links);
  }
  return panel;
}

const PHASE_BANNERS: Record<string, string> = {
  storytelling: "Tell your tale; the King judges every passage.",
  battle: "Four weapons are gathered. Play them one by one.",
  ending: "The battle is done; the bard takes the floor.",
  closed: "The night is over.",
};

export function render(root: HTMLElement, state: UiState, actions: UiActions, api: ApiClient): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const view = state.view;
  if (!view) {
    root.append(el(doc, "p", { "data-role": "loading" }, ["Summoning the court…"]));
    return;
  }

  const stage = el(doc, "div", { class: "stage", "data-role": "stage", "data-phase": view.phase });
  const background = api.resolve(view.background_url);
  if (background) {
    stage.setAttribute("style", `background-image:url(${JSON.stringify(background)})`);
    stage.setAttribute("data-background", background);
  }
  stage.append(el(doc, "div", { class: "banner" }, [PHASE_BANNERS[view.phase] ?? view.phase]));

  if (state.error) {
    const box = el(doc, "div", { class: "error", "data-role": "error" }, [state.error.message]);
    if (state.error.retryable) {
      const retry = el(doc, "button", { "data-role": "retry" }, ["Try again"]) as HTMLButtonElement;
      retry.addEventListener("click", () => actions.retry());
      box.append(" ", retry);
    }
    stage.append(box);
  }

  const transcript = el(doc, "section", { class: "transcript", "data-role": "transcript" });
  for (const turn of view.turns) {
    transcript.append(renderTurn(doc, turn));
  }
  stage.append(transcript);

  if (view.phase === "storytelling") {
    stage.append(renderMood(doc, view));
    stage.append(renderComposer(doc, state, actions));
  }
  stage.append(renderGallery(doc, view, api, actions));
  if (view.battle && (view.phase === "battle" || view.battle.plays.length > 0)) {
    stage.append(renderBattle(doc, view, view.battle));
  }
  if (view.phase === "ending" || view.phase === "closed") {
    stage.append(renderEnding(doc, view, api, actions));
  }
  root.append(stage);
}
