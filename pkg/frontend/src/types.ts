// Mirrors of the service's JSON views. The UI renders these verbatim and
// holds no game logic of its own.

export type Phase = "storytelling" | "battle" | "ending" | "closed";
export type Outcome = "victory" | "dawn" | "abandoned" | null;
export type VerdictKind = "continue" | "rephrase" | "angry";

export interface Verdict {
  kind: VerdictKind;
  comment: string;
  continuation?: string | null;
  mood_delta: number;
}

export interface StoryTurn {
  index: number;
  author: "player" | "king";
  text: string;
  verdict: Verdict | null;
  rejected: boolean;
  materialized_card: string | null;
}

export interface ImageRef {
  id: string;
  path_or_url: string;
  prompt_used: string;
  created_at: string;
}

export interface Card {
  id: string;
  category: string;
  name: string;
  description: string;
  power: number;
  effect_description: string;
  player_line: string;
  king_line: string;
  source_excerpt: string;
  artwork: ImageRef | null;
  artwork_url: string | null;
}

export interface BattlePlay {
  card_id: string;
  damage: number;
  player_line: string;
  king_line: string;
  effect_description: string;
  king_hp_after: number;
}

export interface Battle {
  king_hp: number;
  round: number;
  plays: BattlePlay[];
  outcome: "victory" | "defeat" | null;
}

export interface Ending {
  actions: string[];
  downfall: string;
  title: string;
  narration: string;
}

export interface SessionView {
  id: string;
  seed: number;
  phase: Phase;
  outcome: Outcome;
  revision: number;
  mood: number;
  anger_count: number;
  anger_limit: number;
  turns: StoryTurn[];
  cards: Card[];
  background_url: string | null;
  battle: Battle | null;
  ending: Ending | null;
  created_at: string;
  updated_at: string;
}

export interface TurnOutcome {
  verdict: Verdict;
  king_text: string;
  new_card: Card | null;
  phase: Phase;
  outcome: Outcome;
}

export interface PlayResult extends BattlePlay {
  phase: Phase;
  battle_outcome: "victory" | "defeat" | null;
}

export interface StorybookRefs {
  session_id: string;
  outcome: string;
  storybook_url: string;
  storybook_markdown_url: string;
}

export interface StorybookDoc {
  schema: number;
  session_id: string;
  seed: number;
  created_at: string;
  turns: StoryTurn[];
  weapons: Card[];
  battle: Battle | null;
  ending: Ending | null;
  outcome: string;
}

export interface ApiErrorBody {
  code: "wrong_phase" | "contract_error" | "backend_error" | "not_found" | "busy" | "validation";
  message: string;
  retryable: boolean;
}
