import type { Battle, Card, SessionView } from "../src/types.js";

export function sessionFixture(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "11111111-2222-3333-4444-555555555555",
    seed: 7,
    phase: "storytelling",
    outcome: null,
    revision: 0,
    mood: 50,
    anger_count: 0,
    anger_limit: 3,
    turns: [],
    cards: [],
    background_url: null,
    battle: null,
    ending: null,
    created_at: "2024-01-01T00:00:00Z",
    updated_at: "2024-01-01T00:00:00Z",
    ...overrides,
  };
}

export function cardFixture(id: string, overrides: Partial<Card> = {}): Card {
  return {
    id,
    category: "sword",
    name: `Blade ${id}`,
    description: "A tested blade.",
    power: 25,
    effect_description: "It gleams.",
    player_line: "Have at you!",
    king_line: "Bah!",
    source_excerpt: "a sword",
    artwork: null,
    artwork_url: null,
    ...overrides,
  };
}

export function battleFixture(overrides: Partial<Battle> = {}): Battle {
  return { king_hp: 100, round: 0, plays: [], outcome: null, ...overrides };
}

type Responder = (path: string, init?: RequestInit) => { status: number; body: unknown };

/** Minimal fetch stub: routes by "METHOD path". */
export function fakeFetch(routes: Record<string, Responder | { status: number; body: unknown }>) {
  const calls: { key: string; body: unknown }[] = [];
  const impl = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    calls.push({ key, body: init?.body ? JSON.parse(String(init.body)) : undefined });
    const route = routes[key];
    if (!route) {
      return jsonResponse(404, { code: "not_found", message: `no route ${key}`, retryable: false });
    }
    const result = typeof route === "function" ? route(path, init) : route;
    return jsonResponse(result.status, result.body);
  };
  return { impl, calls };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export async function waitFor(predicate: () => boolean, timeoutMs = 15000, stepMs = 25): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error("waitFor timed out");
    }
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
}
