// Full playthrough against the real service (scripted backend) driven
// through the DOM: submit six turns, collect four cards, fight the battle,
// seal the storybook. Headless-browser substitute: jsdom + real HTTP.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { JSDOM } from "jsdom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { waitFor } from "./helpers.js";

const PORT = 8455 + (process.pid % 400);
const BASE = `http://127.0.0.1:${PORT}`;
const SCRIPT = fileURLToPath(new URL("./e2e-script.json", import.meta.url));

let service: ChildProcess;
let dataDir: string;

const nodeFetch = (input: string, init?: RequestInit) => fetch(input, init);

function makeRoot(): HTMLElement {
  const dom = new JSDOM("<!doctype html><html><body><div id='app'></div></body></html>");
  return dom.window.document.getElementById("app") as HTMLElement;
}

function transcriptOf(root: HTMLElement): { author: string; text: string; rejected: boolean }[] {
  return [...root.querySelectorAll('[data-role="turn"]')].map((node) => ({
    author: node.getAttribute("data-author") ?? "",
    text: node.querySelector('[data-role="turn-text"]')?.textContent ?? "",
    rejected: node.getAttribute("data-rejected") === "true",
  }));
}

async function submitThroughDom(app: App, root: HTMLElement, text: string): Promise<void> {
  const before = root.querySelectorAll('[data-role="turn"]').length;
  const textarea = root.querySelector('[data-role="draft"]') as HTMLTextAreaElement;
  textarea.value = text;
  (root.querySelector('[data-role="submit-turn"]') as HTMLButtonElement).click();
  await waitFor(
    () => !app.state.pending && root.querySelectorAll('[data-role="turn"]').length === before + 2,
  );
}

async function playNextCard(app: App, root: HTMLElement): Promise<void> {
  const before = root.querySelectorAll('[data-role="beat"]').length;
  const button = root.querySelector('[data-card-id][data-played="false"] [data-role="play-card"]');
  expect(button).not.toBeNull();
  (button as HTMLButtonElement).click();
  await waitFor(() => !app.state.pending && root.querySelectorAll('[data-role="beat"]').length === before + 1);
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "nights-e2e-"));
  service = spawn(
    "nights",
    ["serve", "--backend", "scripted", "--script", SCRIPT, "--data-dir", dataDir, "--port", String(PORT), "--fixed-clock"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stderr?.on("data", (chunk) => process.stderr.write(chunk));

  const deadline = Date.now() + 30000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not come up in time");
}, 45000);

afterAll(() => {
  service?.kill("SIGTERM");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("full browser playthrough", () => {
  it("plays six turns, four cards, the battle, and seals the storybook", async () => {
    const root = makeRoot();
    const app = new App(root, new ApiClient(BASE, nodeFetch), 3600_000);
    await app.begin(9001);
    const sessionId = app.sessionId!;
    expect(root.querySelector('[data-role="gallery-empty"]')?.textContent).toContain(
      "tempt the King to speak of weapons",
    );

    const turns = [
      "Once, a teller stood before the throne and promised a tale worth a life.",
      "She spoke of the gatehouse and what the guards keep polished there.",
      "She mumbled a shapeless aside about nothing much at all.",
      "She told of what sleeps in a storyteller's sleeve.",
      "Then a telephone rang with engine noise and ruined the mood.",
      "At last she told of the threshold, and what the first light would find.",
    ];
    for (const text of turns) {
      await submitThroughDom(app, root, text);
    }

    // six exchanges: twelve turns, two rejected, four cards, battle begun
    const transcript = transcriptOf(root);
    expect(transcript.length).toBe(12);
    expect(transcript.filter((t) => t.rejected).length).toBe(2);
    expect(root.querySelectorAll('[data-role="card"]').length).toBe(4);
    expect(root.querySelector('[data-role="stage"]')?.getAttribute("data-phase")).toBe("battle");
    expect(root.querySelector('[data-role="stage"]')?.getAttribute("data-background")).toContain("/images/");

    // two plays, then simulate a page reload mid-battle
    await playNextCard(app, root);
    await playNextCard(app, root);
    const beforeReload = root.innerHTML;
    app.stop();

    const root2 = makeRoot();
    const app2 = new App(root2, new ApiClient(BASE, nodeFetch), 3600_000);
    await app2.resume(sessionId);
    expect(root2.innerHTML).toBe(beforeReload);

    // finish the battle in the reloaded page
    await playNextCard(app2, root2);
    await playNextCard(app2, root2);
    expect(root2.querySelector('[data-role="stage"]')?.getAttribute("data-phase")).toBe("ending");
    expect(root2.querySelector('[data-role="ending-title"]')?.textContent).toBe(
      "Keeper of the Hundred Dawns",
    );
    expect(root2.querySelector('[data-role="king-hp"]')?.getAttribute("data-hp")).toBe("0");

    // seal the storybook
    (root2.querySelector('[data-role="close-session"]') as HTMLButtonElement).click();
    await waitFor(
      () => root2.querySelector('[data-role="stage"]')?.getAttribute("data-phase") === "closed",
    );
    expect(root2.querySelector('[data-role="storybook-json"]')).not.toBeNull();

    // the rendered transcript must equal the storybook turn log
    const api = new ApiClient(BASE, nodeFetch);
    const storybook = await api.getStorybook(sessionId);
    expect(storybook.outcome).toBe("victory");
    const rendered = transcriptOf(root2);
    expect(rendered.length).toBe(storybook.turns.length);
    for (const [i, turn] of storybook.turns.entries()) {
      expect(rendered[i]).toEqual({ author: turn.author, text: turn.text, rejected: turn.rejected });
    }
    app2.stop();
  }, 60000);
});
