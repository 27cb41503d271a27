// Browser entry point. The session id lives in the URL hash so a reload
// reconstructs the same view purely from the service.

import { App } from "./app.js";
import { ApiClient } from "./api.js";

function sessionIdFromHash(): string | null {
  const match = window.location.hash.match(/session=([0-9a-f-]+)/);
  return match?.[1] ?? null;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  // Served from /ui/ on the game service itself; same-origin API.
  const app = new App(root, new ApiClient(""));
  const existing = sessionIdFromHash();
  if (existing) {
    await app.resume(existing);
  } else {
    const id = await app.begin();
    window.location.hash = `session=${id}`;
  }
}

void boot();
