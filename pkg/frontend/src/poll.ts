// Revision-gated polling: re-render only when the session actually changed.

import type { ApiClient } from "./api.js";
import type { SessionView } from "./types.js";

export const POLL_INTERVAL_MS = 1000;

export function shouldRender(lastRevision: number | null, view: SessionView): boolean {
  return lastRevision === null || view.revision !== lastRevision;
}

export function pollingActive(view: SessionView | null): boolean {
  return view !== null && (view.phase === "storytelling" || view.phase === "battle");
}

export class SessionPoller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private lastRevision: number | null = null;
  private inFlight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly onChange: (view: SessionView) => void,
    private readonly intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  /** Force the next tick to re-render even if the revision is unchanged. */
  reset(): void {
    this.lastRevision = null;
  }

  async tick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const view = await this.api.getSession(this.sessionId);
      if (shouldRender(this.lastRevision, view)) {
        this.lastRevision = view.revision;
        this.onChange(view);
      }
      if (!pollingActive(view)) {
        this.stop();
      }
    } catch {
      // transient poll failures are ignored; the next tick retries
    } finally {
      this.inFlight = false;
    }
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
