// Controller: wires the API client, revision-gated poller, and renderer.
// One in-flight mutation at a time; inputs stay disabled while pending, and
// a failed submission keeps the draft so the player can retry.

import { ApiClient, ApiError } from "./api.js";
import { SessionPoller, pollingActive } from "./poll.js";
import { render, type UiActions, type UiState } from "./render.js";
import type { SessionView } from "./types.js";

export class App {
  readonly api: ApiClient;
  readonly state: UiState = { view: null, pending: false, error: null, draft: "" };
  private poller: SessionPoller | null = null;
  private lastAction: (() => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    api?: ApiClient,
    private readonly pollIntervalMs = 1000,
  ) {
    this.api = api ?? new ApiClient("");
  }

  get sessionId(): string | null {
    return this.state.view?.id ?? null;
  }

  private readonly actions: UiActions = {
    submitTurn: (text) => this.submitTurn(text),
    playCard: (cardId) => this.playCard(cardId),
    closeSession: () => this.closeSession(),
    retry: () => this.retry(),
  };

  private draw(): void {
    render(this.root, this.state, this.actions, this.api);
  }

  private applyView(view: SessionView): void {
    this.state.view = view;
    this.draw();
    if (this.poller) {
      if (pollingActive(view)) this.poller.start();
      else this.poller.stop();
    }
  }

  /** Begin a brand-new session. */
  async begin(seed?: number): Promise<string> {
    this.draw();
    const view = await this.api.createSession(seed);
    this.attachPoller(view.id);
    this.applyView(view);
    return view.id;
  }

  /** Reconstruct an existing session (page reload, shared link). */
  async resume(sessionId: string): Promise<void> {
    this.draw();
    const view = await this.api.getSession(sessionId);
    this.attachPoller(sessionId);
    this.applyView(view);
  }

  stop(): void {
    this.poller?.stop();
  }

  private attachPoller(sessionId: string): void {
    this.poller?.stop();
    this.poller = new SessionPoller(
      this.api,
      sessionId,
      (view) => {
        this.state.view = view;
        this.draw();
      },
      this.pollIntervalMs,
    );
  }

  private async mutate(action: () => Promise<void>, retry: (() => void) | null): Promise<void> {
    if (this.state.pending || !this.state.view) return;
    this.state.pending = true;
    this.state.error = null;
    this.lastAction = retry;
    this.draw();
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.error = { message: err.message, retryable: err.retryable };
      } else {
        this.state.error = { message: String(err), retryable: true };
      }
    } finally {
      this.state.pending = false;
      const id = this.sessionId;
      if (id) {
        try {
          this.applyView(await this.api.getSession(id));
        } catch {
          this.draw();
        }
      } else {
        this.draw();
      }
    }
  }

  async submitTurn(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed) return;
    this.state.draft = text;
    await this.mutate(async () => {
      await this.api.submitTurn(this.state.view!.id, trimmed);
      this.state.draft = ""; // only cleared when the King accepted the request
    }, () => void this.submitTurn(text));
  }

  async playCard(cardId: string): Promise<void> {
    await this.mutate(async () => {
      await this.api.playCard(this.state.view!.id, cardId);
    }, () => void this.playCard(cardId));
  }

  async closeSession(): Promise<void> {
    await this.mutate(async () => {
      await this.api.closeSession(this.state.view!.id);
    }, () => void this.closeSession());
  }

  retry(): void {
    const action = this.lastAction;
    this.lastAction = null;
    this.state.error = null;
    if (action) action();
    else this.draw();
  }
}
