// Thin typed client over HTTP API v1. All game truth lives in the service.

import type {
  ApiErrorBody,
  PlayResult,
  SessionView,
  StorybookDoc,
  StorybookRefs,
  TurnOutcome,
} from "./types.js";

export class ApiError extends Error {
  readonly code: ApiErrorBody["code"];
  readonly retryable: boolean;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.retryable = body.retryable;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        parsed = { code: "backend_error", message: `HTTP ${response.status}`, retryable: true };
      }
      throw new ApiError(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  createSession(seed?: number): Promise<SessionView> {
    return this.request<SessionView>("POST", "/v1/sessions", seed === undefined ? {} : { seed });
  }

  getSession(id: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/v1/sessions/${id}`);
  }

  submitTurn(id: string, text: string): Promise<TurnOutcome> {
    return this.request<TurnOutcome>("POST", `/v1/sessions/${id}/turns`, { text });
  }

  playCard(id: string, cardId: string): Promise<PlayResult> {
    return this.request<PlayResult>("POST", `/v1/sessions/${id}/battle/plays`, { card_id: cardId });
  }

  closeSession(id: string): Promise<StorybookRefs> {
    return this.request<StorybookRefs>("POST", `/v1/sessions/${id}/close`);
  }

  getStorybook(id: string): Promise<StorybookDoc> {
    return this.request<StorybookDoc>("GET", `/v1/sessions/${id}/storybook`);
  }

  resolve(path: string | null): string | null {
    if (!path) return null;
    if (path.startsWith("http://") || path.startsWith("https://")) return path;
    return this.baseUrl + path;
  }
}
