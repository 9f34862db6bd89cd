/**
 * Thin fetch client for the qrefine exploration API.
 *
 * A 503 is not an error here: the server sends the best incumbent it found
 * before the solver budget ran out, flagged `status: "budget-exceeded"` in
 * the body, and the UI renders it with a badge instead of crashing.
 */

import type {
  CreateSessionResponse,
  NodeView,
  RefinementRecord,
  SessionSnapshot,
  TypeSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class ExplorerClient {
  constructor(private baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (response.status === 503) {
      return response.json() as Promise<T>; // partial result, flagged in body
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response.json() as Promise<T>;
  }

  private post<T>(path: string, body?: object): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  searchTypes(prefix: string, limit = 20): Promise<TypeSummary[]> {
    const params = new URLSearchParams({ prefix, limit: String(limit) });
    return this.request<TypeSummary[]>(`/types?${params}`);
  }

  createSession(query: string, k?: number): Promise<CreateSessionResponse> {
    return this.post<CreateSessionResponse>("/sessions", k ? { query, k } : { query });
  }

  drill(sessionId: string, choice: string): Promise<NodeView> {
    return this.post<NodeView>(`/sessions/${sessionId}/drill`, { choice });
  }

  goBack(sessionId: string): Promise<NodeView> {
    return this.post<NodeView>(`/sessions/${sessionId}/back`);
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request<SessionSnapshot>(`/sessions/${sessionId}`);
  }

  refinements(
    query: string,
    method: string,
    k = 5,
    seed = 0,
  ): Promise<RefinementRecord> {
    const params = new URLSearchParams({ method, k: String(k), seed: String(seed) });
    return this.request<RefinementRecord>(
      `/queries/${encodeURIComponent(query)}/refinements?${params}`,
    );
  }
}
