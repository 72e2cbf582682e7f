// Thin fetch wrapper around the chat service API.
//
// Every failure, HTTP or network, is normalized into ApiError so callers
// branch on `code` instead of sniffing response objects.

import type {
  ApiErrorBody,
  AskResponse,
  SearchResponse,
  SessionDetail,
  SessionInfo,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody | null = null;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error page; keep the status as the only signal
  }
  if (body && typeof body.code === "string") {
    return new ApiError(response.status, body.code, body.message, body.detail ?? {});
  }
  return new ApiError(response.status, "http_error", `HTTP ${response.status}`);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (exc) {
      throw new ApiError(0, "network_error", exc instanceof Error ? exc.message : String(exc));
    }
    if (!response.ok) {
      throw await toApiError(response);
    }
    return response;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.request(path);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; chunks: number }> {
    return this.getJson("/api/health");
  }

  listSessions(): Promise<SessionInfo[]> {
    return this.getJson("/api/sessions");
  }

  createSession(title = ""): Promise<SessionInfo> {
    return this.postJson("/api/sessions", { title });
  }

  getSession(id: string): Promise<SessionDetail> {
    return this.getJson(`/api/sessions/${encodeURIComponent(id)}`);
  }

  async deleteSession(id: string): Promise<void> {
    await this.request(`/api/sessions/${encodeURIComponent(id)}`, { method: "DELETE" });
  }

  ask(sessionId: string, question: string, k?: number): Promise<AskResponse> {
    const body: { question: string; k?: number } = { question };
    if (k !== undefined) {
      body.k = k;
    }
    return this.postJson(`/api/sessions/${encodeURIComponent(sessionId)}/ask`, body);
  }

  search(query: string, k = 5): Promise<SearchResponse> {
    return this.postJson("/api/search", { query, k });
  }
}
