// Thin typed wrapper over the play service's JSON API. All game logic lives
// on the server; this module only moves payloads.

import type {
  AnswerResponse,
  CreateResponse,
  MoveResponse,
  SessionView,
} from "./state.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function throwFrom(res: Response): Promise<never> {
  let code = "http_error";
  let message = `${res.status} ${res.statusText}`;
  try {
    const doc = await res.json();
    if (doc && typeof doc === "object") {
      code = String(doc.code ?? code);
      message = String(doc.message ?? message);
    }
  } catch {
    // non-JSON error body: keep the status line
  }
  throw new ApiError(res.status, code, message);
}

export interface Api {
  createSession(): Promise<CreateResponse>;
  nextMove(sessionId: string): Promise<MoveResponse>;
  postAnswer(
    sessionId: string,
    body: { text?: string; verdict?: "correct" | "wrong" },
  ): Promise<AnswerResponse>;
  getState(sessionId: string): Promise<SessionView>;
  deleteSession(sessionId: string): Promise<void>;
}

export class ApiClient implements Api {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined
          ? undefined
          : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "network", `cannot reach server: ${err}`);
    }
    if (!res.ok) {
      await throwFrom(res);
    }
    if (res.status === 204) {
      return undefined as T;
    }
    return (await res.json()) as T;
  }

  createSession(): Promise<CreateResponse> {
    return this.request("POST", "/sessions");
  }

  nextMove(sessionId: string): Promise<MoveResponse> {
    return this.request("GET", `/sessions/${sessionId}/move`);
  }

  postAnswer(
    sessionId: string,
    body: { text?: string; verdict?: "correct" | "wrong" },
  ): Promise<AnswerResponse> {
    return this.request("POST", `/sessions/${sessionId}/answer`, body);
  }

  getState(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request("DELETE", `/sessions/${sessionId}`);
  }
}
