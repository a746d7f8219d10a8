/**
 * Thin typed client over the annotation service JSON API.
 * The UI talks to the service and nothing else; no direct file access.
 */

export interface CandidatePayload {
  kind: "single" | "pair";
  ids: string[];
  image_urls: string[];
  label?: string;
}

export interface NextResponse {
  candidate?: CandidatePayload;
  question?: string;
  status?: string;
  annotated_count?: number;
}

export interface AnswerResponse {
  status: string;
  annotated_count: number;
}

export interface SessionStatus {
  session_id: string;
  annotator: string;
  dataset: string;
  noise_type: string;
  status: string;
  annotated_count: number;
  pool_size: number;
  n_clean: number;
}

export interface CreatedSession {
  session_id: string;
  n_clean: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private fetchFn: FetchLike;

  constructor(
    public readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      const err = body?.error ?? {};
      throw new ApiError(resp.status, err.code ?? "unknown", err.message ?? resp.statusText);
    }
    return body as T;
  }

  createSession(
    dataset: string,
    noiseType: string,
    annotator: string,
  ): Promise<CreatedSession> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ dataset, noise_type: noiseType, annotator }),
    });
  }

  next(sessionId: string): Promise<NextResponse> {
    return this.request(`/sessions/${sessionId}/next`);
  }

  answer(sessionId: string, ids: string[], verdict: "yes" | "no"): Promise<AnswerResponse> {
    return this.request(`/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ids, verdict }),
    });
  }

  status(sessionId: string): Promise<SessionStatus> {
    return this.request(`/sessions/${sessionId}/status`);
  }
}
