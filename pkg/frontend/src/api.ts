// Typed client for the depolarization service. Every number the editor
// displays comes out of these response payloads; the client never scores
// anything locally.

export interface Scores {
  polarity_before: number;
  polarity: number;
  fluency: number;
  reward: number;
  steps: number;
}

export interface Candidate {
  word: string;
  distance: number;
  polarity_delta: number;
  fluency: number;
}

export interface Suggestion {
  position: number;
  word: string;
  z: number;
  candidates: Candidate[];
}

export interface Replacement {
  position: number;
  old: string;
  new: string;
}

export interface AuditEntry {
  position: number;
  choice: string | null;
}

export interface SessionPayload {
  session_id: string;
  version: number;
  topic: string;
  ideology: string;
  tokens: string[];
  original_tokens: string[];
  scores: Scores;
  replacements: Replacement[];
  audit: AuditEntry[];
  suggestions: Suggestion[];
}

export interface ApplyResponse {
  session_id: string;
  version: number;
  scores: Scores;
  replacements: Replacement[];
}

export interface AnalyzeResponse {
  paragraph_polarity: number;
  polar: { pos: number; word: string; z: number }[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: unknown,
  ) {
    super(`service error ${status}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let body: unknown = null;
      try {
        body = await resp.json();
      } catch {
        body = await resp.text().catch(() => null);
      }
      throw new ApiError(resp.status, body);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(text: string, topic: string, ideology: string): Promise<SessionPayload> {
    return this.post<SessionPayload>("/v1/sessions", { text, topic, ideology });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request<SessionPayload>(`/v1/sessions/${sessionId}`);
  }

  applyChoice(
    sessionId: string,
    position: number,
    choice: string | null,
    version?: number,
  ): Promise<ApplyResponse> {
    return this.post<ApplyResponse>(`/v1/sessions/${sessionId}/apply`, {
      position,
      choice,
      version,
    });
  }

  analyze(text: string, topic: string, ideology: string): Promise<AnalyzeResponse> {
    return this.post<AnalyzeResponse>("/v1/analyze", { text, topic, ideology });
  }

  async exportText(sessionId: string): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/sessions/${sessionId}/export`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text().catch(() => null));
    }
    return await resp.text();
  }
}
