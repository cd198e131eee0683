// Shared fixtures: a canned session payload and an in-memory fake service
// that mirrors the HTTP contract (token-for-token replacement, audit log,
// optimistic versioning, plain-text export).

import type {
  AnalyzeResponse,
  ApplyResponse,
  AuditEntry,
  SessionPayload,
  Scores,
  Suggestion,
} from "../src/api.js";

export const TOKENS = ["the", "harsh", "rally", "drew", "harsh", "crowds"];

export const SUGGESTIONS: Suggestion[] = [
  {
    position: 1,
    word: "harsh",
    z: 2.0,
    candidates: [
      { word: "firm", distance: 0.1, polarity_delta: -2.0, fluency: 0.8 },
      { word: "stern", distance: 0.2, polarity_delta: -1.2, fluency: 0.8 },
    ],
  },
  {
    position: 4,
    word: "harsh",
    z: 2.0,
    candidates: [{ word: "firm", distance: 0.1, polarity_delta: -2.0, fluency: 0.8 }],
  },
];

const Z: Record<string, number> = { harsh: 2.0, stern: 0.8 };

function polarity(tokens: string[]): number {
  return tokens.reduce((sum, tok) => sum + (Z[tok] && Z[tok] > 0 ? Z[tok] : 0), 0);
}

function scores(tokens: string[], original: string[]): Scores {
  const steps = tokens.filter((tok, i) => tok !== original[i]).length;
  const pol = polarity(tokens);
  const fluency = steps === 0 ? 1.0 : Math.max(0.1, 1.0 - 0.1 * steps);
  return {
    polarity_before: polarity(original),
    polarity: pol,
    fluency,
    reward: (-pol + fluency) / (steps + 0.01),
    steps,
  };
}

export class FakeService {
  sessions = new Map<
    string,
    { original: string[]; tokens: string[]; audit: AuditEntry[]; version: number }
  >();
  private nextId = 0;

  createSession(text: string): SessionPayload {
    const original = text.split(/\s+/).filter(Boolean);
    const id = `s${this.nextId++}`;
    this.sessions.set(id, { original, tokens: [...original], audit: [], version: 0 });
    const suggestions = SUGGESTIONS.filter((s) => original[s.position] === s.word);
    return {
      session_id: id,
      version: 0,
      topic: "energy",
      ideology: "liberal",
      tokens: [...original],
      original_tokens: [...original],
      scores: scores(original, original),
      replacements: [],
      audit: [],
      suggestions,
    };
  }

  apply(id: string, position: number, choice: string | null, version?: number): ApplyResponse {
    const session = this.sessions.get(id);
    if (!session) {
      throw Object.assign(new Error("unknown session"), { status: 404 });
    }
    if (version !== undefined && version !== session.version) {
      throw Object.assign(new Error("conflict"), { status: 409 });
    }
    session.tokens[position] = choice === null ? session.original[position] : choice;
    session.version += 1;
    session.audit.push({ position, choice });
    return {
      session_id: id,
      version: session.version,
      scores: scores(session.tokens, session.original),
      replacements: session.tokens
        .map((tok, i) => ({ position: i, old: session.original[i], new: tok }))
        .filter((r) => r.old !== r.new),
    };
  }

  exportText(id: string): string {
    const session = this.sessions.get(id);
    if (!session) {
      throw Object.assign(new Error("unknown session"), { status: 404 });
    }
    return session.tokens.join(" ");
  }

  analyze(text: string): AnalyzeResponse {
    const tokens = text.split(/\s+/).filter(Boolean);
    const polar = tokens
      .map((tok, pos) => ({ pos, word: tok, z: Z[tok] ?? 0 }))
      .filter((item) => item.z > 0);
    return { paragraph_polarity: polar.reduce((s, item) => s + item.z, 0), polar };
  }

  audit(id: string): AuditEntry[] {
    return [...(this.sessions.get(id)?.audit ?? [])];
  }
}

/** fetch-compatible wrapper so ApiClient can talk to the fake in tests. */
export function fakeFetch(service: FakeService) {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://fake");
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    try {
      if (url.pathname === "/v1/sessions" && init?.method === "POST") {
        return json(service.createSession(body.text));
      }
      const applyMatch = url.pathname.match(/^\/v1\/sessions\/([^/]+)\/apply$/);
      if (applyMatch && init?.method === "POST") {
        return json(service.apply(applyMatch[1], body.position, body.choice, body.version ?? undefined));
      }
      const exportMatch = url.pathname.match(/^\/v1\/sessions\/([^/]+)\/export$/);
      if (exportMatch) {
        return new Response(service.exportText(exportMatch[1]), {
          status: 200,
          headers: { "content-type": "text/plain" },
        });
      }
      if (url.pathname === "/v1/analyze" && init?.method === "POST") {
        return json(service.analyze(body.text));
      }
      return json({ error: "not found" }, 404);
    } catch (err) {
      const status = (err as { status?: number }).status ?? 500;
      return json({ error: String(err) }, status);
    }
  };
}

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}
