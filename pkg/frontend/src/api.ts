import type { AnswerPayload, Transcript } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function expectJson<T>(response: Response, what: string): Promise<T> {
  if (!response.ok) {
    throw new ApiError(`${what} failed (${response.status})`, response.status);
  }
  return (await response.json()) as T;
}

/** Thin client over the documented chat endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async createSession(): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/sessions`, { method: "POST" });
    const body = await expectJson<{ session_id: string }>(response, "session creation");
    return body.session_id;
  }

  async getTranscript(sessionId: string): Promise<Transcript> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/sessions/${sessionId}`);
    return expectJson<Transcript>(response, "transcript fetch");
  }

  async sendMessage(sessionId: string, text: string): Promise<AnswerPayload> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    return expectJson<AnswerPayload>(response, "message");
  }

  traceEventsUrl(traceId: string): string {
    return `${this.baseUrl}/api/traces/${traceId}/events`;
  }
}

export type StorageLike = Pick<Storage, "getItem" | "setItem" | "removeItem">;

const SESSION_KEY = "grasp.session_id";

/**
 * Reuse the stored session if the server still knows it (so a page reload
 * keeps the conversation); otherwise start a fresh one.
 */
export async function restoreOrCreateSession(
  client: ApiClient,
  storage: StorageLike,
): Promise<{ sessionId: string; transcript: Transcript | null }> {
  const stored = storage.getItem(SESSION_KEY);
  if (stored) {
    try {
      const transcript = await client.getTranscript(stored);
      return { sessionId: stored, transcript };
    } catch (error) {
      if (!(error instanceof ApiError && error.status === 404)) {
        throw error;
      }
      storage.removeItem(SESSION_KEY);
    }
  }
  const sessionId = await client.createSession();
  storage.setItem(SESSION_KEY, sessionId);
  return { sessionId, transcript: null };
}
