/** Typed client for the listening-test service API. */

export type Choice = "A" | "B" | "none";

export interface TrialInfo {
  index: number;
  audio_a_url: string;
  audio_b_url: string;
}

export interface SessionCreated {
  session_id: string;
  trials: TrialInfo[];
}

export interface SessionStateDoc extends SessionCreated {
  answered: number[];
  completed: boolean;
  next_trial: number | null;
}

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(): Promise<SessionCreated> {
    const response = await this.fetchFn(this.url("/api/sessions"), { method: "POST" });
    if (response.status !== 201) {
      throw new ApiError(response.status, `session creation failed (${response.status})`);
    }
    return (await response.json()) as SessionCreated;
  }

  async getSession(sessionId: string): Promise<SessionStateDoc> {
    const response = await this.fetchFn(this.url(`/api/sessions/${sessionId}`));
    if (!response.ok) {
      throw new ApiError(response.status, `session lookup failed (${response.status})`);
    }
    return (await response.json()) as SessionStateDoc;
  }

  /**
   * Submit one choice. A 409 means the trial was already answered (for
   * example a double click or a resent request); callers treat it as done.
   */
  async submitResponse(
    sessionId: string,
    trial: number,
    choice: Choice,
  ): Promise<"recorded" | "duplicate"> {
    const response = await this.fetchFn(this.url(`/api/sessions/${sessionId}/responses`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ trial, choice }),
    });
    if (response.status === 204) return "recorded";
    if (response.status === 409) return "duplicate";
    throw new ApiError(response.status, `response rejected (${response.status})`);
  }
}
