/**
 * Session state machine.
 *
 * All durable state lives on the server; the only thing kept client-side is
 * the session id, so a reload resumes exactly where the server says. Trials
 * advance strictly in order and answers cannot be edited once submitted.
 */

import { ApiClient, ApiError, Choice, TrialInfo } from "./api.js";

export interface SessionProgress {
  completed: number;
  total: number;
  /** Index of the trial on screen, or null when the session is done. */
  currentIndex: number | null;
}

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const SESSION_KEY = "abx_session_id";

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export interface SessionControllerOptions {
  storage?: KeyValueStore;
  /** Attempts per submission on network failure; resends are idempotent. */
  maxAttempts?: number;
  retryDelayMs?: number;
  sleepFn?: (ms: number) => Promise<void>;
}

export class SessionController {
  private sessionId = "";
  private trials: TrialInfo[] = [];
  private answered = new Set<number>();

  constructor(
    private readonly api: ApiClient,
    private readonly options: SessionControllerOptions = {},
  ) {}

  /**
   * Create a session, or resume the one named in storage if the server still
   * knows it. On failure nothing is kept: no partial session is ever shown.
   */
  async start(): Promise<SessionProgress> {
    const storage = this.options.storage;
    const storedId = storage?.getItem(SESSION_KEY);
    if (storedId) {
      try {
        const state = await this.api.getSession(storedId);
        this.sessionId = state.session_id;
        this.trials = state.trials;
        this.answered = new Set(state.answered);
        return this.progress();
      } catch (error) {
        if (error instanceof ApiError && error.status === 404) {
          storage?.removeItem(SESSION_KEY);
        } else {
          throw error;
        }
      }
    }
    const created = await this.api.createSession();
    this.sessionId = created.session_id;
    this.trials = created.trials;
    this.answered = new Set();
    storage?.setItem(SESSION_KEY, this.sessionId);
    return this.progress();
  }

  progress(): SessionProgress {
    return {
      completed: this.answered.size,
      total: this.trials.length,
      currentIndex: this.currentIndex(),
    };
  }

  currentIndex(): number | null {
    for (let i = 0; i < this.trials.length; i += 1) {
      if (!this.answered.has(i)) return i;
    }
    return null;
  }

  currentTrial(): TrialInfo | null {
    const index = this.currentIndex();
    return index === null ? null : this.trials[index];
  }

  get isComplete(): boolean {
    return this.trials.length > 0 && this.answered.size === this.trials.length;
  }

  /**
   * Submit the choice for the current trial and advance.
   *
   * Network failures are retried with the same payload; the server rejects
   * duplicates with 409, which counts as success, so resending is safe. A 409
   * on first delivery (already answered elsewhere) is absorbed the same way.
   */
  async submit(choice: Choice): Promise<SessionProgress> {
    const index = this.currentIndex();
    if (index === null) throw new Error("session already complete");
    const maxAttempts = this.options.maxAttempts ?? 3;
    const delay = this.options.retryDelayMs ?? 500;
    const sleepFn = this.options.sleepFn ?? sleep;
    let lastError: unknown = null;
    for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
      try {
        await this.api.submitResponse(this.sessionId, index, choice);
        this.answered.add(index);
        return this.progress();
      } catch (error) {
        if (error instanceof ApiError) throw error; // server said no: do not loop
        lastError = error;
        if (attempt + 1 < maxAttempts) await sleepFn(delay);
      }
    }
    throw lastError instanceof Error ? lastError : new Error("submission failed");
  }
}
