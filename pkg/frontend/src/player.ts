/**
 * Audio playback with listening enforcement.
 *
 * A sample counts as "played" only once the listener has actually heard at
 * least a configurable fraction (default 90%) of its duration. Listening is
 * accumulated from playback ticks; seeking ahead credits nothing.
 */

export const DEFAULT_PLAY_THRESHOLD = 0.9;

/** Largest tick-to-tick jump still counted as continuous playback. */
const MAX_TICK_DELTA_S = 2.0;

export class PlaybackTracker {
  private listenedS = 0;
  private lastTimeS: number | null = null;
  private durationS = NaN;

  constructor(private readonly threshold: number = DEFAULT_PLAY_THRESHOLD) {}

  setDuration(durationS: number): void {
    if (Number.isFinite(durationS) && durationS > 0) this.durationS = durationS;
  }

  /** Feed a playback position; only called while audio is actually playing. */
  tick(currentTimeS: number): void {
    if (this.lastTimeS !== null) {
      const delta = currentTimeS - this.lastTimeS;
      if (delta > 0 && delta <= MAX_TICK_DELTA_S) this.listenedS += delta;
    }
    this.lastTimeS = currentTimeS;
  }

  /** Call when playback pauses or the listener seeks. */
  interrupt(): void {
    this.lastTimeS = null;
  }

  get listenedSeconds(): number {
    return this.listenedS;
  }

  get playedEnough(): boolean {
    return Number.isFinite(this.durationS) && this.listenedS >= this.threshold * this.durationS;
  }
}

export interface PlayerLike {
  readonly element: HTMLElement;
  readonly playedEnough: boolean;
  readonly failed: boolean;
  play(): void;
  pause(): void;
  retry(): void;
  onUpdate?: () => void;
  onPlay?: () => void;
}

export interface SamplePlayerOptions {
  threshold?: number;
  createAudio?: (url: string) => HTMLAudioElement;
}

/** Standard play/pause audio control wired to a PlaybackTracker. */
export class SamplePlayer implements PlayerLike {
  readonly element: HTMLElement;
  onUpdate?: () => void;
  onPlay?: () => void;

  private readonly audio: HTMLAudioElement;
  private readonly tracker: PlaybackTracker;
  private readonly button: HTMLButtonElement;
  private readonly status: HTMLSpanElement;
  private loadFailed = false;

  constructor(private readonly url: string, label: string, options: SamplePlayerOptions = {}) {
    this.tracker = new PlaybackTracker(options.threshold ?? DEFAULT_PLAY_THRESHOLD);
    const createAudio = options.createAudio ?? ((src: string) => new Audio(src));
    this.audio = createAudio(url);
    this.audio.preload = "metadata";

    this.element = document.createElement("div");
    this.element.className = "sample";
    const title = document.createElement("h2");
    title.textContent = label;
    this.button = document.createElement("button");
    this.button.type = "button";
    this.button.textContent = "Play";
    this.status = document.createElement("span");
    this.status.className = "status";
    this.status.textContent = "not played yet";
    this.element.append(title, this.button, this.status);

    this.button.addEventListener("click", () => {
      if (this.loadFailed) {
        this.retry();
        return;
      }
      if (this.audio.paused) this.play();
      else this.pause();
    });
    this.audio.addEventListener("durationchange", () => {
      this.tracker.setDuration(this.audio.duration);
    });
    this.audio.addEventListener("timeupdate", () => {
      if (!this.audio.paused) this.tracker.tick(this.audio.currentTime);
      this.refresh();
    });
    this.audio.addEventListener("seeking", () => this.tracker.interrupt());
    this.audio.addEventListener("pause", () => {
      this.tracker.interrupt();
      this.refresh();
    });
    this.audio.addEventListener("ended", () => {
      this.tracker.interrupt();
      this.refresh();
    });
    this.audio.addEventListener("error", () => {
      this.loadFailed = true;
      this.refresh();
    });
  }

  get playedEnough(): boolean {
    return this.tracker.playedEnough;
  }

  get failed(): boolean {
    return this.loadFailed;
  }

  play(): void {
    this.onPlay?.();
    const result = this.audio.play();
    if (result && typeof result.catch === "function") {
      result.catch(() => {
        this.loadFailed = true;
        this.refresh();
      });
    }
    this.refresh();
  }

  pause(): void {
    this.audio.pause();
  }

  retry(): void {
    this.loadFailed = false;
    this.audio.load();
    this.refresh();
  }

  private refresh(): void {
    if (this.loadFailed) {
      this.button.textContent = "Retry";
      this.status.textContent = "could not load audio";
    } else {
      this.button.textContent = this.audio.paused ? "Play" : "Pause";
      this.status.textContent = this.playedEnough ? "listened" : "not fully listened";
    }
    this.onUpdate?.();
  }
}
