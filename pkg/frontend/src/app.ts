/**
 * One-trial-at-a-time ABX flow.
 *
 * The UI shows only "Sample A" and "Sample B": no condition names, model
 * identities, or transcripts ever reach the DOM. Submission unlocks after
 * both samples have been listened to and exactly one choice is selected;
 * there is no back navigation and answers cannot be edited.
 */

import { ApiClient, Choice, TrialInfo } from "./api.js";
import { KeyValueStore, SessionController } from "./session.js";
import { DEFAULT_PLAY_THRESHOLD, PlayerLike, SamplePlayer } from "./player.js";

export interface AppOptions {
  root: HTMLElement;
  api?: ApiClient;
  storage?: KeyValueStore;
  playThreshold?: number;
  createPlayer?: (url: string, label: string) => PlayerLike;
}

const CHOICE_LABELS: Array<{ value: Choice; label: string }> = [
  { value: "A", label: "Prefer Sample A" },
  { value: "B", label: "Prefer Sample B" },
  { value: "none", label: "No preference" },
];

export class AbxApp {
  private readonly root: HTMLElement;
  private readonly controller: SessionController;
  private readonly createPlayer: (url: string, label: string) => PlayerLike;
  private selected: Choice | null = null;
  private players: PlayerLike[] = [];
  private submitting = false;

  constructor(options: AppOptions) {
    this.root = options.root;
    const api = options.api ?? new ApiClient("");
    this.controller = new SessionController(api, { storage: options.storage });
    const threshold = options.playThreshold ?? DEFAULT_PLAY_THRESHOLD;
    this.createPlayer =
      options.createPlayer ?? ((url, label) => new SamplePlayer(url, label, { threshold }));
  }

  async start(): Promise<void> {
    this.renderMessage("Connecting to the listening test…");
    try {
      await this.controller.start();
    } catch (error) {
      this.renderStartError();
      return;
    }
    this.renderCurrent();
  }

  private renderCurrent(): void {
    const trial = this.controller.currentTrial();
    if (trial === null) this.renderComplete();
    else this.renderTrial(trial);
  }

  private clear(): void {
    this.root.textContent = "";
    this.players = [];
    this.selected = null;
    this.submitting = false;
  }

  private renderMessage(text: string): void {
    this.clear();
    const p = document.createElement("p");
    p.textContent = text;
    this.root.append(p);
  }

  private renderStartError(): void {
    this.clear();
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = "Could not reach the test service.";
    const retry = document.createElement("button");
    retry.type = "button";
    retry.textContent = "Try again";
    retry.addEventListener("click", () => void this.start());
    banner.append(" ", retry);
    this.root.append(banner);
  }

  private renderComplete(): void {
    this.clear();
    const done = document.createElement("div");
    done.className = "complete";
    const heading = document.createElement("h1");
    heading.textContent = "All done";
    const thanks = document.createElement("p");
    thanks.textContent = "Every comparison has been answered. Thank you for listening!";
    done.append(heading, thanks);
    this.root.append(done);
  }

  private renderTrial(trial: TrialInfo): void {
    this.clear();
    const progress = this.controller.progress();

    const header = document.createElement("p");
    header.className = "progress";
    header.textContent = `Trial ${progress.completed + 1} of ${progress.total}`;

    const instructions = document.createElement("p");
    instructions.textContent =
      "Listen to both samples in full, then pick the one you prefer.";

    const playerA = this.createPlayer(trial.audio_a_url, "Sample A");
    const playerB = this.createPlayer(trial.audio_b_url, "Sample B");
    this.players = [playerA, playerB];
    // Only one sample may play at a time.
    playerA.onPlay = () => playerB.pause();
    playerB.onPlay = () => playerA.pause();

    const samples = document.createElement("div");
    samples.className = "samples";
    samples.append(playerA.element, playerB.element);

    const form = document.createElement("form");
    form.className = "choices";
    for (const { value, label } of CHOICE_LABELS) {
      const wrapper = document.createElement("label");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = "choice";
      radio.value = value;
      radio.addEventListener("change", () => {
        this.selected = value;
        this.refreshSubmit(submit);
      });
      wrapper.append(radio, ` ${label}`);
      form.append(wrapper);
    }

    const submit = document.createElement("button");
    submit.type = "button";
    submit.className = "submit";
    submit.textContent = "Submit choice";
    submit.disabled = true;
    submit.addEventListener("click", () => void this.handleSubmit(submit));

    for (const player of this.players) {
      player.onUpdate = () => this.refreshSubmit(submit);
    }

    this.root.append(header, instructions, samples, form, submit);
  }

  private refreshSubmit(submit: HTMLButtonElement): void {
    const bothPlayed = this.players.every((p) => p.playedEnough);
    submit.disabled = this.submitting || !bothPlayed || this.selected === null;
  }

  private async handleSubmit(submit: HTMLButtonElement): Promise<void> {
    if (this.submitting || this.selected === null) return;
    this.submitting = true;
    submit.disabled = true;
    for (const player of this.players) player.pause();
    try {
      await this.controller.submit(this.selected);
    } catch (error) {
      this.submitting = false;
      this.refreshSubmit(submit);
      submit.textContent = "Submit failed, try again";
      return;
    }
    this.renderCurrent();
  }
}
