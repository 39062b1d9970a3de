/**
 * Scripted end-to-end session against the real service.
 *
 * Spawns the Python service on a 2-story x 1-comparison manifest, drives the
 * UI in jsdom with real fetch calls, and then checks the server-side records
 * and the analyze command.
 */

import { execFile, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AbxApp } from "../src/app.js";
import { PlayerLike } from "../src/player.js";

const execFileAsync = promisify(execFile);

const CONDITIONS = ["modelless_system", "comma_system"];

function makeWavBytes(): Buffer {
  const sampleRate = 16000;
  const frames = 1600;
  const dataSize = frames * 2;
  const header = Buffer.alloc(44);
  header.write("RIFF", 0);
  header.writeUInt32LE(36 + dataSize, 4);
  header.write("WAVE", 8);
  header.write("fmt ", 12);
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20); // PCM
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(sampleRate, 24);
  header.writeUInt32LE(sampleRate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write("data", 36);
  header.writeUInt32LE(dataSize, 40);
  return Buffer.concat([header, Buffer.alloc(dataSize)]);
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      const port = address.port;
      server.close(() => resolve(port));
    });
  });
}

async function waitForService(baseUrl: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/api/export`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("service did not come up in time");
}

async function waitFor(condition: () => boolean, timeoutMs = 10_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (condition()) return;
    await new Promise((resolve) => setTimeout(resolve, 20));
  }
  throw new Error("condition not met in time");
}

/**
 * Player that fetches the real audio bytes before counting as listened
 * (jsdom has no real media pipeline). Exposes a clickable Play button so the
 * test drives it exactly like a listener would.
 */
class ScriptedPlayer implements PlayerLike {
  element = document.createElement("div");
  playedEnough = false;
  failed = false;
  onUpdate?: () => void;
  onPlay?: () => void;

  constructor(private readonly url: string, label: string, private readonly baseUrl: string) {
    this.element.className = "sample";
    const title = document.createElement("h2");
    title.textContent = label;
    const button = document.createElement("button");
    button.type = "button";
    button.className = "play";
    button.textContent = "Play";
    button.addEventListener("click", () => this.play());
    this.element.append(title, button);
  }

  play(): void {
    this.onPlay?.();
    void fetch(`${this.baseUrl}${this.url}`).then((response) => {
      if (response.ok && response.headers.get("content-type") === "audio/wav") {
        this.playedEnough = true;
      } else {
        this.failed = true;
      }
      this.onUpdate?.();
    });
  }

  pause(): void {}
  retry(): void {}
}

describe("scripted session against the live service", () => {
  let service: ChildProcess;
  let baseUrl: string;
  let workDir: string;
  let responsesPath: string;

  beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "abx-e2e-"));
    const stories = [];
    for (const story of ["story0", "story1"]) {
      const audio: Record<string, string> = {};
      for (const condition of CONDITIONS) {
        const name = `${story}_${condition}.wav`;
        writeFileSync(join(workDir, name), makeWavBytes());
        audio[condition] = name;
      }
      stories.push({ story_id: story, condition_audio: audio });
    }
    const manifestPath = join(workDir, "manifest.json");
    writeFileSync(
      manifestPath,
      JSON.stringify({ stories, comparisons: [CONDITIONS] }),
    );
    responsesPath = join(workDir, "responses.jsonl");

    const port = await freePort();
    baseUrl = `http://127.0.0.1:${port}`;
    service = spawn(
      "python3",
      [
        "-m", "phrasebreak.cli", "abx", "serve",
        "--manifest", manifestPath,
        "--port", String(port),
        "--responses", responsesPath,
      ],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    await waitForService(baseUrl);
  });

  afterAll(() => {
    service?.kill("SIGTERM");
  });

  it("completes a 2-trial session, blinded, with 2 records server-side", async () => {
    document.body.innerHTML = "<main id='app'></main>";
    const root = document.getElementById("app") as HTMLElement;
    const app = new AbxApp({
      root,
      api: new ApiClient(baseUrl),
      createPlayer: (url, label) => new ScriptedPlayer(url, label, baseUrl),
    });
    await app.start();

    const choices = ["A", "B"];
    for (let trial = 0; trial < 2; trial += 1) {
      await waitFor(() => root.textContent?.includes(`Trial ${trial + 1} of 2`) ?? false);

      // Blinding: condition identities never appear anywhere in the DOM.
      for (const condition of CONDITIONS) {
        expect(document.body.innerHTML).not.toContain(condition);
      }
      expect(root.textContent).toContain("Sample A");
      expect(root.textContent).toContain("Sample B");

      const submit = root.querySelector(".submit") as HTMLButtonElement;
      expect(submit.disabled).toBe(true);

      // Listen to both samples; the scripted player fetches real audio bytes.
      const playButtons = root.querySelectorAll<HTMLButtonElement>(".sample .play");
      expect(playButtons).toHaveLength(2);
      for (const button of playButtons) button.click();

      const radio = root.querySelector(
        `input[value="${choices[trial]}"]`,
      ) as HTMLInputElement;
      radio.click();
      await waitFor(() => !(root.querySelector(".submit") as HTMLButtonElement).disabled);
      (root.querySelector(".submit") as HTMLButtonElement).click();
    }

    await waitFor(() => root.textContent?.includes("All done") ?? false);

    const lines = readFileSync(responsesPath, "utf-8")
      .split("\n")
      .filter((line) => line.trim().length > 0);
    expect(lines).toHaveLength(2);
    const records = lines.map((line) => JSON.parse(line));
    for (const record of records) {
      expect(record.condition_a).toBe("modelless_system");
      expect(record.condition_b).toBe("comma_system");
      expect(CONDITIONS).toContain(record.preference);
    }
    expect(new Set(records.map((r) => r.trial)).size).toBe(2);
  });

  it("abx analyze parses the exported responses", async () => {
    const reportPath = join(workDir, "report.json");
    const { stdout } = await execFileAsync("python3", [
      "-m", "phrasebreak.cli", "abx", "analyze",
      "--responses", responsesPath,
      "--out", reportPath,
    ]);
    expect(stdout).toContain("ABX preferences");
    const report = JSON.parse(readFileSync(reportPath, "utf-8"));
    expect(report.abx).toHaveLength(1);
    const entry = report.abx[0];
    expect(entry.counts.a + entry.counts.b + entry.counts.none).toBe(2);
    expect(entry.variants).toHaveLength(2);
  });
});
