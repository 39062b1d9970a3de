import { describe, expect, it } from "vitest";

import { PlaybackTracker } from "../src/player.js";

describe("PlaybackTracker", () => {
  it("requires 90% of the duration by default", () => {
    const tracker = new PlaybackTracker();
    tracker.setDuration(10);
    for (let t = 0; t <= 8.9; t += 0.25) tracker.tick(t);
    expect(tracker.playedEnough).toBe(false);
    for (let t = 9.0; t <= 10; t += 0.25) tracker.tick(t);
    expect(tracker.playedEnough).toBe(true);
  });

  it("gives no credit for seeking ahead", () => {
    const tracker = new PlaybackTracker();
    tracker.setDuration(100);
    tracker.tick(0);
    tracker.tick(95); // jump: a seek, not listening
    expect(tracker.listenedSeconds).toBe(0);
    expect(tracker.playedEnough).toBe(false);
  });

  it("accumulates across pauses", () => {
    const tracker = new PlaybackTracker(0.5);
    tracker.setDuration(10);
    for (let t = 0; t <= 3; t += 0.5) tracker.tick(t);
    tracker.interrupt(); // pause
    for (let t = 3; t <= 6; t += 0.5) tracker.tick(t);
    expect(tracker.listenedSeconds).toBeCloseTo(6, 1);
    expect(tracker.playedEnough).toBe(true);
  });

  it("is not satisfied before the duration is known", () => {
    const tracker = new PlaybackTracker();
    tracker.tick(0);
    tracker.tick(1);
    expect(tracker.playedEnough).toBe(false);
  });

  it("honors a configurable threshold", () => {
    const tracker = new PlaybackTracker(0.3);
    tracker.setDuration(10);
    for (let t = 0; t <= 3.2; t += 0.2) tracker.tick(t);
    expect(tracker.playedEnough).toBe(true);
  });

  it("replaying after the threshold keeps it satisfied", () => {
    const tracker = new PlaybackTracker(0.5);
    tracker.setDuration(4);
    for (let t = 0; t <= 4; t += 0.2) tracker.tick(t);
    expect(tracker.playedEnough).toBe(true);
    tracker.interrupt();
    tracker.tick(0);
    tracker.tick(0.5);
    expect(tracker.playedEnough).toBe(true);
  });
});
