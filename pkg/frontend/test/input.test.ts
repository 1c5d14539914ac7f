import { describe, expect, it } from "vitest";
import { InputCapture, TICK_WINDOW_MS } from "../src/input.js";
import { InputMessage } from "../src/protocol.js";

/** Deterministic clock the capture samples instead of performance.now(). */
function harness(startAt = 1000) {
  let now = startAt;
  const sent: InputMessage[] = [];
  const capture = new InputCapture((msg) => sent.push(msg), () => now);
  return {
    capture,
    sent,
    advance(ms: number) {
      now += ms;
    },
  };
}

describe("InputCapture", () => {
  it("sends right=true while the right arrow is held", () => {
    const h = harness();
    h.capture.handleKey("ArrowRight", true);
    expect(h.sent.length).toBe(1);
    expect(h.sent[0].actions.right).toBe(true);
    for (let i = 0; i < 5; i++) {
      h.advance(TICK_WINDOW_MS + 1);
      h.capture.maybeSend();
    }
    expect(h.sent.length).toBe(6);
    expect(h.sent.every((m) => m.actions.right === true)).toBe(true);
  });

  it("emits exactly one release when the jump key goes up", () => {
    const h = harness();
    h.capture.handleKey("KeyZ", true);
    h.advance(TICK_WINDOW_MS + 1);
    h.capture.handleKey("KeyZ", false);
    const withRelease = h.sent.filter((m) => m.actions.release === true);
    expect(withRelease.length).toBe(1);
    // later windows never repeat the release
    for (let i = 0; i < 4; i++) {
      h.advance(TICK_WINDOW_MS + 1);
      h.capture.maybeSend();
    }
    expect(h.sent.filter((m) => m.actions.release === true).length).toBe(1);
  });

  it("queues the release even when key-up lands mid-window", () => {
    const h = harness();
    h.capture.handleKey("KeyZ", true); // sends immediately
    h.advance(TICK_WINDOW_MS / 4);
    h.capture.handleKey("KeyZ", false); // inside the same window: queued
    expect(h.sent.filter((m) => m.actions.release === true).length).toBe(0);
    h.advance(TICK_WINDOW_MS);
    h.capture.maybeSend(); // the poller flush
    const releases = h.sent.filter((m) => m.actions.release === true);
    expect(releases.length).toBe(1);
  });

  it("throttles to at most one message per tick window", () => {
    const h = harness();
    h.capture.handleKey("ArrowLeft", true);
    for (let i = 0; i < 10; i++) {
      h.advance(1);
      h.capture.maybeSend();
    }
    expect(h.sent.length).toBe(1);
    h.advance(TICK_WINDOW_MS);
    h.capture.maybeSend();
    expect(h.sent.length).toBe(2);
  });

  it("suppresses idle windows entirely", () => {
    const h = harness();
    for (let i = 0; i < 5; i++) {
      h.advance(TICK_WINDOW_MS + 1);
      h.capture.maybeSend();
    }
    expect(h.sent.length).toBe(0);
  });

  it("ignores unbound keys", () => {
    const h = harness();
    expect(h.capture.handleKey("KeyQ", true)).toBe(false);
    expect(h.sent.length).toBe(0);
  });

  it("left and right can be held together", () => {
    const h = harness();
    h.capture.handleKey("ArrowLeft", true);
    h.advance(TICK_WINDOW_MS + 1);
    h.capture.handleKey("ArrowRight", true);
    const last = h.sent[h.sent.length - 1];
    expect(last.actions.left).toBe(true);
    expect(last.actions.right).toBe(true);
  });
});
