/** Keyboard capture for the human-player loop.
 *
 * Arrow keys move, Z jumps (its key-up emits exactly one `release`, matching
 * the engine's jump-interrupt semantics), X shoots. Messages go out at most
 * once per tick window; fully idle windows are suppressed because the server
 * treats a silent window as idle anyway.
 */

import { InputActions, InputMessage, idleActions } from "./protocol.js";

export const TICK_WINDOW_MS = 1000 / 30;

export const KEY_BINDINGS: Record<string, keyof InputActions> = {
  ArrowLeft: "left",
  ArrowRight: "right",
  KeyZ: "jump",
  KeyX: "shoot",
};

export type InputSink = (msg: InputMessage) => void;

export class InputCapture {
  private held = new Set<keyof InputActions>();
  private releaseQueued = false;
  private lastSent = -Infinity;
  private tick = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private sink: InputSink,
    private now: () => number = () => performance.now(),
  ) {}

  /** Feed a key event; returns true when the key is bound. */
  handleKey(code: string, down: boolean): boolean {
    const action = KEY_BINDINGS[code];
    if (!action) return false;
    if (down) {
      this.held.add(action);
    } else {
      this.held.delete(action);
      if (action === "jump") this.releaseQueued = true;
    }
    this.maybeSend();
    return true;
  }

  noteTick(tick: number): void {
    this.tick = tick;
  }

  /** Current action snapshot: held keys plus a queued one-shot release. */
  snapshot(): InputActions {
    const actions = idleActions();
    for (const key of this.held) actions[key] = true;
    if (this.releaseQueued) actions.release = true;
    return actions;
  }

  /** Send at most once per tick window; idle windows stay silent. */
  maybeSend(): void {
    const t = this.now();
    if (t - this.lastSent < TICK_WINDOW_MS) return;
    const actions = this.snapshot();
    if (!actions.left && !actions.right && !actions.jump &&
        !actions.shoot && !actions.release) {
      return;
    }
    this.releaseQueued = false;
    this.lastSent = t;
    this.sink({ kind: "input", tick: this.tick, actions });
  }

  /** Keep sampling while keys are held, independent of key-repeat events. */
  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => this.maybeSend(), TICK_WINDOW_MS / 2);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.held.clear();
    this.releaseQueued = false;
  }

  attach(target: { addEventListener: Window["addEventListener"] }): void {
    target.addEventListener("keydown", (ev) => {
      const handled = this.handleKey((ev as KeyboardEvent).code, true);
      if (handled) (ev as KeyboardEvent).preventDefault();
    });
    target.addEventListener("keyup", (ev) => {
      const handled = this.handleKey((ev as KeyboardEvent).code, false);
      if (handled) (ev as KeyboardEvent).preventDefault();
    });
    this.start();
  }
}
