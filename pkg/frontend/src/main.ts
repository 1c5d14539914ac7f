/** Page wiring: mode/archetype/genome pickers, the canvas, and the
 * keyboard-to-session loop. */

import { InputCapture } from "./input.js";
import { Canvas2D, renderFrame } from "./renderer.js";
import { SessionConfigMessage } from "./protocol.js";
import { ClientSessionView, connectWebSocket } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function currentConfig(): SessionConfigMessage {
  const mode = el<HTMLSelectElement>("mode").value as SessionConfigMessage["mode"];
  const archetype = parseInt(el<HTMLSelectElement>("archetype").value, 10);
  const seed = parseInt(el<HTMLInputElement>("seed").value, 10) || 0;
  const playerGenome = el<HTMLInputElement>("player-genome").value.trim() || null;
  const enemyGenome = el<HTMLInputElement>("enemy-genome").value.trim() || null;
  return {
    mode,
    enemy_archetype: mode.endsWith("static") ? archetype : null,
    player_genome_ref: playerGenome,
    enemy_genome_ref: enemyGenome,
    seed,
    pace: "realtime_30tps",
  };
}

function start(): void {
  const canvas = el<HTMLCanvasElement>("arena");
  const ctx = canvas.getContext("2d") as unknown as Canvas2D;
  const status = el<HTMLElement>("status");
  let session: ClientSessionView | null = null;
  let capture: InputCapture | null = null;

  el<HTMLButtonElement>("start").addEventListener("click", () => {
    session?.close();
    capture?.stop();
    const config = currentConfig();
    const url = `ws://${location.host}/ws`;
    const view = new ClientSessionView(connectWebSocket(url), config, {
      onOpened: (opened) => {
        canvas.width = opened.stage.arena[2];
        canvas.height = opened.stage.arena[3];
        status.textContent = `session ${opened.session_id} (${opened.mode})`;
      },
      onFrame: (frame) => {
        if (view.stage) renderFrame(ctx, view.stage, frame);
        capture?.noteTick(frame.tick);
      },
      onEnd: (winner, summary) => {
        status.textContent =
          `ended: winner=${winner} player=${summary.player_energy} ` +
          `enemy=${summary.enemy_energy} ticks=${summary.ticks}`;
        capture?.stop();
      },
      onError: (reason) => {
        status.textContent = `error: ${reason}`;
      },
      onStateChange: (state) => {
        if (state === "error") status.textContent = "connection error";
      },
    });
    session = view;
    if (config.mode.startsWith("human")) {
      capture = new InputCapture((msg) => view.sendInput(msg));
      capture.attach(window);
    }
  });
}

window.addEventListener("DOMContentLoaded", start);
