/** Flat-color canvas renderer. Every drawn quantity comes from the received
 * messages; the client never simulates anything locally. */

import { CharacterView, FrameMessage, Rect, StageInfo } from "./protocol.js";

export interface Palette {
  background: string;
  platform: string;
  player: string;
  enemy: string;
  enemyImmune: string;
  playerShot: string;
  enemyShot: string;
  text: string;
  barBack: string;
  barPlayer: string;
  barEnemy: string;
}

export const PALETTE: Palette = {
  background: "#101418",
  platform: "#4a5a6a",
  player: "#3fa7ff",
  enemy: "#ff5a3f",
  enemyImmune: "#ffd23f",
  playerShot: "#9fd4ff",
  enemyShot: "#ffb09f",
  text: "#e8eef4",
  barBack: "#2a3440",
  barPlayer: "#41d38a",
  barEnemy: "#d34141",
};

export const ENERGY_BAR = { width: 220, height: 14, margin: 12 };

/** The 2D-context subset the renderer touches (mockable in tests). */
export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  font: string;
  textAlign: CanvasTextAlign;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

function fillRect(ctx: Canvas2D, rect: Rect, color: string): void {
  ctx.fillStyle = color;
  ctx.fillRect(rect[0], rect[1], rect[2] - rect[0], rect[3] - rect[1]);
}

function drawCharacter(ctx: Canvas2D, view: CharacterView, color: string): void {
  fillRect(ctx, view.rect, color);
  // facing marker: a light notch on the leading edge
  const [x0, y0, x1] = view.rect;
  const w = 5;
  const x = view.facing === "right" ? x1 - w : x0;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(x, y0 + 8, w, 8);
}

export function energyBarWidth(energy: number): number {
  const clamped = Math.max(0, Math.min(100, energy));
  return (clamped / 100) * ENERGY_BAR.width;
}

export function renderFrame(ctx: Canvas2D, stage: StageInfo, frame: FrameMessage): void {
  const [ax0, ay0, ax1, ay1] = stage.arena;
  ctx.clearRect(ax0, ay0, ax1 - ax0, ay1 - ay0);
  fillRect(ctx, stage.arena, PALETTE.background);
  for (const platform of stage.platforms) {
    fillRect(ctx, platform, PALETTE.platform);
  }
  for (const shot of frame.projectiles) {
    fillRect(ctx, shot.rect,
             shot.owner === "player" ? PALETTE.playerShot : PALETTE.enemyShot);
  }
  drawCharacter(ctx, frame.player, PALETTE.player);
  drawCharacter(ctx, frame.enemy,
                frame.enemy.immune ? PALETTE.enemyImmune : PALETTE.enemy);

  // energy bars: player top-left, enemy top-right
  const { width, height, margin } = ENERGY_BAR;
  ctx.fillStyle = PALETTE.barBack;
  ctx.fillRect(margin, margin, width, height);
  ctx.fillRect(ax1 - margin - width, margin, width, height);
  ctx.fillStyle = PALETTE.barPlayer;
  ctx.fillRect(margin, margin, energyBarWidth(frame.player.energy), height);
  ctx.fillStyle = PALETTE.barEnemy;
  const enemyWidth = energyBarWidth(frame.enemy.energy);
  ctx.fillRect(ax1 - margin - enemyWidth, margin, enemyWidth, height);

  ctx.fillStyle = PALETTE.text;
  ctx.font = "12px monospace";
  ctx.textAlign = "center";
  ctx.fillText(`tick ${frame.tick}`, (ax0 + ax1) / 2, margin + height);

  if (frame.terminal) {
    ctx.font = "32px monospace";
    const banner =
      frame.winner === "timeout" ? "draw: time out" : `winner: ${frame.winner}`;
    ctx.fillText(banner, (ax0 + ax1) / 2, (ay0 + ay1) / 2);
  }
}
