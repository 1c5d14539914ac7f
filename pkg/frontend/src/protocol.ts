/** Wire protocol shared with the session service: JSON messages over a
 * WebSocket, one message per frame/input, format_version checked on both
 * ends. */

export const PROTOCOL_FORMAT_VERSION = 1;

export type Rect = [number, number, number, number]; // x0, y0, x1, y1

export interface CharacterView {
  rect: Rect;
  energy: number;
  facing: "left" | "right";
  attacking: boolean;
  immune: boolean;
}

export interface ProjectileView {
  rect: Rect;
  owner: "player" | "enemy";
}

export interface FrameMessage {
  kind: "frame";
  format_version: number;
  tick: number;
  player: CharacterView;
  enemy: CharacterView;
  projectiles: ProjectileView[];
  terminal: boolean;
  winner: "player" | "enemy" | "timeout" | null;
}

export interface StageInfo {
  arena: Rect;
  platforms: Rect[];
  stage_id: number;
}

export interface OpenedMessage {
  kind: "opened";
  format_version: number;
  session_id: string;
  tick_limit: number;
  mode: string;
  stage: StageInfo;
}

export interface EndMessage {
  kind: "end";
  format_version: number;
  winner: "player" | "enemy" | "timeout" | null;
  ticks: number;
  player_energy: number;
  enemy_energy: number;
}

export interface ErrorMessage {
  kind: "error";
  format_version?: number;
  reason: string;
}

export interface HelloMessage {
  kind: "hello";
  format_version: number;
}

export type ServerMessage =
  | HelloMessage
  | OpenedMessage
  | FrameMessage
  | EndMessage
  | ErrorMessage;

export interface InputActions {
  left: boolean;
  right: boolean;
  jump: boolean;
  release: boolean;
  shoot: boolean;
}

export interface InputMessage {
  kind: "input";
  tick: number;
  actions: Partial<InputActions>;
}

export interface SessionConfigMessage {
  mode: "human_vs_static" | "human_vs_ai" | "ai_vs_static" | "ai_vs_ai";
  enemy_archetype?: number | null;
  player_genome_ref?: string | null;
  enemy_genome_ref?: string | null;
  seed: number;
  pace: "realtime_30tps" | "headless";
  tick_limit?: number;
}

export const idleActions = (): InputActions => ({
  left: false,
  right: false,
  jump: false,
  release: false,
  shoot: false,
});
