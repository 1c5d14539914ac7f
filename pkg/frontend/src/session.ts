/** Client session state machine: connect, open, stream frames, forward
 * inputs. Transport is injected so tests can run a loopback socket. */

import {
  FrameMessage,
  InputMessage,
  OpenedMessage,
  PROTOCOL_FORMAT_VERSION,
  ServerMessage,
  SessionConfigMessage,
  StageInfo,
} from "./protocol.js";

/** Minimal bidirectional text socket (WebSocket-compatible). */
export interface TextSocket {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export type ConnectionState =
  | "connecting"
  | "open_sent"
  | "streaming"
  | "ended"
  | "error";

export interface SessionEvents {
  onFrame?: (frame: FrameMessage) => void;
  onOpened?: (opened: OpenedMessage) => void;
  onEnd?: (winner: string | null, summary: Record<string, unknown>) => void;
  onError?: (reason: string) => void;
  onStateChange?: (state: ConnectionState) => void;
}

export class ClientSessionView {
  state: ConnectionState = "connecting";
  stage: StageInfo | null = null;
  latestFrame: FrameMessage | null = null;
  sessionId: string | null = null;
  humanMode = false;

  constructor(
    private socket: TextSocket,
    private config: SessionConfigMessage,
    private events: SessionEvents = {},
    private replayPath: string | null = null,
  ) {
    this.humanMode = config.mode.startsWith("human");
    socket.onmessage = (ev) => this.handleMessage(ev.data);
    socket.onclose = () => this.setState(this.state === "ended" ? "ended" : "error");
    socket.onerror = () => this.setState("error");
  }

  private setState(state: ConnectionState): void {
    this.state = state;
    this.events.onStateChange?.(state);
  }

  sendInput(msg: InputMessage): void {
    if (this.state === "streaming" && this.humanMode) {
      this.socket.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.socket.close();
  }

  private handleMessage(data: string): void {
    let msg: ServerMessage;
    try {
      msg = JSON.parse(data) as ServerMessage;
    } catch {
      this.events.onError?.("unparseable server message");
      this.setState("error");
      return;
    }
    switch (msg.kind) {
      case "hello": {
        if (msg.format_version !== PROTOCOL_FORMAT_VERSION) {
          this.events.onError?.(
            `protocol version mismatch: server ${msg.format_version}, ` +
            `client ${PROTOCOL_FORMAT_VERSION}`);
          this.setState("error");
          this.socket.close();
          return;
        }
        const open = this.replayPath !== null
          ? { kind: "open", replay_path: this.replayPath }
          : { kind: "open", config: this.config };
        // state first: on a loopback transport the reply can arrive inside
        // this send call.
        this.setState("open_sent");
        this.socket.send(JSON.stringify(open));
        return;
      }
      case "opened":
        this.sessionId = msg.session_id;
        this.stage = msg.stage;
        this.setState("streaming");
        this.events.onOpened?.(msg);
        return;
      case "frame":
        if (msg.format_version !== PROTOCOL_FORMAT_VERSION) {
          this.events.onError?.("frame format_version mismatch");
          this.setState("error");
          return;
        }
        this.latestFrame = msg;
        this.events.onFrame?.(msg);
        return;
      case "end":
        this.setState("ended");
        this.events.onEnd?.(msg.winner, {
          ticks: msg.ticks,
          player_energy: msg.player_energy,
          enemy_energy: msg.enemy_energy,
        });
        return;
      case "error":
        this.events.onError?.(msg.reason);
        if (this.state !== "streaming") this.setState("error");
        return;
    }
  }
}

export function connectWebSocket(url: string): TextSocket {
  const ws = new WebSocket(url);
  const socket: TextSocket = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.onmessage = (ev) => socket.onmessage?.({ data: String(ev.data) });
  ws.onclose = () => socket.onclose?.();
  ws.onerror = (ev) => socket.onerror?.(ev);
  return socket;
}
