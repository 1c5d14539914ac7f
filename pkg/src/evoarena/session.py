"""Live game sessions: the front door for human play and spectating.

A Session owns one engine state and advances it tick by tick, emitting one
frame message per tick. Human input arrives as messages; the latest one
before a tick boundary is the action set applied at that tick, and silence
means idle. The wire protocol is newline-delimited JSON messages (kinds:
hello, open, opened, frame, input, end, error) carried over a WebSocket;
the same Session API drives headless tests with no socket at all.
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .enemies import get_archetype
from .engine import (
    ActionSet,
    GameState,
    TICKS_PER_SECOND,
    Winner,
    new_game_state,
    stage_for,
    step,
)
from .evaluation import (
    BaseController,
    Controller,
    MatchRecord,
    ScriptedEnemyController,
    as_controller,
)
from .nets import NonFiniteOutputError, genome_from_json

log = logging.getLogger(__name__)

PROTOCOL_FORMAT_VERSION = 1
MODES = ("human_vs_static", "human_vs_ai", "ai_vs_static", "ai_vs_ai")
PACES = ("realtime_30tps", "headless")

_INPUT_FIELDS = ("left", "right", "jump", "release", "shoot")


class SessionError(ValueError):
    """Rejected session request; the message is the reason sent back."""


@dataclass
class SessionConfig:
    mode: str = "human_vs_static"
    enemy_archetype: Optional[int] = 1
    player_genome_ref: Optional[str] = None
    enemy_genome_ref: Optional[str] = None
    seed: int = 0
    pace: str = "realtime_30tps"
    tick_limit: int = 3000

    def validate(self) -> None:
        if self.mode not in MODES:
            raise SessionError(f"unknown mode {self.mode!r}")
        if self.pace not in PACES:
            raise SessionError(f"unknown pace {self.pace!r}")
        if self.mode.startswith("human") and self.pace != "realtime_30tps":
            raise SessionError("human modes require realtime pace")
        if self.mode.endswith("static") and self.enemy_archetype is None:
            raise SessionError("static-enemy modes require an enemy_archetype")
        if self.mode.startswith("ai") and self.player_genome_ref is None:
            raise SessionError("ai player requires player_genome_ref")
        if self.mode.endswith("ai") and self.enemy_genome_ref is None:
            raise SessionError("ai enemy requires enemy_genome_ref")

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionConfig":
        known = {"mode", "enemy_archetype", "player_genome_ref",
                 "enemy_genome_ref", "seed", "pace", "tick_limit"}
        unknown = set(doc) - known
        if unknown:
            raise SessionError(f"unknown session config fields: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg


class HumanInputController(BaseController):
    """Latest-wins input buffer; an empty window means idle."""

    def __init__(self) -> None:
        self.pending: Optional[ActionSet] = None

    def submit(self, actions: ActionSet) -> None:
        self.pending = actions

    def actions(self, state: GameState) -> ActionSet:
        actions = self.pending if self.pending is not None else ActionSet()
        self.pending = None
        return actions


def _load_genome_controller(ref: str, perspective: str) -> Controller:
    path = Path(ref)
    if not path.exists():
        raise SessionError(f"genome file not found: {ref}")
    try:
        genome = genome_from_json(path.read_text())
    except Exception as exc:
        raise SessionError(f"invalid genome file {ref}: {exc}") from exc
    return as_controller(genome, perspective)


class Session:
    """One live match: controllers, engine state, and the frame stream."""

    def __init__(self, session_id: str, cfg: SessionConfig,
                 player: Controller, enemy: Controller, stage_id: int):
        self.id = session_id
        self.cfg = cfg
        self.player_controller = player
        self.enemy_controller = enemy
        self.stage_id = stage_id
        self.human_input: Optional[HumanInputController] = (
            player if isinstance(player, HumanInputController) else None)
        self.state = new_game_state(stage_for(stage_id), cfg.seed, cfg.tick_limit)
        self.player_controller.setup(self.state)
        self.enemy_controller.setup(self.state)
        self.terminal: Optional[Winner] = None
        self.record = MatchRecord(cfg.seed, cfg.tick_limit, stage_id,
                                  self.state.enemy_archetype_id)

    @property
    def ended(self) -> bool:
        return self.terminal is not None

    def submit_input(self, msg: dict) -> dict:
        """Validate and buffer one input message; returns the ack."""
        if self.ended:
            raise SessionError("session has ended")
        if self.human_input is None:
            raise SessionError("inputs are rejected: no human-controlled side")
        raw = msg.get("actions", {})
        unknown = set(raw) - set(_INPUT_FIELDS)
        if unknown:
            raise SessionError(f"input may only set {_INPUT_FIELDS}, got {sorted(unknown)}")
        actions = ActionSet(**{k: bool(v) for k, v in raw.items()})
        self.human_input.submit(actions)
        return {"kind": "ack", "tick": self.state.tick}

    def advance(self) -> dict:
        """Run exactly one tick and return its frame message."""
        if self.ended:
            raise SessionError("session has ended")
        self.player_controller.pre_tick(self.state)
        self.enemy_controller.pre_tick(self.state)
        try:
            p_actions = self.player_controller.actions(self.state)
            e_actions = self.enemy_controller.actions(self.state)
        except NonFiniteOutputError as exc:
            raise SessionError(f"controller failure: {exc}") from exc
        self.record.actions.append((p_actions, e_actions))
        outcome = step(self.state, p_actions, e_actions)
        self.terminal = outcome.terminal
        return self.frame_message()

    def stage_message(self) -> dict:
        """Static geometry a renderer needs; sent once inside `opened`."""
        stage = self.state.stage
        return {
            "arena": [stage.arena.min.x, stage.arena.min.y,
                      stage.arena.max.x, stage.arena.max.y],
            "platforms": [[p.min.x, p.min.y, p.max.x, p.max.y]
                          for p in stage.platforms],
            "stage_id": stage.stage_id,
        }

    def frame_message(self) -> dict:
        state = self.state

        def char(c) -> dict:
            return {
                "rect": [c.body.min.x, c.body.min.y, c.body.max.x, c.body.max.y],
                "energy": c.energy,
                "facing": "right" if int(c.facing) > 0 else "left",
                "attacking": c.attacking,
                "immune": c.immune,
            }

        projectiles = []
        for pool, owner in ((state.player_projectiles, "player"),
                            (state.enemy_projectiles, "enemy")):
            for proj in pool:
                if proj.active:
                    projectiles.append({
                        "rect": [proj.body.min.x, proj.body.min.y,
                                 proj.body.max.x, proj.body.max.y],
                        "owner": owner,
                    })
        return {
            "kind": "frame",
            "format_version": PROTOCOL_FORMAT_VERSION,
            "tick": state.tick,
            "player": char(state.player),
            "enemy": char(state.enemy),
            "projectiles": projectiles,
            "terminal": self.terminal is not None,
            "winner": self.terminal.value if self.terminal is not None else None,
        }

    def end_message(self) -> dict:
        return {
            "kind": "end",
            "format_version": PROTOCOL_FORMAT_VERSION,
            "winner": self.terminal.value if self.terminal is not None else None,
            "ticks": self.state.tick,
            "player_energy": self.state.player.energy,
            "enemy_energy": self.state.enemy.energy,
        }

    def run_headless(self):
        """Yield every frame message until the match ends."""
        while not self.ended:
            yield self.advance()


class SessionManager:
    """Opens and tracks sessions; the service facade used by transports."""

    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}
        self._counter = 0

    def open_session(self, cfg: SessionConfig) -> Session:
        cfg.validate()
        if cfg.mode.startswith("human"):
            player: Controller = HumanInputController()
        else:
            player = _load_genome_controller(cfg.player_genome_ref, "player")
        if cfg.mode.endswith("static"):
            enemy: Controller = ScriptedEnemyController(get_archetype(cfg.enemy_archetype))
            stage_id = cfg.enemy_archetype
        else:
            enemy = _load_genome_controller(cfg.enemy_genome_ref, "enemy")
            stage_id = 0
        self._counter += 1
        session = Session(f"s{self._counter}", cfg, player, enemy, stage_id)
        self._sessions[session.id] = session
        return session

    def open_replay_session(self, replay_path: str | Path) -> Session:
        """Spectator session that re-plays a stored match file."""
        from .replay import read_replay, _ReplayEnemy, _ReplaySide

        record, _header = read_replay(replay_path)
        cfg = SessionConfig(
            mode="ai_vs_static" if record.enemy_archetype_id else "ai_vs_ai",
            enemy_archetype=record.enemy_archetype_id,
            player_genome_ref="<replay>",
            enemy_genome_ref="<replay>",
            seed=record.seed,
            pace="headless",
            tick_limit=record.tick_limit,
        )
        player = _ReplaySide([p for p, _ in record.actions])
        enemy = _ReplayEnemy([e for _, e in record.actions], record.enemy_archetype_id)
        self._counter += 1
        session = Session(f"s{self._counter}", cfg, player, enemy, record.stage_id)
        self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        if session_id not in self._sessions:
            raise SessionError(f"unknown session {session_id}")
        return self._sessions[session_id]

    def submit_input(self, session_id: str, msg: dict) -> dict:
        return self.get(session_id).submit_input(msg)

    def close(self, session_id: str) -> None:
        self._sessions.pop(session_id, None)


# --------------------------------------------------------------------------
# WebSocket transport (FastAPI)


def hello_message() -> dict:
    return {"kind": "hello", "format_version": PROTOCOL_FORMAT_VERSION}


def error_message(reason: str) -> dict:
    return {"kind": "error", "format_version": PROTOCOL_FORMAT_VERSION,
            "reason": reason}


def build_app(static_dir: Optional[Path] = None) -> FastAPI:
    """FastAPI app exposing the session protocol at /ws plus the client."""
    app = FastAPI(title="evoarena session service")
    manager = SessionManager()
    app.state.manager = manager

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        await ws.send_text(json.dumps(hello_message()))
        session: Optional[Session] = None
        try:
            # First client message must open a session (an optional hello
            # may precede it).
            while session is None:
                msg = json.loads(await ws.receive_text())
                kind = msg.get("kind")
                if kind == "hello":
                    continue
                if kind != "open":
                    await ws.send_text(json.dumps(error_message(
                        f"expected open, got {kind!r}")))
                    continue
                try:
                    if "replay_path" in msg:
                        session = manager.open_replay_session(msg["replay_path"])
                    else:
                        cfg = SessionConfig.from_dict(msg.get("config", {}))
                        session = manager.open_session(cfg)
                except SessionError as exc:
                    await ws.send_text(json.dumps(error_message(str(exc))))
            await ws.send_text(json.dumps({
                "kind": "opened",
                "format_version": PROTOCOL_FORMAT_VERSION,
                "session_id": session.id,
                "tick_limit": session.cfg.tick_limit,
                "mode": session.cfg.mode,
                "stage": session.stage_message(),
            }))
            await _pump_session(ws, session)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            if session is not None:
                manager.close(session.id)

    async def _pump_session(ws, session: Session) -> None:
        """Tick the session at its pace while consuming input messages."""
        realtime = session.cfg.pace == "realtime_30tps"
        tick_period = 1.0 / TICKS_PER_SECOND
        loop = asyncio.get_running_loop()
        next_deadline = loop.time() + tick_period

        async def consume_inputs() -> None:
            try:
                while True:
                    msg = json.loads(await ws.receive_text())
                    if msg.get("kind") != "input":
                        continue
                    try:
                        session.submit_input(msg)
                    except SessionError as exc:
                        await ws.send_text(json.dumps(error_message(str(exc))))
            except Exception:
                return  # disconnects end the consumer quietly

        consumer = asyncio.ensure_future(consume_inputs())
        try:
            while not session.ended:
                frame = session.advance()
                await ws.send_text(json.dumps(frame))
                if realtime:
                    delay = next_deadline - loop.time()
                    next_deadline += tick_period
                    if delay > 0:
                        await asyncio.sleep(delay)
                else:
                    await asyncio.sleep(0)
            await ws.send_text(json.dumps(session.end_message()))
        finally:
            consumer.cancel()

    if static_dir is not None and static_dir.exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="client")

    return app


def serve(host: str, port: int, static_dir: Optional[Path] = None) -> None:
    import uvicorn

    app = build_app(static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
