"""Match replays: a header plus the per-tick action pairs.

Re-simulation is the decoder: the engine is deterministic, so replaying
the recorded actions from the recorded seed rebuilds the exact match. For
scripted opponents the archetype id in the header re-derives the phase
overlay (immunity, dash speed), which is a pure function of the tick.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Optional

from .enemies import apply_overlay, get_archetype
from .engine import ActionSet, GameState, Winner, stage_for
from .evaluation import BaseController, MatchRecord, MatchResult, run_match

REPLAY_FORMAT = "evoarena-replay"
REPLAY_FORMAT_VERSION = 1


class ReplayError(ValueError):
    """Unreadable, truncated, or version-incompatible replay file."""


def write_replay(path: str | Path, record: MatchRecord,
                 config_hash: Optional[str] = None) -> None:
    header = {
        "format": REPLAY_FORMAT,
        "format_version": REPLAY_FORMAT_VERSION,
        "stage_id": record.stage_id,
        "enemy_archetype_id": record.enemy_archetype_id,
        "master_seed": record.seed,
        "tick_limit": record.tick_limit,
        "ticks": len(record.actions),
        "config_hash": config_hash,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for p_actions, e_actions in record.actions:
        lines.append(f"{p_actions.to_mask()} {e_actions.to_mask()}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_replay(path: str | Path) -> tuple[MatchRecord, dict]:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ReplayError("empty replay file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ReplayError(f"bad replay header: {exc}") from exc
    if header.get("format") != REPLAY_FORMAT:
        raise ReplayError(f"not a replay file: format={header.get('format')!r}")
    if header.get("format_version") != REPLAY_FORMAT_VERSION:
        raise ReplayError(
            f"unsupported replay format_version {header.get('format_version')!r}")
    expected = header.get("ticks")
    body = [ln for ln in lines[1:] if ln.strip()]
    if expected is None or len(body) != expected:
        raise ReplayError(
            f"truncated replay: header says {expected} ticks, file has {len(body)}")
    actions: list[tuple[ActionSet, ActionSet]] = []
    for ln in body:
        try:
            p_mask, e_mask = (int(tok) for tok in ln.split())
        except ValueError as exc:
            raise ReplayError(f"bad action line {ln!r}") from exc
        actions.append((ActionSet.from_mask(p_mask), ActionSet.from_mask(e_mask)))
    record = MatchRecord(
        seed=header["master_seed"],
        tick_limit=header["tick_limit"],
        stage_id=header["stage_id"],
        enemy_archetype_id=header.get("enemy_archetype_id"),
        actions=actions,
    )
    return record, header


class _ReplaySide(BaseController):
    """Plays back one side's recorded actions; raises if the file is short."""

    def __init__(self, actions: list[ActionSet]):
        self._actions = actions

    def actions(self, state: GameState) -> ActionSet:
        if state.tick >= len(self._actions):
            raise ReplayError("replay ended before the match did")
        return self._actions[state.tick]


class _ReplayEnemy(_ReplaySide):
    def __init__(self, actions: list[ActionSet], archetype_id: Optional[int]):
        super().__init__(actions)
        self._archetype = get_archetype(archetype_id) if archetype_id else None

    def setup(self, state: GameState) -> None:
        if self._archetype is not None:
            self._archetype.apply_spawn(state.enemy)
            state.enemy_archetype_id = self._archetype.id

    def pre_tick(self, state: GameState) -> None:
        if self._archetype is not None:
            apply_overlay(state, self._archetype)


def simulate_replay(
    record: MatchRecord,
    on_tick: Optional[Callable[[GameState, Optional[Winner]], None]] = None,
) -> tuple[MatchResult, MatchResult]:
    """Re-run a recorded match; returns both sides' MatchResults."""
    player = _ReplaySide([p for p, _ in record.actions])
    enemy = _ReplayEnemy([e for _, e in record.actions], record.enemy_archetype_id)
    p_res, e_res, _ = run_match(
        player, enemy, stage_for(record.stage_id), record.seed,
        record.tick_limit, on_tick=on_tick,
    )
    return p_res, e_res


def replay_file(path: str | Path,
                on_tick: Optional[Callable[[GameState, Optional[Winner]], None]] = None,
                ) -> tuple[MatchResult, MatchResult, dict]:
    record, header = read_replay(path)
    p_res, e_res = simulate_replay(record, on_tick=on_tick)
    return p_res, e_res, header
