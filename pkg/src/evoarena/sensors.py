"""The 68-variable observation vector fed to agent controllers.

Every quantity is mapped linearly into [-1, 1]; booleans become -1/+1.
The layout is fixed and exported (see `sensor_layout`) so controllers,
tests, and documentation all agree on which index means what.
"""

from __future__ import annotations

import numpy as np

from .engine import ARENA_H, ARENA_W, GameState, MAX_HSPEED, MAX_VSPEED

SENSOR_COUNT = 68

# Group sizes, in layout order: character rects, surface flags, shot timers,
# shooting flags, velocities, facing, attacking flags, the player's 3
# projectile rects, the enemy's 8 projectile rects, enemy immunity, tick.
GROUP_SIZES = (8, 2, 2, 2, 4, 2, 2, 12, 32, 1, 1)
assert sum(GROUP_SIZES) == SENSOR_COUNT


def _clamp(v: float) -> float:
    if v > 1.0:
        return 1.0
    if v < -1.0:
        return -1.0
    return v


def _norm_x(x: float) -> float:
    return _clamp(2.0 * (x / ARENA_W) - 1.0)


def _norm_y(y: float) -> float:
    return _clamp(2.0 * (y / ARENA_H) - 1.0)


def _flag(b: bool) -> float:
    return 1.0 if b else -1.0


def _rect_scalars(rect, out: list[float]) -> None:
    """Rect as (center_x, center_y, width, height), each mapped to [-1, 1].

    Center-based so an object at the arena middle reads exactly 0, which
    doubles as the sentinel emitted for inactive projectile slots.
    """
    out.append(_norm_x((rect.min.x + rect.max.x) / 2.0))
    out.append(_norm_y((rect.min.y + rect.max.y) / 2.0))
    out.append(_norm_x(rect.max.x - rect.min.x))
    out.append(_norm_y(rect.max.y - rect.min.y))


def sense(state: GameState, perspective: str = "player") -> np.ndarray:
    """Observation vector from one side's point of view.

    The enemy perspective swaps the self/opponent ordering of the
    per-character scalar groups; the projectile groups keep their absolute
    layout (player pool first) on both sides.
    """
    if perspective == "player":
        me, opp = state.player, state.enemy
    elif perspective == "enemy":
        me, opp = state.enemy, state.player
    else:
        raise ValueError(f"unknown perspective {perspective!r}")

    vals: list[float] = []
    # 1. enclosing rects (8)
    _rect_scalars(me.body, vals)
    _rect_scalars(opp.body, vals)
    # 2. on-surface flags (2)
    vals.append(_flag(me.on_surface))
    vals.append(_flag(opp.on_surface))
    # 3. ticks until the next shot is allowed (2)
    for c in (me, opp):
        if c.cooldown_max > 0:
            vals.append(_clamp(2.0 * (c.shoot_cooldown / c.cooldown_max) - 1.0))
        else:
            vals.append(-1.0)
    # 4. shooting flags (2)
    vals.append(_flag(me.shooting))
    vals.append(_flag(opp.shooting))
    # 5. horizontal and vertical motion (4)
    for c in (me, opp):
        vals.append(_clamp(c.velocity.x / MAX_HSPEED))
        vals.append(_clamp(c.velocity.y / MAX_VSPEED))
    # 6. facing (2)
    vals.append(float(int(me.facing)))
    vals.append(float(int(opp.facing)))
    # 7. attacking flags (2)
    vals.append(_flag(me.attacking))
    vals.append(_flag(opp.attacking))
    # 8-9. projectile rects; inactive slots read as the arena-center
    # sentinel 0 so the vector length never changes.
    for pool in (state.player_projectiles, state.enemy_projectiles):
        for proj in pool:
            if proj.active:
                _rect_scalars(proj.body, vals)
            else:
                vals.extend((0.0, 0.0, 0.0, 0.0))
    # 10. enemy immunity (1)
    vals.append(_flag(state.enemy.immune))
    # 11. time-step counter (1)
    vals.append(_clamp(2.0 * (state.tick / state.tick_limit) - 1.0))
    return np.asarray(vals, dtype=np.float64)


def sensor_layout(perspective: str = "player") -> list[str]:
    """Name of each sensor index, e.g. for the describe-sensors table."""
    if perspective == "player":
        self_tag, opp_tag = "player", "enemy"
    elif perspective == "enemy":
        self_tag, opp_tag = "enemy", "player"
    else:
        raise ValueError(f"unknown perspective {perspective!r}")
    rect_parts = ("center_x", "center_y", "width", "height")
    names: list[str] = []
    for who in (self_tag, opp_tag):
        names += [f"{who}_rect_{c}" for c in rect_parts]
    names += [f"{who}_on_surface" for who in (self_tag, opp_tag)]
    names += [f"{who}_shot_timer" for who in (self_tag, opp_tag)]
    names += [f"{who}_shooting" for who in (self_tag, opp_tag)]
    for who in (self_tag, opp_tag):
        names += [f"{who}_vel_x", f"{who}_vel_y"]
    names += [f"{who}_facing" for who in (self_tag, opp_tag)]
    names += [f"{who}_attacking" for who in (self_tag, opp_tag)]
    for i in range(3):
        names += [f"player_shot{i}_{c}" for c in rect_parts]
    for i in range(8):
        names += [f"enemy_shot{i}_{c}" for c in rect_parts]
    names.append("enemy_immune")
    names.append("tick_progress")
    assert len(names) == SENSOR_COUNT
    return names
