"""Eight rule-based enemy controllers loaded from versioned spec documents.

Each archetype is a looping phase machine: per phase it moves (pursue,
retreat, or hold), optionally jumps, and fires numbered shot patterns at
fixed ticks within the phase. Everything is a pure function of the current
game state, so recorded matches replay exactly and the same schedule can be
re-derived from the archetype id alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

import yaml

from .engine import ActionSet, CharacterState, GameState, PLAYER_SHOT_DAMAGE, ProjectileProfile

ARCHETYPE_IDS = tuple(range(1, 9))
ARCHETYPE_FORMAT_VERSION = 1

_MOVE_MODES = ("none", "pursue", "retreat")
_JUMP_MODES = ("none", "start", "hold")
_PURSUE_DEADZONE = 6.0  # px; stops pursuit jitter when already aligned


class ArchetypeError(ValueError):
    """Malformed or unknown archetype specification."""


@dataclass(slots=True)
class Phase:
    name: str
    duration: int
    move: str = "none"
    jump: str = "none"
    shoot: tuple[int, ...] = ()
    shoot_at: tuple[int, ...] = (0,)
    immune: bool = False
    attacking: bool = False
    speed_scale: float = 1.0


@dataclass(slots=True)
class EnemyArchetype:
    id: int
    name: str
    cooldown: int
    walk_speed: float
    projectiles: dict[int, ProjectileProfile]
    phases: list[Phase]
    cycle: int = 0
    _phase_by_tick: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.cycle = sum(p.duration for p in self.phases)
        self._phase_by_tick = []
        for idx, phase in enumerate(self.phases):
            self._phase_by_tick.extend([idx] * phase.duration)

    def phase_at(self, tick: int) -> tuple[Phase, int]:
        """(phase, tick offset within the phase) for an absolute tick."""
        t = tick % self.cycle
        idx = self._phase_by_tick[t]
        start = sum(p.duration for p in self.phases[:idx])
        return self.phases[idx], t - start

    def immune_at(self, tick: int) -> bool:
        return self.phase_at(tick)[0].immune

    def immunity_windows(self) -> list[str]:
        return [p.name for p in self.phases if p.immune]

    def apply_spawn(self, enemy: CharacterState) -> None:
        """Installs this archetype's combat stats on a spawned character."""
        enemy.walk_speed = self.walk_speed
        enemy.cooldown_max = self.cooldown
        enemy.shot_specs = dict(self.projectiles)


def _parse_profile(raw: dict) -> ProjectileProfile:
    return ProjectileProfile(
        speed_x=float(raw["speed_x"]),
        speed_y=float(raw.get("speed_y", 0.0)),
        width=float(raw.get("width", 12.0)),
        height=float(raw.get("height", 8.0)),
        damage=int(raw["damage"]),
        gravity=float(raw.get("gravity", 0.0)),
        aim=bool(raw.get("aim", False)),
        spawn_dy=float(raw.get("spawn_dy", 0.0)),
    )


def parse_archetype(doc: dict) -> EnemyArchetype:
    if doc.get("format_version") != ARCHETYPE_FORMAT_VERSION:
        raise ArchetypeError(
            f"unsupported archetype format_version {doc.get('format_version')!r}")
    aid = int(doc["id"])
    if aid not in ARCHETYPE_IDS:
        raise ArchetypeError(f"archetype id must be 1..8, got {aid}")
    projectiles = {int(n): _parse_profile(spec) for n, spec in doc["projectiles"].items()}
    if not projectiles:
        raise ArchetypeError(f"archetype {aid} defines no projectiles")
    for n, prof in projectiles.items():
        if not 1 <= n <= 6:
            raise ArchetypeError(f"archetype {aid}: shot number {n} out of range")
        if prof.damage <= PLAYER_SHOT_DAMAGE:
            raise ArchetypeError(
                f"archetype {aid}: shot {n} damage {prof.damage} not above the "
                f"player's {PLAYER_SHOT_DAMAGE}")
    phases = []
    for raw in doc["phases"]:
        phase = Phase(
            name=str(raw["name"]),
            duration=int(raw["duration"]),
            move=str(raw.get("move", "none")),
            jump=str(raw.get("jump", "none")),
            shoot=tuple(int(n) for n in raw.get("shoot", [])),
            shoot_at=tuple(int(t) for t in raw.get("shoot_at", [0])),
            immune=bool(raw.get("immune", False)),
            attacking=bool(raw.get("attacking", False)),
            speed_scale=float(raw.get("speed_scale", 1.0)),
        )
        if phase.duration < 1:
            raise ArchetypeError(f"archetype {aid}: phase {phase.name} duration < 1")
        if phase.move not in _MOVE_MODES:
            raise ArchetypeError(f"archetype {aid}: bad move mode {phase.move!r}")
        if phase.jump not in _JUMP_MODES:
            raise ArchetypeError(f"archetype {aid}: bad jump mode {phase.jump!r}")
        for n in phase.shoot:
            if n not in projectiles:
                raise ArchetypeError(
                    f"archetype {aid}: phase {phase.name} fires undefined shot {n}")
        phases.append(phase)
    if not phases:
        raise ArchetypeError(f"archetype {aid} has no phases")
    if not any(p.shoot for p in phases):
        raise ArchetypeError(f"archetype {aid} never attacks")
    return EnemyArchetype(
        id=aid,
        name=str(doc["name"]),
        cooldown=int(doc["cooldown"]),
        walk_speed=float(doc["walk_speed"]),
        projectiles=projectiles,
        phases=phases,
    )


def _validate_set(archetypes: dict[int, EnemyArchetype]) -> None:
    missing = [i for i in ARCHETYPE_IDS if i not in archetypes]
    if missing:
        raise ArchetypeError(f"missing archetype ids {missing}")
    for aid, arch in archetypes.items():
        windows = arch.immunity_windows()
        if aid == 1 and not windows:
            raise ArchetypeError("archetype 1 must define an immunity window")
        if aid != 1 and windows:
            raise ArchetypeError(
                f"archetype {aid} defines immunity windows; only archetype 1 may")


_REGISTRY: dict[int, EnemyArchetype] | None = None


def load_archetypes() -> dict[int, EnemyArchetype]:
    """Load and validate the eight bundled archetype documents (cached)."""
    global _REGISTRY
    if _REGISTRY is None:
        archetypes: dict[int, EnemyArchetype] = {}
        data_dir = resources.files("evoarena").joinpath("data/archetypes")
        for entry in sorted(data_dir.iterdir(), key=lambda e: e.name):
            if not entry.name.endswith(".yaml"):
                continue
            doc = yaml.safe_load(entry.read_text())
            arch = parse_archetype(doc)
            if arch.id in archetypes:
                raise ArchetypeError(f"duplicate archetype id {arch.id}")
            archetypes[arch.id] = arch
        _validate_set(archetypes)
        _REGISTRY = archetypes
    return _REGISTRY


def get_archetype(archetype_id: int) -> EnemyArchetype:
    archetypes = load_archetypes()
    if archetype_id not in archetypes:
        raise ArchetypeError(f"unknown archetype id {archetype_id}")
    return archetypes[archetype_id]


def enemy_policy(state: GameState, archetype: EnemyArchetype) -> ActionSet:
    """The archetype's action choice for this tick; pure in the state."""
    phase, t_in = archetype.phase_at(state.tick)
    actions = ActionSet()
    if phase.move != "none":
        pcx = (state.player.body.min.x + state.player.body.max.x) / 2.0
        ecx = (state.enemy.body.min.x + state.enemy.body.max.x) / 2.0
        delta = pcx - ecx
        if abs(delta) > _PURSUE_DEADZONE:
            toward_player = delta > 0
            go_right = toward_player if phase.move == "pursue" else not toward_player
            actions.right = go_right
            actions.left = not go_right
    if phase.jump == "hold" or (phase.jump == "start" and t_in == 0):
        actions.jump = True
    if phase.shoot and t_in in phase.shoot_at:
        for n in phase.shoot:
            setattr(actions, f"shoot{n}", True)
    return actions


def apply_overlay(state: GameState, archetype: EnemyArchetype) -> None:
    """Pre-step status effects driven by the phase machine.

    Sets immunity, the attacking flag, and dash speed on the enemy
    character. Both the live controller and the replay decoder call this,
    keeping recorded matches bit-identical.
    """
    phase, _ = archetype.phase_at(state.tick)
    state.enemy.immune = phase.immune
    state.enemy.speed_scale = phase.speed_scale
    if phase.attacking:
        state.enemy.attack_timer = max(state.enemy.attack_timer, 2)


def describe(archetype: EnemyArchetype) -> str:
    lines = [f"archetype {archetype.id} ({archetype.name}): "
             f"cooldown={archetype.cooldown} walk={archetype.walk_speed} "
             f"cycle={archetype.cycle} ticks"]
    for phase in archetype.phases:
        shots = ",".join(str(n) for n in phase.shoot) or "-"
        lines.append(
            f"  {phase.name}: {phase.duration}t move={phase.move} jump={phase.jump} "
            f"shoot=[{shots}]@{list(phase.shoot_at)} immune={phase.immune} "
            f"scale={phase.speed_scale}")
    return "\n".join(lines)


def iter_archetypes() -> Iterable[EnemyArchetype]:
    return (get_archetype(i) for i in ARCHETYPE_IDS)
