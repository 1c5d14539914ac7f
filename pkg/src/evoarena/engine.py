"""Fixed-timestep duel simulation: movement, jumping, projectiles, damage.

One `step` advances the world exactly one tick in a fixed stage order, so a
match is a pure function of (seed, action sequence). Both characters start
with 100 energy and whoever reaches 0 first loses; timeouts are draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional

from .seeding import TickRandom

# Arena and timing constants. The tick is 1/30 s of game time.
ARENA_W = 736.0
ARENA_H = 512.0
TICKS_PER_SECOND = 30
DEFAULT_TICK_LIMIT = 3000

CHAR_W = 30.0
CHAR_H = 55.0

WALK_SPEED = 5.0          # px / tick
JUMP_IMPULSE = -15.0      # px / tick, upward
GRAVITY = 0.9             # px / tick^2
TERMINAL_FALL = 10.0      # px / tick, downward cap
MAX_HSPEED = 16.0         # fastest dash; sensor normalization bound
MAX_VSPEED = 15.0         # |jump impulse|; sensor normalization bound

PLAYER_SHOT_COOLDOWN = 13  # ticks between shots
PLAYER_SHOT_DAMAGE = 10
CONTACT_DAMAGE = 20        # applied to the player on body overlap
CONTACT_COOLDOWN = 20      # ticks of contact immunity after a body hit
ATTACK_FLAG_TICKS = 5      # how long "attacking" stays up after firing

MAX_PLAYER_SHOTS = 3
MAX_ENEMY_SHOTS = 8


class Facing(IntEnum):
    LEFT = -1
    RIGHT = 1


class Owner(Enum):
    PLAYER = "player"
    ENEMY = "enemy"


class Winner(Enum):
    PLAYER = "player"
    ENEMY = "enemy"
    TIMEOUT = "timeout"


class TerminalStateError(RuntimeError):
    """Raised when `step` is called on a state that already has a winner."""


@dataclass(slots=True)
class Vec2:
    x: float
    y: float

    def copy(self) -> "Vec2":
        return Vec2(self.x, self.y)


@dataclass(slots=True)
class Rect:
    """Axis-aligned box; min is the top-left corner (y grows downward)."""

    min: Vec2
    max: Vec2

    @staticmethod
    def from_size(x: float, y: float, w: float, h: float) -> "Rect":
        return Rect(Vec2(x, y), Vec2(x + w, y + h))

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y

    def shift(self, dx: float, dy: float) -> None:
        self.min.x += dx
        self.max.x += dx
        self.min.y += dy
        self.max.y += dy

    def overlaps(self, other: "Rect") -> bool:
        return (
            self.min.x < other.max.x
            and self.max.x > other.min.x
            and self.min.y < other.max.y
            and self.max.y > other.min.y
        )

    def copy(self) -> "Rect":
        return Rect(self.min.copy(), self.max.copy())


@dataclass(slots=True)
class ProjectileProfile:
    """How a character's shot spawns: speed, shape, damage, ballistics.

    `speed_x` is along the shooter's facing; `aim` overrides both components
    with a vector pointed at the opponent's center. `spawn_dy` offsets the
    spawn point from the shooter's body center (positive = downward).
    """

    speed_x: float
    speed_y: float = 0.0
    width: float = 12.0
    height: float = 6.0
    damage: int = PLAYER_SHOT_DAMAGE
    gravity: float = 0.0
    aim: bool = False
    spawn_dy: float = 0.0


PLAYER_SHOT_PROFILE = ProjectileProfile(speed_x=12.0, damage=PLAYER_SHOT_DAMAGE)
# AI-controlled enemies shoot through the same 5-action interface as the
# player but with the stronger enemy-grade projectile.
AI_ENEMY_SHOT_PROFILE = ProjectileProfile(
    speed_x=12.0, width=14.0, height=8.0, damage=20
)


@dataclass(slots=True)
class CharacterState:
    body: Rect
    energy: float = 100.0
    facing: Facing = Facing.RIGHT
    velocity: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))
    on_surface: bool = True
    shoot_cooldown: int = 0
    cooldown_max: int = PLAYER_SHOT_COOLDOWN
    attacking: bool = False
    immune: bool = False
    shooting: bool = False
    walk_speed: float = WALK_SPEED
    speed_scale: float = 1.0
    contact_cooldown: int = 0
    attack_timer: int = 0
    shot_profile: ProjectileProfile = field(
        default_factory=lambda: replace(PLAYER_SHOT_PROFILE)
    )
    # Enemy-only: per-shootN projectile profiles, installed at spawn.
    shot_specs: dict[int, ProjectileProfile] = field(default_factory=dict)


@dataclass(slots=True)
class Projectile:
    body: Rect
    velocity: Vec2
    owner: Owner
    active: bool = False
    damage: int = 0
    gravity: float = 0.0


@dataclass(slots=True)
class StageLayout:
    arena: Rect
    platforms: list[Rect]
    spawn_player: Vec2   # top-left corner of the player's body
    spawn_enemy: Vec2
    stage_id: int = 0

    def validate(self) -> None:
        for name, spawn in (("player", self.spawn_player), ("enemy", self.spawn_enemy)):
            if not (
                self.arena.min.x <= spawn.x <= self.arena.max.x - CHAR_W
                and self.arena.min.y <= spawn.y <= self.arena.max.y - CHAR_H
            ):
                raise ValueError(f"{name} spawn outside arena")
        mid = (self.arena.min.x + self.arena.max.x) / 2.0
        if (self.spawn_player.x < mid) == (self.spawn_enemy.x < mid):
            raise ValueError("spawn points must sit on opposite horizontal halves")


@dataclass(slots=True)
class ActionSet:
    left: bool = False
    right: bool = False
    jump: bool = False
    release: bool = False
    shoot: bool = False
    shoot1: bool = False
    shoot2: bool = False
    shoot3: bool = False
    shoot4: bool = False
    shoot5: bool = False
    shoot6: bool = False

    _FIELDS = ("left", "right", "jump", "release", "shoot",
               "shoot1", "shoot2", "shoot3", "shoot4", "shoot5", "shoot6")

    def shot_numbers(self) -> list[int]:
        return [n for n in range(1, 7) if getattr(self, f"shoot{n}")]

    def has_shoot_n(self) -> bool:
        return any(getattr(self, f"shoot{n}") for n in range(1, 7))

    def to_mask(self) -> int:
        mask = 0
        for i, name in enumerate(self._FIELDS):
            if getattr(self, name):
                mask |= 1 << i
        return mask

    @classmethod
    def from_mask(cls, mask: int) -> "ActionSet":
        out = cls()
        for i, name in enumerate(cls._FIELDS):
            if mask & (1 << i):
                setattr(out, name, True)
        return out


@dataclass(slots=True)
class GameState:
    tick: int
    player: CharacterState
    enemy: CharacterState
    player_projectiles: list[Projectile]
    enemy_projectiles: list[Projectile]
    stage: StageLayout
    rng: TickRandom
    tick_limit: int = DEFAULT_TICK_LIMIT
    enemy_archetype_id: Optional[int] = None


@dataclass(slots=True)
class TickOutcome:
    state: GameState
    terminal: Optional[Winner]


def default_stage(stage_id: int = 0, platforms: list[Rect] | None = None) -> StageLayout:
    arena = Rect(Vec2(0.0, 0.0), Vec2(ARENA_W, ARENA_H))
    stage = StageLayout(
        arena=arena,
        platforms=list(platforms or []),
        spawn_player=Vec2(90.0, ARENA_H - CHAR_H),
        spawn_enemy=Vec2(ARENA_W - 90.0 - CHAR_W, ARENA_H - CHAR_H),
        stage_id=stage_id,
    )
    stage.validate()
    return stage


# Stage 0 is the flat default; stages 1-8 pair with the enemy archetypes of
# the same id. A few carry platforms so the landing rules get real use.
_STAGE_PLATFORMS: dict[int, list[tuple[float, float, float, float]]] = {
    3: [(150.0, 392.0, 120.0, 12.0), (466.0, 392.0, 120.0, 12.0)],
    6: [(308.0, 360.0, 120.0, 12.0)],
    7: [(60.0, 420.0, 100.0, 12.0), (576.0, 420.0, 100.0, 12.0)],
}


def stage_for(stage_id: int) -> StageLayout:
    if stage_id < 0 or stage_id > 8:
        raise ValueError(f"unknown stage id {stage_id}")
    platforms = [
        Rect.from_size(x, y, w, h) for x, y, w, h in _STAGE_PLATFORMS.get(stage_id, [])
    ]
    return default_stage(stage_id=stage_id, platforms=platforms)


def _make_pool(owner: Owner, size: int) -> list[Projectile]:
    return [
        Projectile(
            body=Rect.from_size(0.0, 0.0, 1.0, 1.0),
            velocity=Vec2(0.0, 0.0),
            owner=owner,
        )
        for _ in range(size)
    ]


def new_game_state(
    stage: StageLayout,
    seed: int,
    tick_limit: int = DEFAULT_TICK_LIMIT,
    enemy_archetype_id: Optional[int] = None,
) -> GameState:
    if tick_limit < 1:
        raise ValueError("tick_limit must be >= 1")
    player = CharacterState(
        body=Rect.from_size(stage.spawn_player.x, stage.spawn_player.y, CHAR_W, CHAR_H),
        facing=Facing.RIGHT,
    )
    enemy = CharacterState(
        body=Rect.from_size(stage.spawn_enemy.x, stage.spawn_enemy.y, CHAR_W, CHAR_H),
        facing=Facing.LEFT,
        shot_profile=replace(AI_ENEMY_SHOT_PROFILE),
    )
    if stage.spawn_player.x > stage.spawn_enemy.x:
        player.facing = Facing.LEFT
        enemy.facing = Facing.RIGHT
    return GameState(
        tick=0,
        player=player,
        enemy=enemy,
        player_projectiles=_make_pool(Owner.PLAYER, MAX_PLAYER_SHOTS),
        enemy_projectiles=_make_pool(Owner.ENEMY, MAX_ENEMY_SHOTS),
        stage=stage,
        rng=TickRandom(seed),
        tick_limit=tick_limit,
        enemy_archetype_id=enemy_archetype_id,
    )


def is_terminal(state: GameState, tick_limit: Optional[int] = None) -> Optional[Winner]:
    """Winner of a finished match, or None while it is still running."""
    limit = state.tick_limit if tick_limit is None else tick_limit
    if state.player.energy <= 0.0:
        # Simultaneous double-KO resolves as an enemy win: the player must
        # strictly survive.
        return Winner.ENEMY
    if state.enemy.energy <= 0.0:
        return Winner.PLAYER
    if state.tick >= limit:
        return Winner.TIMEOUT
    return None


def resolve_hits(state: GameState) -> GameState:
    """Apply projectile and contact damage for the current positions.

    Projectiles deactivate on contact even against an immune target; contact
    damage lands on the player only and is rate-limited by a short immunity
    window so an overlap does not drain energy every tick.
    """
    player = state.player
    enemy = state.enemy
    for proj in state.player_projectiles:
        if proj.active and proj.body.overlaps(enemy.body):
            proj.active = False
            if not enemy.immune:
                enemy.energy = max(0.0, enemy.energy - proj.damage)
    for proj in state.enemy_projectiles:
        if proj.active and proj.body.overlaps(player.body):
            proj.active = False
            player.energy = max(0.0, player.energy - proj.damage)
    if player.body.overlaps(enemy.body) and player.contact_cooldown == 0:
        player.energy = max(0.0, player.energy - CONTACT_DAMAGE)
        player.contact_cooldown = CONTACT_COOLDOWN + 1  # +1 eaten by this tick's decrement
    return state


def _apply_intent(char: CharacterState, actions: ActionSet) -> int:
    """Release handling plus horizontal intent; returns move direction."""
    char.shooting = False
    if actions.release and char.velocity.y < 0.0:
        char.velocity.y = 0.0
    dx = (1 if actions.right else 0) - (1 if actions.left else 0)
    return dx


def _integrate_vertical(char: CharacterState, actions: ActionSet) -> float:
    """Jump start and gravity; returns the feet y before the move."""
    feet_before = char.body.max.y
    if actions.jump and char.on_surface:
        char.velocity.y = JUMP_IMPULSE
        char.on_surface = False
    if not char.on_surface:
        char.velocity.y = min(char.velocity.y + GRAVITY, TERMINAL_FALL)
        char.body.shift(0.0, char.velocity.y)
    return feet_before


def _clamp_character(state: GameState, char: CharacterState, feet_before: float) -> None:
    arena = state.stage.arena
    body = char.body
    # Walls.
    if body.min.x < arena.min.x:
        body.shift(arena.min.x - body.min.x, 0.0)
    elif body.max.x > arena.max.x:
        body.shift(arena.max.x - body.max.x, 0.0)
    # Ceiling.
    if body.min.y < arena.min.y:
        body.shift(0.0, arena.min.y - body.min.y)
        if char.velocity.y < 0.0:
            char.velocity.y = 0.0
    # Landing: floor always, platforms only when the feet crossed their top
    # while moving downward (one-way platforms).
    landed_on: float | None = None
    if char.velocity.y >= 0.0:
        if body.max.y >= arena.max.y:
            landed_on = arena.max.y
        else:
            for plat in state.stage.platforms:
                top = plat.min.y
                if (
                    feet_before <= top
                    and body.max.y >= top
                    and body.max.x > plat.min.x
                    and body.min.x < plat.max.x
                ):
                    landed_on = top if landed_on is None else min(landed_on, top)
    if landed_on is not None:
        body.shift(0.0, landed_on - body.max.y)
        char.velocity.y = 0.0
        char.on_surface = True
    elif char.on_surface:
        # Walked off an edge: stay grounded only while support remains.
        char.on_surface = _has_support(state, char)


def _has_support(state: GameState, char: CharacterState) -> bool:
    body = char.body
    if body.max.y >= state.stage.arena.max.y - 1e-9:
        return True
    for plat in state.stage.platforms:
        if (
            abs(body.max.y - plat.min.y) < 1e-9
            and body.max.x > plat.min.x
            and body.min.x < plat.max.x
        ):
            return True
    return False


def _spawn_projectile(
    state: GameState,
    shooter: CharacterState,
    target: CharacterState,
    pool: list[Projectile],
    profile: ProjectileProfile,
) -> bool:
    slot = None
    for proj in pool:
        if not proj.active:
            slot = proj
            break
    if slot is None:
        return False
    w, h = profile.width, profile.height
    cx = shooter.body.max.x if shooter.facing is Facing.RIGHT else shooter.body.min.x - w
    cy = (shooter.body.min.y + shooter.body.max.y) / 2.0 + profile.spawn_dy - h / 2.0
    slot.body = Rect.from_size(cx, cy, w, h)
    if profile.aim:
        tx = (target.body.min.x + target.body.max.x) / 2.0 - (cx + w / 2.0)
        ty = (target.body.min.y + target.body.max.y) / 2.0 - (cy + h / 2.0)
        norm = (tx * tx + ty * ty) ** 0.5
        speed = abs(profile.speed_x)
        if norm < 1e-9:
            slot.velocity = Vec2(speed * int(shooter.facing), 0.0)
        else:
            slot.velocity = Vec2(speed * tx / norm, speed * ty / norm)
    else:
        slot.velocity = Vec2(profile.speed_x * int(shooter.facing), profile.speed_y)
    slot.damage = profile.damage
    slot.gravity = profile.gravity
    slot.active = True
    return True


def _move_projectiles(state: GameState) -> None:
    arena = state.stage.arena
    for pool in (state.player_projectiles, state.enemy_projectiles):
        _move_pool(pool, arena)


def _move_pool(pool: list[Projectile], arena: Rect) -> None:
    for proj in pool:
        if not proj.active:
            continue
        if proj.gravity:
            proj.velocity.y += proj.gravity
        proj.body.shift(proj.velocity.x, proj.velocity.y)
        body = proj.body
        if (
            body.min.x >= arena.max.x
            or body.max.x <= arena.min.x
            or body.min.y >= arena.max.y
            or body.max.y <= arena.min.y
        ):
            proj.active = False
        elif proj.gravity and body.max.y >= arena.max.y:
            proj.active = False  # lobbed shots burst on the floor


def step(state: GameState, player_actions: ActionSet, enemy_actions: ActionSet) -> TickOutcome:
    """Advance the duel exactly one tick.

    Stage order is fixed: intent, horizontal movement, vertical integration,
    collision clamping, projectile spawning, projectile motion, hit
    resolution, timer decrements. Raises TerminalStateError if the match is
    already decided.
    """
    if is_terminal(state) is not None:
        raise TerminalStateError("step() called on a terminal state")

    player = state.player
    enemy = state.enemy

    pdx = _apply_intent(player, player_actions)
    edx = _apply_intent(enemy, enemy_actions)
    if pdx:
        player.facing = Facing.RIGHT if pdx > 0 else Facing.LEFT
    # Enemies orient toward their opponent regardless of movement, so their
    # shots always open toward the player's side.
    pcx = (player.body.min.x + player.body.max.x) / 2.0
    ecx = (enemy.body.min.x + enemy.body.max.x) / 2.0
    if pcx != ecx:
        enemy.facing = Facing.RIGHT if pcx > ecx else Facing.LEFT

    player.velocity.x = pdx * player.walk_speed * player.speed_scale
    enemy.velocity.x = edx * enemy.walk_speed * enemy.speed_scale
    if pdx:
        player.body.shift(player.velocity.x, 0.0)
    if edx:
        enemy.body.shift(enemy.velocity.x, 0.0)

    p_feet = _integrate_vertical(player, player_actions)
    e_feet = _integrate_vertical(enemy, enemy_actions)
    _clamp_character(state, player, p_feet)
    _clamp_character(state, enemy, e_feet)

    player_fired = False
    enemy_fired = False
    if player_actions.shoot and player.shoot_cooldown == 0:
        if _spawn_projectile(state, player, enemy, state.player_projectiles, player.shot_profile):
            player.shoot_cooldown = player.cooldown_max
            player.shooting = True
            player.attack_timer = ATTACK_FLAG_TICKS
            player_fired = True
    if enemy.shoot_cooldown == 0:
        spawned = False
        if enemy_actions.has_shoot_n():
            for n in enemy_actions.shot_numbers():
                profile = enemy.shot_specs.get(n)
                if profile is not None:
                    spawned |= _spawn_projectile(
                        state, enemy, player, state.enemy_projectiles, profile
                    )
        elif enemy_actions.shoot:
            spawned = _spawn_projectile(
                state, enemy, player, state.enemy_projectiles, enemy.shot_profile
            )
        if spawned:
            enemy.shoot_cooldown = enemy.cooldown_max
            enemy.shooting = True
            enemy.attack_timer = ATTACK_FLAG_TICKS
            enemy_fired = True

    _move_projectiles(state)
    resolve_hits(state)

    for char, just_fired in ((player, player_fired), (enemy, enemy_fired)):
        if char.shoot_cooldown > 0 and not just_fired:
            char.shoot_cooldown -= 1
        if char.contact_cooldown > 0:
            char.contact_cooldown -= 1
        if char.attack_timer > 0:
            char.attack_timer -= 1
        char.attacking = char.attack_timer > 0

    state.tick += 1
    return TickOutcome(state=state, terminal=is_terminal(state))


def snapshot(state: GameState) -> tuple:
    """Full state as nested plain tuples, for trace comparison and hashing."""

    def char(c: CharacterState) -> tuple:
        return (
            c.body.min.x, c.body.min.y, c.body.max.x, c.body.max.y,
            c.energy, int(c.facing), c.velocity.x, c.velocity.y,
            c.on_surface, c.shoot_cooldown, c.attacking, c.immune,
            c.shooting, c.contact_cooldown,
        )

    def proj(p: Projectile) -> tuple:
        if not p.active:
            return (False,)
        return (
            True, p.body.min.x, p.body.min.y, p.body.max.x, p.body.max.y,
            p.velocity.x, p.velocity.y, p.damage,
        )

    return (
        state.tick,
        char(state.player),
        char(state.enemy),
        tuple(proj(p) for p in state.player_projectiles),
        tuple(proj(p) for p in state.enemy_projectiles),
        state.rng.state,
    )
