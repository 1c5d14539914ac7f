"""Match execution and fitness: the sense -> act -> step loop, the energy/
time fitness score, opponent sampling, and the alternating two-population
coevolution loop.

The fitness of a finished match is
    (100 - e)^gamma - (100 - p)^beta - (sum_i (100 - p_i) / t)^alpha
where e is the opponent's final energy, p the agent's own, p_i the agent's
energy after tick i, and t the match duration in ticks. Weights default to
(1, 2, 2) for the player side and (1, 2, 3) for the enemy side.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from . import engine, neat
from .enemies import EnemyArchetype, apply_overlay, enemy_policy
from .engine import (
    ActionSet,
    GameState,
    StageLayout,
    TickOutcome,
    Winner,
    new_game_state,
    step,
)
from .ga import GaConfig, evolve_generation_ga
from .neat import NeatConfig, NeatState, evolve_generation_neat
from .nets import (
    FixedGenome,
    GraphGenome,
    NonFiniteOutputError,
    Phenotype,
    activate_fixed,
    activate_graph,
    decode_graph,
)
from .seeding import derive_seed, rng_from
from .sensors import sense

log = logging.getLogger(__name__)

PLAYER_WEIGHTS = (1.0, 2.0, 2.0)
ENEMY_WEIGHTS = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class FitnessWeights:
    gamma: float = 1.0
    beta: float = 2.0
    alpha: float = 2.0

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.beta < 0 or self.alpha < 0:
            raise ValueError("fitness weights must be non-negative")


@dataclass
class MatchResult:
    self_energy: float
    opponent_energy: float
    duration: int
    self_energy_trace: list[float]
    winner: str  # "self" | "opponent" | "timeout"
    aborted: bool = False

    def validate(self) -> None:
        if self.duration < 1 or len(self.self_energy_trace) != self.duration:
            raise ValueError("trace length must equal duration >= 1")
        if self.self_energy_trace[-1] != self.self_energy:
            raise ValueError("trace must end at the final energy")


def fitness_eq1(result: MatchResult, weights: FitnessWeights) -> float:
    """Energy/time fitness of one match from one side's perspective."""
    if result.duration <= 0:
        raise ValueError("match duration must be positive")
    e = result.opponent_energy
    p = result.self_energy
    damage_integral = sum(100.0 - pi for pi in result.self_energy_trace)
    return (
        (100.0 - e) ** weights.gamma
        - (100.0 - p) ** weights.beta
        - (damage_integral / result.duration) ** weights.alpha
    )


# --------------------------------------------------------------------------
# Controllers


class Controller(Protocol):
    def setup(self, state: GameState) -> None: ...
    def pre_tick(self, state: GameState) -> None: ...
    def actions(self, state: GameState) -> ActionSet: ...


class BaseController:
    def setup(self, state: GameState) -> None:
        pass

    def pre_tick(self, state: GameState) -> None:
        pass

    def actions(self, state: GameState) -> ActionSet:
        raise NotImplementedError


class IdleController(BaseController):
    def actions(self, state: GameState) -> ActionSet:
        return ActionSet()


class RandomController(BaseController):
    """Uniform coin-flip on each of the 5 basic actions every tick."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def actions(self, state: GameState) -> ActionSet:
        r = self.rng
        return ActionSet(
            left=r.random() < 0.5,
            right=r.random() < 0.5,
            jump=r.random() < 0.5,
            release=r.random() < 0.5,
            shoot=r.random() < 0.5,
        )


class NetworkController(BaseController):
    """Wraps either genome kind; senses from its side and fires actions."""

    def __init__(self, genome: FixedGenome | GraphGenome, perspective: str):
        self.perspective = perspective
        self._fixed: FixedGenome | None = None
        self._phenotype: Phenotype | None = None
        if isinstance(genome, FixedGenome):
            self._fixed = genome
        else:
            self._phenotype = decode_graph(genome)

    def actions(self, state: GameState) -> ActionSet:
        obs = sense(state, self.perspective)
        if self._fixed is not None:
            return activate_fixed(self._fixed, obs)
        return activate_graph(self._phenotype, obs)


class ScriptedEnemyController(BaseController):
    """Drives the enemy from an archetype document's phase machine."""

    def __init__(self, archetype: EnemyArchetype):
        self.archetype = archetype

    def setup(self, state: GameState) -> None:
        self.archetype.apply_spawn(state.enemy)
        state.enemy_archetype_id = self.archetype.id

    def pre_tick(self, state: GameState) -> None:
        apply_overlay(state, self.archetype)

    def actions(self, state: GameState) -> ActionSet:
        return enemy_policy(state, self.archetype)


class ScriptedActionController(BaseController):
    """Plays back a fixed action list (idle once exhausted)."""

    def __init__(self, actions: list[ActionSet]):
        self._actions = actions

    def actions(self, state: GameState) -> ActionSet:
        if state.tick < len(self._actions):
            return self._actions[state.tick]
        return ActionSet()


# --------------------------------------------------------------------------
# Match loop


@dataclass
class MatchRecord:
    """Raw per-tick record of a finished match, enough to rebuild it."""

    seed: int
    tick_limit: int
    stage_id: int
    enemy_archetype_id: Optional[int]
    actions: list[tuple[ActionSet, ActionSet]] = field(default_factory=list)


def run_match(
    player_controller: Controller,
    enemy_controller: Controller,
    stage: StageLayout,
    seed: int,
    tick_limit: int = engine.DEFAULT_TICK_LIMIT,
    record: bool = False,
    on_tick: Optional[Callable[[GameState, Optional[Winner]], None]] = None,
) -> tuple[MatchResult, MatchResult, Optional[MatchRecord]]:
    """Run one duel to termination.

    Returns the player-side and enemy-side MatchResults (mirrored views of
    the same match) plus the action record when requested. A controller
    that emits non-finite outputs forfeits: the match is aborted and scored
    as a loss for that side.
    """
    state = new_game_state(stage, seed, tick_limit)
    player_controller.setup(state)
    enemy_controller.setup(state)
    rec = MatchRecord(seed, tick_limit, stage.stage_id, state.enemy_archetype_id) if record else None

    p_trace: list[float] = []
    e_trace: list[float] = []
    terminal: Optional[Winner] = None
    aborted_side: Optional[str] = None

    while terminal is None:
        player_controller.pre_tick(state)
        enemy_controller.pre_tick(state)
        try:
            p_actions = player_controller.actions(state)
        except NonFiniteOutputError:
            aborted_side = "player"
            break
        try:
            e_actions = enemy_controller.actions(state)
        except NonFiniteOutputError:
            aborted_side = "enemy"
            break
        if rec is not None:
            rec.actions.append((p_actions, e_actions))
        outcome = step(state, p_actions, e_actions)
        p_trace.append(state.player.energy)
        e_trace.append(state.enemy.energy)
        terminal = outcome.terminal
        if on_tick is not None:
            on_tick(state, terminal)

    if aborted_side is not None:
        log.warning("match aborted: %s controller produced non-finite outputs", aborted_side)
        if aborted_side == "player":
            state.player.energy = 0.0
            terminal = Winner.ENEMY
        else:
            state.enemy.energy = 0.0
            terminal = Winner.PLAYER
        p_trace.append(state.player.energy)
        e_trace.append(state.enemy.energy)
        state.tick += 1

    duration = len(p_trace)
    if terminal is Winner.PLAYER:
        p_win, e_win = "self", "opponent"
    elif terminal is Winner.ENEMY:
        p_win, e_win = "opponent", "self"
    else:
        p_win = e_win = "timeout"
    player_result = MatchResult(
        self_energy=state.player.energy,
        opponent_energy=state.enemy.energy,
        duration=duration,
        self_energy_trace=p_trace,
        winner=p_win,
        aborted=aborted_side is not None,
    )
    enemy_result = MatchResult(
        self_energy=state.enemy.energy,
        opponent_energy=state.player.energy,
        duration=duration,
        self_energy_trace=e_trace,
        winner=e_win,
        aborted=aborted_side is not None,
    )
    return player_result, enemy_result, rec


# --------------------------------------------------------------------------
# Generalization fitness and opponent sampling


def draw_opponent_sample(
    fitnesses: list[float], rng: random.Random, extras: int = 4
) -> list[int]:
    """Index of the best opponent plus `extras` distinct random others.

    With a population smaller than extras+1 every member is used.
    """
    n = len(fitnesses)
    if n == 0:
        raise ValueError("empty opponent population")
    best = min(range(n), key=lambda i: (-fitnesses[i], i))
    if n <= extras + 1:
        return [best] + [i for i in range(n) if i != best]
    others = [i for i in range(n) if i != best]
    return [best] + rng.sample(others, extras)


def generalization_fitness(
    evaluate_vs: Callable[[int], MatchResult],
    opponent_fitnesses: list[float],
    rng: random.Random,
    weights: FitnessWeights,
    sample: Optional[list[int]] = None,
) -> float:
    """Mean fitness over matches against the sampled opponent subset.

    `evaluate_vs(idx)` must run a match against opponent `idx` and return
    this agent's MatchResult. The sample may be precomputed so one draw is
    shared across a whole generation.
    """
    if sample is None:
        sample = draw_opponent_sample(opponent_fitnesses, rng)
    scores = [fitness_eq1(evaluate_vs(idx), weights) for idx in sample]
    return sum(scores) / len(scores)


# --------------------------------------------------------------------------
# Evolution drivers: one interface over both algorithms


class GaDriver:
    """Evolves flat weight genomes (raw arrays) with the generational GA."""

    algorithm = "ga"

    def __init__(self, cfg: GaConfig, seed: int):
        cfg.validate()
        self.cfg = cfg
        self._init_rng = rng_from(seed, "init")
        self._evolve_rng = rng_from(seed, "evolve")

    def initial_population(self) -> list[np.ndarray]:
        from .nets import FIXED_GENOME_LEN

        return [
            np.array(
                [self._init_rng.uniform(-1.0, 1.0) for _ in range(FIXED_GENOME_LEN)],
                dtype=np.float64,
            )
            for _ in range(self.cfg.population_size)
        ]

    def evolve(self, population: list, fitnesses: list[float]) -> list:
        return evolve_generation_ga(population, fitnesses, self.cfg, self._evolve_rng)


class NeatDriver:
    """Evolves graph genomes with speciated topology evolution."""

    algorithm = "neat"

    def __init__(self, cfg: NeatConfig, seed: int, n_inputs: int = 68, n_outputs: int = 5):
        cfg.validate()
        self.cfg = cfg
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs
        self._init_rng = rng_from(seed, "init")
        self._evolve_rng = rng_from(seed, "evolve")
        self.state = NeatState(registry=neat.InnovationRegistry())

    def initial_population(self) -> list[GraphGenome]:
        return neat.initial_population(
            self.n_inputs, self.n_outputs, self.cfg.population_size,
            self._init_rng, self.state.registry,
        )

    def evolve(self, population: list, fitnesses: list[float]) -> list:
        return evolve_generation_neat(population, fitnesses, self.state,
                                      self.cfg, self._evolve_rng)


def make_driver(algorithm: str, cfg, seed: int):
    if algorithm == "ga":
        return GaDriver(cfg, seed)
    if algorithm == "neat":
        return NeatDriver(cfg, seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def as_controller(genome, perspective: str) -> Controller:
    if isinstance(genome, np.ndarray):
        genome = FixedGenome(genome)
    return NetworkController(genome, perspective)


# --------------------------------------------------------------------------
# Batched match evaluation (optionally via a process pool)


@dataclass
class EvalTask:
    """One genome's fitness evaluation: a set of matches from one seat."""

    genome: object
    side: str  # seat the genome occupies: "player" | "enemy"
    opponents: list  # ("arch", id) or ("genome", genome)
    seeds: list[int]
    stage_id: int
    tick_limit: int
    weights: FitnessWeights


@dataclass
class EvalOutcome:
    fitness: float
    # Per opponent: (self_energy, opponent_energy, duration, winner)
    stats: list[tuple[float, float, int, str]]


def _opponent_controller(spec, seat: str) -> Controller:
    kind, payload = spec
    if kind == "arch":
        from .enemies import get_archetype

        return ScriptedEnemyController(get_archetype(payload))
    return as_controller(payload, seat)


def evaluate_task(task: EvalTask) -> EvalOutcome:
    from .engine import stage_for

    stage = stage_for(task.stage_id)
    own = as_controller(task.genome, task.side)
    other_seat = "enemy" if task.side == "player" else "player"
    scores = []
    stats = []
    for spec, seed in zip(task.opponents, task.seeds):
        opp = _opponent_controller(spec, other_seat)
        if task.side == "player":
            mine, _theirs, _ = run_match(own, opp, stage, seed, task.tick_limit)
        else:
            _theirs, mine, _ = run_match(opp, own, stage, seed, task.tick_limit)
        scores.append(fitness_eq1(mine, task.weights))
        stats.append((mine.self_energy, mine.opponent_energy, mine.duration, mine.winner))
    return EvalOutcome(fitness=sum(scores) / len(scores), stats=stats)


def evaluate_population(tasks: list[EvalTask], pool_map=map) -> list[EvalOutcome]:
    """Order-preserving map over tasks; pass an executor map to parallelize."""
    return list(pool_map(evaluate_task, tasks))


# --------------------------------------------------------------------------
# Coevolution


@dataclass
class CoevolutionSchedule:
    turn_length: int = 3
    total_generations: int = 100
    starting_side: str = "player"

    def validate(self) -> None:
        if self.turn_length < 1:
            raise ValueError("turn_length must be >= 1")
        if self.total_generations < 1:
            raise ValueError("total_generations must be >= 1")
        if self.starting_side not in ("player", "enemy"):
            raise ValueError("starting_side must be player or enemy")

    def unroll(self) -> list[str]:
        """Evolving-side sequence; each side gets total_generations entries."""
        self.validate()
        remaining = {"player": self.total_generations, "enemy": self.total_generations}
        side = self.starting_side
        other = "enemy" if side == "player" else "player"
        out: list[str] = []
        while remaining[side] > 0 or remaining[other] > 0:
            take = min(self.turn_length, remaining[side])
            out.extend([side] * take)
            remaining[side] -= take
            side, other = other, side
        return out


@dataclass
class CoevolutionRow:
    generation: int
    evolving_side: str
    best_player_energy: float
    best_enemy_energy: float


def coevolve(
    player_driver,
    enemy_driver,
    schedule: CoevolutionSchedule,
    master_seed: int,
    tick_limit: int = engine.DEFAULT_TICK_LIMIT,
    player_weights: FitnessWeights = FitnessWeights(*PLAYER_WEIGHTS),
    enemy_weights: FitnessWeights = FitnessWeights(*ENEMY_WEIGHTS),
    stage_id: int = 0,
    pool_map=map,
    on_generation: Optional[Callable[[CoevolutionRow], None]] = None,
    resume: Optional[dict] = None,
    on_checkpoint: Optional[Callable[[dict], None]] = None,
) -> tuple[list[CoevolutionRow], dict]:
    """Alternating two-population evolution.

    The frozen side supplies opponents (its best plus four random members,
    drawn once per generation) while the other side evolves; after every
    generation the current best genomes of both sides play one match whose
    final energies are logged. `on_checkpoint` receives a picklable blob
    after each generation; pass one back as `resume` to continue a run.
    """
    sample_rng = rng_from(master_seed, "sample")
    if resume is not None:
        pops = resume["populations"]
        fits = resume["fitnesses"]
        rows = list(resume["rows"])
        sample_rng.setstate(resume["sample_rng_state"])
        start_index = resume["next_generation"]
        evaluated = resume["evaluated"]
    else:
        pops = {
            "player": player_driver.initial_population(),
            "enemy": enemy_driver.initial_population(),
        }
        fits = {side: [0.0] * len(pops[side]) for side in ("player", "enemy")}
        rows = []
        start_index = 1
    drivers = {"player": player_driver, "enemy": enemy_driver}
    weights = {"player": player_weights, "enemy": enemy_weights}
    if resume is None:
        # Populations as they were when last evaluated, aligned with
        # fits[side]; pops[side] itself moves on after each evolve step.
        evaluated = {side: pops[side] for side in ("player", "enemy")}

    for gen_index, side in enumerate(schedule.unroll(), start=1):
        if gen_index < start_index:
            continue
        other = "enemy" if side == "player" else "player"
        sample = draw_opponent_sample(fits[other], sample_rng)
        opponents = [("genome", evaluated[other][i]) for i in sample]
        tasks = [
            EvalTask(
                genome=genome,
                side=side,
                opponents=opponents,
                seeds=[
                    derive_seed(master_seed, "match", gen_index, idx, slot)
                    for slot in range(len(opponents))
                ],
                stage_id=stage_id,
                tick_limit=tick_limit,
                weights=weights[side],
            )
            for idx, genome in enumerate(pops[side])
        ]
        outcomes = evaluate_population(tasks, pool_map)
        fits[side] = [o.fitness for o in outcomes]
        evaluated[side] = pops[side]

        best_idx = {
            s: min(range(len(fits[s])), key=lambda i: (-fits[s][i], i))
            for s in ("player", "enemy")
        }
        p_res, e_res, _ = run_match(
            as_controller(evaluated["player"][best_idx["player"]], "player"),
            as_controller(evaluated["enemy"][best_idx["enemy"]], "enemy"),
            engine.stage_for(stage_id),
            derive_seed(master_seed, "bvb", gen_index),
            tick_limit,
        )
        row = CoevolutionRow(
            generation=gen_index,
            evolving_side=side,
            best_player_energy=p_res.self_energy,
            best_enemy_energy=e_res.self_energy,
        )
        rows.append(row)
        if on_generation is not None:
            on_generation(row)

        pops[side] = drivers[side].evolve(pops[side], fits[side])

        if on_checkpoint is not None:
            on_checkpoint({
                "populations": pops,
                "evaluated": evaluated,
                "fitnesses": fits,
                "rows": rows,
                "sample_rng_state": sample_rng.getstate(),
                "next_generation": gen_index + 1,
            })

    final = {
        "player_population": evaluated["player"],
        "enemy_population": evaluated["enemy"],
        "player_fitnesses": fits["player"],
        "enemy_fitnesses": fits["enemy"],
    }
    return rows, final


# --------------------------------------------------------------------------
# Baseline campaign cells (one evolving player vs one scripted archetype)


@dataclass
class BaselineRow:
    algorithm: str
    enemy_id: int
    seed: int
    generation: int
    best_fitness: float
    best_player_energy: float
    enemy_energy: float
    duration: int


def baseline_cell(
    driver,
    enemy_id: int,
    seed: int,
    generations: int,
    tick_limit: int = engine.DEFAULT_TICK_LIMIT,
    weights: FitnessWeights = FitnessWeights(*PLAYER_WEIGHTS),
    pool_map=map,
    on_generation: Optional[Callable[[BaselineRow], None]] = None,
    on_checkpoint: Optional[Callable[[dict], None]] = None,
    start_generation: int = 0,
    population: Optional[list] = None,
) -> tuple[list[BaselineRow], list, object, MatchRecord]:
    """Evolve a player against one scripted archetype for one seed.

    Against a single scripted opponent the generalization sample
    degenerates to one match per genome. Returns the per-generation rows,
    the final evaluated population, its best genome, and the action record
    of that genome's evaluation match (for the stored replay).
    `on_checkpoint` fires after every generation except the last with a
    picklable blob; resume by passing its population/generation back in.
    """
    pop = population if population is not None else driver.initial_population()
    rows: list[BaselineRow] = []
    best_genome = None
    best_record: Optional[MatchRecord] = None
    for gen in range(start_generation, generations):
        tasks = [
            EvalTask(
                genome=genome,
                side="player",
                opponents=[("arch", enemy_id)],
                seeds=[derive_seed(seed, "match", enemy_id, gen, idx)],
                stage_id=enemy_id,
                tick_limit=tick_limit,
                weights=weights,
            )
            for idx, genome in enumerate(pop)
        ]
        outcomes = evaluate_population(tasks, pool_map)
        fits = [o.fitness for o in outcomes]
        best_i = min(range(len(fits)), key=lambda i: (-fits[i], i))
        self_e, opp_e, duration, _winner = outcomes[best_i].stats[0]
        row = BaselineRow(
            algorithm=driver.algorithm,
            enemy_id=enemy_id,
            seed=seed,
            generation=gen,
            best_fitness=fits[best_i],
            best_player_energy=self_e,
            enemy_energy=opp_e,
            duration=duration,
        )
        rows.append(row)
        if on_generation is not None:
            on_generation(row)
        best_genome = pop[best_i]
        if gen < generations - 1:
            pop = driver.evolve(pop, fits)
            if on_checkpoint is not None:
                on_checkpoint({"generation": gen + 1, "population": pop, "rows": rows})
        else:
            # Re-run the winning evaluation match with recording on, so the
            # stored replay reproduces the logged energies exactly.
            from .enemies import get_archetype

            _, _, best_record = run_match(
                as_controller(best_genome, "player"),
                ScriptedEnemyController(get_archetype(enemy_id)),
                engine.stage_for(enemy_id),
                derive_seed(seed, "match", enemy_id, gen, best_i),
                tick_limit,
                record=True,
            )
    return rows, pop, best_genome, best_record
