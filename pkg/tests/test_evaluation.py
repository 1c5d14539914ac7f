"""Match loop, fitness score, opponent sampling, and the coevolution loop."""

import random

import numpy as np
import pytest

from evoarena.enemies import get_archetype
from evoarena.engine import stage_for
from evoarena.evaluation import (
    CoevolutionSchedule,
    EvalTask,
    FitnessWeights,
    GaDriver,
    IdleController,
    MatchResult,
    NeatDriver,
    RandomController,
    ScriptedEnemyController,
    as_controller,
    coevolve,
    draw_opponent_sample,
    evaluate_task,
    fitness_eq1,
    generalization_fitness,
    run_match,
)
from evoarena.ga import GaConfig
from evoarena.neat import NeatConfig
from evoarena.nets import genome_to_json, random_fixed_genome


def make_result(p, e, t, trace=None, winner="timeout"):
    trace = trace if trace is not None else [p] * t
    return MatchResult(self_energy=p, opponent_energy=e, duration=t,
                       self_energy_trace=trace, winner=winner)


def eq1_oracle(e, p, trace, t, gamma, beta, alpha):
    """Independently coded single-expression evaluation of the fitness."""
    return (100 - e) ** gamma - (100 - p) ** beta - (sum(100 - pi for pi in trace) / t) ** alpha


def test_perfect_untouched_win_scores_100():
    r = make_result(100.0, 0.0, 50, winner="self")
    assert fitness_eq1(r, FitnessWeights(1, 2, 2)) == 100.0


def test_worked_example_weights_122():
    # e=40, p=70, t=200, mean damage 10 -> 60 - 900 - 100 = -940
    trace = [90.0] * 200  # sum(100 - p_i)/t = 10
    trace[-1] = 70.0
    trace[-2] = 70.0
    # rebuild: want sum(100-p_i) = 2000 with final 70; use 198 ticks at 90.909...
    # simpler: uniform trace value v with 100-v = 10 -> v = 90, then final p=70
    # adjust first elements to keep the mean at exactly 10:
    # sum = 10*200 = 2000; final two contribute 30+30=60; rest 198 sum to 1940
    v = 100 - 1940 / 198
    trace = [v] * 198 + [70.0, 70.0]
    r = MatchResult(70.0, 40.0, 200, trace, "timeout")
    got = fitness_eq1(r, FitnessWeights(1, 2, 2))
    assert got == pytest.approx(60 - 900 - 100, abs=1e-9)


def test_worked_example_weights_123():
    v = 100 - 1940 / 198
    trace = [v] * 198 + [70.0, 70.0]
    r = MatchResult(70.0, 40.0, 200, trace, "timeout")
    got = fitness_eq1(r, FitnessWeights(1, 2, 3))
    assert got == pytest.approx(60 - 900 - 1000, abs=1e-9)


def test_fitness_matches_oracle_on_random_results():
    rng = random.Random(0)
    for _ in range(500):
        t = rng.randrange(1, 300)
        final = rng.uniform(0, 100)
        trace = sorted((rng.uniform(final, 100) for _ in range(t)), reverse=True)
        trace[-1] = final
        e = rng.uniform(0, 100)
        r = MatchResult(final, e, t, trace, "timeout")
        for w in (FitnessWeights(1, 2, 2), FitnessWeights(1, 2, 3)):
            want = eq1_oracle(e, final, trace, t, w.gamma, w.beta, w.alpha)
            assert fitness_eq1(r, w) == pytest.approx(want, abs=1e-9)


def test_fitness_monotone_in_own_and_opponent_energy():
    rng = random.Random(1)
    w = FitnessWeights(1, 2, 2)
    for _ in range(100):
        t = rng.randrange(2, 100)
        trace = [100.0] * t  # freeze the third term at 0
        e = rng.uniform(1, 99)
        p = rng.uniform(1, 99)
        base = fitness_eq1(MatchResult(p, e, t, trace[:-1] + [p], "timeout"), w)
        better_p = fitness_eq1(MatchResult(p + 1, e, t, trace[:-1] + [p + 1], "timeout"), w)
        worse_e = fitness_eq1(MatchResult(p, e + 1, t, trace[:-1] + [p], "timeout"), w)
        assert better_p > base
        assert worse_e < base


def test_run_match_is_deterministic():
    def play():
        p, e, _ = run_match(
            RandomController(42), ScriptedEnemyController(get_archetype(3)),
            stage_for(3), seed=7, tick_limit=500)
        return (p.self_energy, p.opponent_energy, p.duration, p.winner,
                tuple(p.self_energy_trace))

    assert play() == play()


def test_idle_player_loses_to_archetype_two():
    p_res, _, _ = run_match(IdleController(), ScriptedEnemyController(get_archetype(2)),
                            stage_for(2), seed=3, tick_limit=3000)
    assert p_res.winner == "opponent"


def test_mirrored_results_agree():
    p_res, e_res, _ = run_match(
        RandomController(5), ScriptedEnemyController(get_archetype(6)),
        stage_for(6), seed=9, tick_limit=800)
    assert p_res.opponent_energy == e_res.self_energy
    assert p_res.self_energy == e_res.opponent_energy
    assert p_res.duration == e_res.duration
    assert p_res.self_energy_trace[-1] == p_res.self_energy
    assert all(a >= b for a, b in zip(p_res.self_energy_trace,
                                      p_res.self_energy_trace[1:]))


def test_trace_length_equals_duration():
    p_res, e_res, _ = run_match(
        IdleController(), ScriptedEnemyController(get_archetype(1)),
        stage_for(1), seed=2, tick_limit=3000)
    assert len(p_res.self_energy_trace) == p_res.duration
    p_res.validate()
    e_res.validate()


def test_non_finite_controller_forfeits():
    class BrokenController(IdleController):
        def actions(self, state):
            from evoarena.nets import NonFiniteOutputError
            raise NonFiniteOutputError("nan output")

    p_res, e_res, _ = run_match(
        BrokenController(), ScriptedEnemyController(get_archetype(2)),
        stage_for(2), seed=1, tick_limit=100)
    assert p_res.aborted and p_res.winner == "opponent"
    assert p_res.self_energy == 0.0
    assert e_res.winner == "self"


# -- opponent sampling ---------------------------------------------------------

def test_sample_is_best_plus_four_distinct_others():
    rng = random.Random(2)
    fits = [1.0, 9.0, 3.0, 4.0, 5.0, 2.0, 8.0]
    for _ in range(50):
        sample = draw_opponent_sample(fits, rng)
        assert len(sample) == 5
        assert sample[0] == 1          # the best
        assert len(set(sample)) == 5   # distinct
        assert 1 not in sample[1:]     # "4 more" excludes the best


def test_small_population_uses_everyone():
    rng = random.Random(3)
    fits = [1.0, 5.0, 3.0]
    sample = draw_opponent_sample(fits, rng)
    assert sorted(sample) == [0, 1, 2]
    assert sample[0] == 1


def test_population_of_exactly_five_is_deterministic():
    rng = random.Random(4)
    fits = [1.0, 2.0, 9.0, 4.0, 5.0]
    for _ in range(10):
        assert sorted(draw_opponent_sample(fits, rng)) == [0, 1, 2, 3, 4]


def test_generalization_mean_arithmetic():
    scores = {0: 100.0, 1: -940.0, 2: 0.0, 3: 50.0, 4: -10.0}

    def eval_vs(idx):
        # build a result whose (1,2,2) fitness equals the scripted score:
        # p=100, zero damage -> fitness = 100 - e
        return make_result(100.0, 100.0 - scores[idx], 1, trace=[100.0])

    got = generalization_fitness(eval_vs, [0.0] * 5, random.Random(0),
                                 FitnessWeights(1, 2, 2), sample=[0, 1, 2, 3, 4])
    assert got == pytest.approx((100 - 940 + 0 + 50 - 10) / 5)
    assert got == pytest.approx(-160.0)


def test_identical_matches_mean_is_that_fitness():
    def eval_vs(idx):
        return make_result(100.0, 40.0, 1, trace=[100.0])

    got = generalization_fitness(eval_vs, [0.0] * 5, random.Random(0),
                                 FitnessWeights(1, 2, 2), sample=[0, 1, 2, 3, 4])
    assert got == pytest.approx(60.0)


# -- schedule and coevolution -----------------------------------------------------

def test_schedule_unrolls_in_three_generation_turns():
    sched = CoevolutionSchedule(turn_length=3, total_generations=6)
    sides = sched.unroll()
    assert sides[:6] == ["player"] * 3 + ["enemy"] * 3
    assert sides == ["player"] * 3 + ["enemy"] * 3 + ["player"] * 3 + ["enemy"] * 3
    assert len(sides) == 12


def test_schedule_truncates_final_turn():
    sched = CoevolutionSchedule(turn_length=5, total_generations=7)
    sides = sched.unroll()
    assert len(sides) == 14
    assert sides == ["player"] * 5 + ["enemy"] * 5 + ["player"] * 2 + ["enemy"] * 2


def test_evaluate_task_vs_archetype():
    genome = random_fixed_genome(random.Random(1))
    task = EvalTask(genome=genome, side="player", opponents=[("arch", 5)],
                    seeds=[77], stage_id=5, tick_limit=400,
                    weights=FitnessWeights(1, 2, 2))
    out_a = evaluate_task(task)
    out_b = evaluate_task(task)
    assert out_a.fitness == out_b.fitness
    assert out_a.stats == out_b.stats


def coevolve_small(pop_size=6, turn=2, total=4, tick_limit=250):
    master = 99
    player_driver = GaDriver(GaConfig(population_size=pop_size, elitism=1), 1)
    enemy_driver = GaDriver(GaConfig(population_size=pop_size, elitism=1), 2)
    sched = CoevolutionSchedule(turn_length=turn, total_generations=total)
    return coevolve(player_driver, enemy_driver, sched, master,
                    tick_limit=tick_limit)


def test_coevolution_log_shape_and_sides():
    rows, final = coevolve_small()
    assert len(rows) == 8  # 2 sides x 4 generations each
    assert [r.evolving_side for r in rows] == \
        ["player", "player", "enemy", "enemy"] * 2
    assert [r.generation for r in rows] == list(range(1, 9))
    for r in rows:
        assert 0.0 <= r.best_player_energy <= 100.0
        assert 0.0 <= r.best_enemy_energy <= 100.0


def test_frozen_population_is_bitwise_unchanged():
    master = 55
    pop_size = 5
    player_driver = GaDriver(GaConfig(population_size=pop_size, elitism=1), 1)
    enemy_driver = NeatDriver(NeatConfig(population_size=pop_size), 2)
    enemy_start = enemy_driver.initial_population()
    frozen_before = [genome_to_json(g) for g in enemy_start]

    class FrozenEnemyDriver:
        algorithm = "neat"

        def initial_population(self):
            return enemy_start

        def evolve(self, population, fitnesses):
            return enemy_driver.evolve(population, fitnesses)

    sched = CoevolutionSchedule(turn_length=3, total_generations=3,
                                starting_side="player")
    rows, final = coevolve(player_driver, FrozenEnemyDriver(), sched, master,
                           tick_limit=200)
    # during the player's 3-generation turn the enemy genomes never moved
    frozen_after = [genome_to_json(g) for g in enemy_start]
    assert frozen_before == frozen_after
    assert len(rows) == 6
