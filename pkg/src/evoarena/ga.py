"""Generational GA over flat weight genomes.

Tournament selection, uniform crossover, per-gene Gaussian mutation, and
elitist replacement. All randomness comes through the caller's
`random.Random`, so runs replay from their seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

WEIGHT_CLAMP = 30.0


@dataclass
class GaConfig:
    population_size: int = 50
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    mutation_sigma: float = 0.5
    elitism: int = 1

    def validate(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.tournament_size < 2:
            raise ValueError("tournament_size must be >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")
        if self.mutation_sigma < 0.0:
            raise ValueError("mutation_sigma must be >= 0")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must be < population_size")


def tournament_select(
    population: list, fitnesses: list[float], k: int, rng: random.Random
) -> object:
    """Fittest of k uniform draws (with replacement); ties go to the lowest
    population index."""
    if not population:
        raise ValueError("empty population")
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    best_idx = rng.randrange(len(population))
    for _ in range(k - 1):
        idx = rng.randrange(len(population))
        if fitnesses[idx] > fitnesses[best_idx] or (
            fitnesses[idx] == fitnesses[best_idx] and idx < best_idx
        ):
            best_idx = idx
    return population[best_idx]


def crossover_weights(a: np.ndarray, b: np.ndarray, rng: random.Random) -> np.ndarray:
    """Uniform crossover: each gene from either parent with probability 0.5."""
    if a.shape != b.shape:
        raise ValueError(f"parent length mismatch: {a.shape} vs {b.shape}")
    child = a.copy()
    for i in range(len(child)):
        if rng.random() < 0.5:
            child[i] = b[i]
    return child


def mutate_weights(
    w: np.ndarray, rate: float, sigma: float, rng: random.Random
) -> np.ndarray:
    """Per-gene Gaussian perturbation with probability `rate`, clamped."""
    out = w.copy()
    for i in range(len(out)):
        if rng.random() < rate:
            out[i] += rng.gauss(0.0, sigma)
            if out[i] > WEIGHT_CLAMP:
                out[i] = WEIGHT_CLAMP
            elif out[i] < -WEIGHT_CLAMP:
                out[i] = -WEIGHT_CLAMP
    return out


def evolve_generation_ga(
    population: list[np.ndarray],
    fitnesses: list[float],
    config: GaConfig,
    rng: random.Random,
) -> list[np.ndarray]:
    """One generational replacement: elites copied, the rest bred."""
    config.validate()
    if len(population) != config.population_size:
        raise ValueError("population size does not match config")

    order = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
    next_pop: list[np.ndarray] = [population[order[e]].copy() for e in range(config.elitism)]
    while len(next_pop) < config.population_size:
        parent_a = tournament_select(population, fitnesses, config.tournament_size, rng)
        if rng.random() < config.crossover_rate:
            parent_b = tournament_select(population, fitnesses, config.tournament_size, rng)
            child = crossover_weights(parent_a, parent_b, rng)
        else:
            child = parent_a.copy()
        next_pop.append(mutate_weights(child, config.mutation_rate, config.mutation_sigma, rng))
    return next_pop
