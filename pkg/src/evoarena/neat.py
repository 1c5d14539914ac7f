"""Topology-and-weight evolution over graph genomes.

Implements the usual machinery: innovation-number bookkeeping so genomes
stay alignable, speciation by compatibility distance, fitness sharing,
proportional offspring allocation with stale-species culling, aligned
crossover, and the three structural/weight mutations. Genomes are kept
feedforward; every mutation preserves acyclicity of the full gene graph.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .nets import ConnectionGene, GraphGenome, NodeGene, would_create_cycle

WEIGHT_CLAMP = 30.0

# Weight mutation split: most touched genes get a small nudge, the rest a
# full reset.
PERTURB_PROB = 0.9
PERTURB_SIGMA = 0.5
RESET_RANGE = 2.0

DISABLED_INHERIT_PROB = 0.75
INTERSPECIES_MATING_PROB = 0.001


@dataclass
class NeatConfig:
    population_size: int = 150
    compat_threshold: float = 3.0
    c_excess: float = 1.0
    c_disjoint: float = 1.0
    c_weight: float = 0.4
    weight_mutate_rate: float = 0.8
    add_node_rate: float = 0.1
    add_connection_rate: float = 0.3
    crossover_rate: float = 0.75
    survival_fraction: float = 0.25
    stale_species_limit: int = 15
    elitism_per_species: int = 1

    def validate(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        for name in ("weight_mutate_rate", "add_node_rate", "add_connection_rate",
                     "crossover_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")
        if not 0.0 < self.survival_fraction <= 1.0:
            raise ValueError("survival_fraction must be in (0, 1]")
        if self.stale_species_limit < 1:
            raise ValueError("stale_species_limit must be >= 1")


@dataclass
class InnovationRegistry:
    """Hands out innovation numbers and node ids.

    Within one generation the same structural novelty (same connection
    endpoints, or a split of the same connection) receives the same
    numbers; the per-generation memory is dropped at `begin_generation`.
    """

    next_innovation: int = 0
    next_node_id: int = 0
    conn_seen: dict[tuple[int, int], int] = field(default_factory=dict)
    split_seen: dict[int, tuple[int, int, int]] = field(default_factory=dict)

    def begin_generation(self) -> None:
        self.conn_seen.clear()
        self.split_seen.clear()

    def connection_innovation(self, src: int, dst: int) -> int:
        key = (src, dst)
        if key not in self.conn_seen:
            self.conn_seen[key] = self.next_innovation
            self.next_innovation += 1
        return self.conn_seen[key]

    def split_numbers(self, conn_innovation: int) -> tuple[int, int, int]:
        """(new node id, in-connection innovation, out-connection innovation)."""
        if conn_innovation not in self.split_seen:
            node_id = self.next_node_id
            self.next_node_id += 1
            in_innov = self.next_innovation
            out_innov = self.next_innovation + 1
            self.next_innovation += 2
            self.split_seen[conn_innovation] = (node_id, in_innov, out_innov)
        return self.split_seen[conn_innovation]


@dataclass
class Species:
    id: int
    representative: GraphGenome
    members: list[GraphGenome] = field(default_factory=list)
    best_fitness_ever: float = -math.inf
    staleness: int = 0


def initial_genome(n_inputs: int, n_outputs: int, rng: random.Random,
                   registry: InnovationRegistry, weight_scale: float = 1.0) -> GraphGenome:
    """Fully connected single-layer genome with random weights and biases."""
    nodes = [NodeGene(i, "input") for i in range(n_inputs)]
    for j in range(n_outputs):
        nodes.append(NodeGene(n_inputs + j, "output",
                              bias=rng.uniform(-weight_scale, weight_scale)))
    connections = []
    for j in range(n_outputs):
        for i in range(n_inputs):
            connections.append(ConnectionGene(
                src=i,
                dst=n_inputs + j,
                weight=rng.uniform(-weight_scale, weight_scale),
                active=True,
                innovation=registry.connection_innovation(i, n_inputs + j),
            ))
    if registry.next_node_id < n_inputs + n_outputs:
        registry.next_node_id = n_inputs + n_outputs
    return GraphGenome(nodes, connections)


def initial_population(n_inputs: int, n_outputs: int, size: int, rng: random.Random,
                       registry: InnovationRegistry, weight_scale: float = 1.0
                       ) -> list[GraphGenome]:
    return [initial_genome(n_inputs, n_outputs, rng, registry, weight_scale)
            for _ in range(size)]


# --------------------------------------------------------------------------
# Speciation


def compatibility_distance(a: GraphGenome, b: GraphGenome, cfg: NeatConfig) -> float:
    """c_e*E/N + c_d*D/N + c_w*mean|dw| over innovation-aligned genes."""
    genes_a = {c.innovation: c for c in a.connections}
    genes_b = {c.innovation: c for c in b.connections}
    if not genes_a and not genes_b:
        return 0.0
    max_a = max(genes_a) if genes_a else -1
    max_b = max(genes_b) if genes_b else -1
    cutoff = min(max_a, max_b)
    excess = disjoint = matching = 0
    weight_diff = 0.0
    for innov in genes_a.keys() | genes_b.keys():
        in_a = innov in genes_a
        in_b = innov in genes_b
        if in_a and in_b:
            matching += 1
            weight_diff += abs(genes_a[innov].weight - genes_b[innov].weight)
        elif innov > cutoff:
            excess += 1
        else:
            disjoint += 1
    n = max(len(genes_a), len(genes_b))
    if len(genes_a) < 20 and len(genes_b) < 20:
        n = 1
    mean_diff = weight_diff / matching if matching else 0.0
    return (cfg.c_excess * excess / n
            + cfg.c_disjoint * disjoint / n
            + cfg.c_weight * mean_diff)


def speciate(population: list[GraphGenome], previous_species: list[Species],
             cfg: NeatConfig, rng: random.Random,
             next_species_id: int) -> tuple[list[Species], int]:
    """Partition the population into species.

    Each genome joins the first carried-over species whose representative
    (resampled uniformly from last generation's members) is within the
    compatibility threshold, else founds a new species. Species left empty
    are dropped.
    """
    carried: list[Species] = []
    for sp in previous_species:
        rep = rng.choice(sp.members) if sp.members else sp.representative
        carried.append(Species(
            id=sp.id,
            representative=rep,
            members=[],
            best_fitness_ever=sp.best_fitness_ever,
            staleness=sp.staleness,
        ))
    for genome in population:
        placed = False
        for sp in carried:
            if compatibility_distance(genome, sp.representative, cfg) < cfg.compat_threshold:
                sp.members.append(genome)
                placed = True
                break
        if not placed:
            fresh = Species(id=next_species_id, representative=genome, members=[genome])
            next_species_id += 1
            carried.append(fresh)
    return [sp for sp in carried if sp.members], next_species_id


def fitness_sharing(species_list: list[Species]) -> None:
    """adjusted = raw / species size, applied in place."""
    for sp in species_list:
        size = len(sp.members)
        for genome in sp.members:
            genome.adjusted_fitness = genome.fitness / size


def allocate_offspring(species_list: list[Species], population_size: int,
                       stale_limit: int, best_genome: GraphGenome | None = None
                       ) -> dict[int, int]:
    """Largest-remainder proportional split of the next generation.

    Adjusted fitnesses are min-shifted to be non-negative first (the duel
    fitness can be deeply negative). Species past the staleness limit get
    nothing unless they hold the current global best. Counts always sum to
    population_size, and the best genome's species keeps at least one slot.
    """
    if not species_list:
        raise ValueError("no species to allocate to")
    all_adjusted = [g.adjusted_fitness for sp in species_list for g in sp.members]
    shift = min(all_adjusted)
    shift = -shift if shift < 0 else 0.0

    best_species_id = None
    if best_genome is not None:
        for sp in species_list:
            if any(g is best_genome for g in sp.members):
                best_species_id = sp.id
                break

    masses: dict[int, float] = {}
    for sp in species_list:
        if sp.staleness > stale_limit and sp.id != best_species_id:
            masses[sp.id] = 0.0
        else:
            masses[sp.id] = sum(g.adjusted_fitness + shift for g in sp.members)
    total = sum(masses.values())
    if total <= 0.0:
        eligible = [sp.id for sp in species_list
                    if sp.staleness <= stale_limit or sp.id == best_species_id]
        if not eligible:
            eligible = [sp.id for sp in species_list]
        masses = {sid: (1.0 if sid in eligible else 0.0) for sid in masses}
        total = float(len(eligible))

    quotas = {sid: population_size * mass / total for sid, mass in masses.items()}
    counts = {sid: int(math.floor(q)) for sid, q in quotas.items()}
    leftover = population_size - sum(counts.values())
    by_remainder = sorted(quotas, key=lambda sid: (-(quotas[sid] - counts[sid]), sid))
    for sid in by_remainder[:leftover]:
        counts[sid] += 1

    if best_species_id is not None and counts.get(best_species_id, 0) == 0:
        donor = max(counts, key=lambda sid: (counts[sid], -sid))
        counts[donor] -= 1
        counts[best_species_id] += 1
    return counts


# --------------------------------------------------------------------------
# Variation operators


def crossover_graph(a: GraphGenome, b: GraphGenome, rng: random.Random) -> GraphGenome:
    """Innovation-aligned crossover.

    Matching genes come from either parent at random; disjoint and excess
    genes come from the fitter parent (ties favor `a`), so the child's
    structure equals the fitter parent's. A gene disabled in either parent
    stays disabled with probability 0.75.
    """
    if (b.fitness > a.fitness):
        fitter, other = b, a
    else:
        fitter, other = a, b
    other_by_innov = {c.innovation: c for c in other.connections}

    child_conns: list[ConnectionGene] = []
    for gene in fitter.connections:
        partner = other_by_innov.get(gene.innovation)
        if partner is not None:
            chosen = gene if rng.random() < 0.5 else partner
            new_gene = ConnectionGene(gene.src, gene.dst, chosen.weight, True, gene.innovation)
            disabled_somewhere = (not gene.active) or (not partner.active)
        else:
            new_gene = gene.copy()
            new_gene.active = True
            disabled_somewhere = not gene.active
        if disabled_somewhere:
            new_gene.active = not (rng.random() < DISABLED_INHERIT_PROB)
        child_conns.append(new_gene)

    other_nodes = {n.id: n for n in other.nodes}
    child_nodes: list[NodeGene] = []
    for node in fitter.nodes:
        partner = other_nodes.get(node.id)
        if partner is not None and partner.kind == node.kind and rng.random() < 0.5:
            child_nodes.append(partner.copy())
        else:
            child_nodes.append(node.copy())
    return GraphGenome(child_nodes, child_conns)


def mutate_add_node(genome: GraphGenome, registry: InnovationRegistry,
                    rng: random.Random) -> GraphGenome:
    """Split a random active connection with a new hidden node.

    The old gene is disabled; the in-connection gets weight 1.0 and the
    out-connection inherits the old weight. No-op when nothing is active.
    """
    active = [c for c in genome.connections if c.active]
    if not active:
        return genome
    conn = rng.choice(active)
    node_id, in_innov, out_innov = registry.split_numbers(conn.innovation)
    if node_id in genome.node_ids():
        # Same split already applied to this genome this generation.
        return genome
    conn.active = False
    genome.nodes.append(NodeGene(node_id, "hidden", bias=0.0))
    genome.connections.append(ConnectionGene(conn.src, node_id, 1.0, True, in_innov))
    genome.connections.append(ConnectionGene(node_id, conn.dst, conn.weight, True, out_innov))
    return genome


def mutate_add_connection(genome: GraphGenome, registry: InnovationRegistry,
                          rng: random.Random, attempts: int = 20) -> GraphGenome:
    """Add one new feedforward connection, sampling up to `attempts` pairs.

    Rejects duplicates (enabled or not), self-loops, edges into inputs,
    edges out of outputs, and anything that would close a cycle in the full
    gene graph. No-op when no legal pair is found.
    """
    sources = [n.id for n in genome.nodes if n.kind != "output"]
    targets = [n.id for n in genome.nodes if n.kind != "input"]
    existing = genome.connection_keys()
    for _ in range(attempts):
        src = rng.choice(sources)
        dst = rng.choice(targets)
        if src == dst or (src, dst) in existing:
            continue
        if would_create_cycle(genome, src, dst):
            continue
        genome.connections.append(ConnectionGene(
            src, dst, rng.gauss(0.0, 1.0), True,
            registry.connection_innovation(src, dst),
        ))
        return genome
    return genome


def mutate_weights_graph(genome: GraphGenome, cfg: NeatConfig,
                         rng: random.Random) -> GraphGenome:
    """Nudge-or-reset every connection weight (and node bias), gated by
    `weight_mutate_rate` for the whole operator."""
    if rng.random() >= cfg.weight_mutate_rate:
        return genome
    for conn in genome.connections:
        if rng.random() < PERTURB_PROB:
            conn.weight += rng.gauss(0.0, PERTURB_SIGMA)
        else:
            conn.weight = rng.uniform(-RESET_RANGE, RESET_RANGE)
        conn.weight = max(-WEIGHT_CLAMP, min(WEIGHT_CLAMP, conn.weight))
    for node in genome.nodes:
        if node.kind == "input":
            continue
        if rng.random() < PERTURB_PROB:
            node.bias += rng.gauss(0.0, PERTURB_SIGMA)
        else:
            node.bias = rng.uniform(-RESET_RANGE, RESET_RANGE)
        node.bias = max(-WEIGHT_CLAMP, min(WEIGHT_CLAMP, node.bias))
    return genome


# --------------------------------------------------------------------------
# Generation loop


@dataclass
class NeatState:
    """Cross-generation bookkeeping for one evolving population."""

    registry: InnovationRegistry
    species: list[Species] = field(default_factory=list)
    next_species_id: int = 0
    generation: int = 0


def evolve_generation_neat(population: list[GraphGenome], fitnesses: list[float],
                           state: NeatState, cfg: NeatConfig,
                           rng: random.Random) -> list[GraphGenome]:
    """One full generation: speciate, share, allocate, reproduce."""
    cfg.validate()
    if len(population) != cfg.population_size:
        raise ValueError("population size does not match config")
    if len(fitnesses) != len(population):
        raise ValueError("fitnesses must align with the population")

    for genome, fit in zip(population, fitnesses):
        genome.fitness = fit
    best = max(population, key=lambda g: g.fitness)

    state.registry.begin_generation()
    species_list, state.next_species_id = speciate(
        population, state.species, cfg, rng, state.next_species_id)

    for sp in species_list:
        top = max(g.fitness for g in sp.members)
        if top > sp.best_fitness_ever:
            sp.best_fitness_ever = top
            sp.staleness = 0
        else:
            sp.staleness += 1

    fitness_sharing(species_list)
    counts = allocate_offspring(species_list, cfg.population_size,
                                cfg.stale_species_limit, best)

    survivors_by_species: dict[int, list[GraphGenome]] = {}
    for sp in species_list:
        ranked = sorted(sp.members, key=lambda g: -g.fitness)
        keep = max(1, math.ceil(cfg.survival_fraction * len(ranked)))
        survivors_by_species[sp.id] = ranked[:keep]

    next_pop: list[GraphGenome] = []
    for sp in sorted(species_list, key=lambda s: s.id):
        n = counts.get(sp.id, 0)
        if n == 0:
            continue
        ranked = sorted(sp.members, key=lambda g: -g.fitness)
        survivors = survivors_by_species[sp.id]
        elites = min(cfg.elitism_per_species, n, len(ranked))
        for e in range(elites):
            next_pop.append(ranked[e].copy())
        for _ in range(n - elites):
            parent_a = rng.choice(survivors)
            child: GraphGenome
            if rng.random() < cfg.crossover_rate:
                pool = survivors
                if rng.random() < INTERSPECIES_MATING_PROB and len(species_list) > 1:
                    other_sp = rng.choice([s for s in species_list if s.id != sp.id])
                    pool = survivors_by_species[other_sp.id]
                parent_b = rng.choice(pool)
                child = crossover_graph(parent_a, parent_b, rng)
            else:
                child = parent_a.copy()
            mutate_weights_graph(child, cfg, rng)
            if rng.random() < cfg.add_node_rate:
                mutate_add_node(child, state.registry, rng)
            if rng.random() < cfg.add_connection_rate:
                mutate_add_connection(child, state.registry, rng)
            child.fitness = 0.0
            child.adjusted_fitness = 0.0
            next_pop.append(child)

    state.species = species_list
    state.generation += 1
    assert len(next_pop) == cfg.population_size
    return next_pop
