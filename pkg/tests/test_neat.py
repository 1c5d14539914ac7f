"""Topology evolution: distance, speciation, allocation, crossover, and the
structural mutations with their acyclicity oracle."""

import math
import random

import pytest

from evoarena.neat import (
    InnovationRegistry,
    NeatConfig,
    NeatState,
    Species,
    allocate_offspring,
    compatibility_distance,
    crossover_graph,
    evolve_generation_neat,
    fitness_sharing,
    initial_genome,
    initial_population,
    mutate_add_connection,
    mutate_add_node,
    mutate_weights_graph,
    speciate,
)
from evoarena.nets import ConnectionGene, GraphGenome, NodeGene, decode_graph


def toy_genome(weights_by_innovation, n_in=2, n_out=1, extra_nodes=()):
    """Small genome with explicit innovation -> (src, dst, weight) genes."""
    nodes = [NodeGene(i, "input") for i in range(n_in)]
    nodes += [NodeGene(n_in + j, "output") for j in range(n_out)]
    nodes += [NodeGene(nid, "hidden") for nid in extra_nodes]
    conns = [ConnectionGene(src, dst, w, True, innov)
             for innov, (src, dst, w) in sorted(weights_by_innovation.items())]
    return GraphGenome(nodes, conns)


def cfg_small(**kw):
    defaults = dict(population_size=20, compat_threshold=3.0)
    defaults.update(kw)
    return NeatConfig(**defaults)


# -- compatibility distance -------------------------------------------------

def test_distance_identity():
    g = toy_genome({0: (0, 2, 1.0), 1: (1, 2, -1.0)})
    assert compatibility_distance(g, g, cfg_small()) == 0.0


def test_distance_weight_term_exact():
    # identical topology, all weights differ by 0.5, c_w = 0.4 -> 0.2
    a = toy_genome({0: (0, 2, 1.0), 1: (1, 2, 1.0)})
    b = toy_genome({0: (0, 2, 1.5), 1: (1, 2, 1.5)})
    assert compatibility_distance(a, b, cfg_small()) == pytest.approx(0.2)


def brute_force_alignment(a, b):
    """Oracle: count excess/disjoint by explicit innovation alignment."""
    ia = {c.innovation for c in a.connections}
    ib = {c.innovation for c in b.connections}
    cutoff = min(max(ia), max(ib))
    excess = sum(1 for i in ia ^ ib if i > cutoff)
    disjoint = sum(1 for i in ia ^ ib if i <= cutoff)
    return excess, disjoint


def test_distance_no_shared_innovations_matches_alignment_oracle():
    a = toy_genome({0: (0, 2, 1.0), 2: (1, 2, 1.0), 4: (0, 2, 0.5)})
    # disjoint/excess only; N = 1 because both genomes are tiny
    b = toy_genome({1: (0, 2, 1.0), 3: (1, 2, 1.0)})
    b.connections = [ConnectionGene(c.src, c.dst, c.weight, True, c.innovation + 1)
                     for c in toy_genome({0: (0, 2, 1.0), 2: (1, 2, 1.0)}).connections]
    excess, disjoint = brute_force_alignment(a, b)
    cfg = cfg_small()
    want = cfg.c_excess * excess + cfg.c_disjoint * disjoint  # N = 1
    assert compatibility_distance(a, b, cfg) == pytest.approx(want)


# -- speciation ---------------------------------------------------------------

def test_clones_form_one_species():
    rng = random.Random(0)
    reg = InnovationRegistry()
    base = initial_genome(3, 2, rng, reg)
    population = [base.copy() for _ in range(12)]
    species, _ = speciate(population, [], cfg_small(), rng, next_species_id=0)
    assert len(species) == 1
    assert len(species[0].members) == 12


def test_two_separated_clusters_form_two_species():
    rng = random.Random(1)
    a = toy_genome({i: (0, 2, 0.0) for i in range(1)})
    # same innovations, wildly different weights -> c_w * 30 >> threshold
    b = toy_genome({i: (0, 2, 30.0) for i in range(1)})
    population = [a.copy() for _ in range(5)] + [b.copy() for _ in range(5)]
    species, _ = speciate(population, [], cfg_small(), rng, next_species_id=0)
    assert len(species) == 2
    assert sorted(len(s.members) for s in species) == [5, 5]


def test_speciation_is_a_partition():
    rng = random.Random(2)
    reg = InnovationRegistry()
    population = initial_population(4, 2, 30, rng, reg, weight_scale=3.0)
    species, _ = speciate(population, [], cfg_small(compat_threshold=0.9),
                          rng, next_species_id=0)
    seen = []
    for sp in species:
        seen.extend(id(g) for g in sp.members)
    assert sorted(seen) == sorted(id(g) for g in population)


# -- fitness sharing ----------------------------------------------------------

def test_sharing_singleton_is_identity():
    g = toy_genome({0: (0, 2, 1.0)})
    g.fitness = 7.0
    sp = Species(id=0, representative=g, members=[g])
    fitness_sharing([sp])
    assert g.adjusted_fitness == 7.0


def test_sharing_divides_by_species_size():
    members = []
    for _ in range(4):
        g = toy_genome({0: (0, 2, 1.0)})
        g.fitness = 8.0
        members.append(g)
    fitness_sharing([Species(id=0, representative=members[0], members=members)])
    assert all(g.adjusted_fitness == 2.0 for g in members)


def test_sharing_sum_identity_over_random_populations():
    rng = random.Random(3)
    for _ in range(20):
        members = []
        for _ in range(rng.randrange(1, 9)):
            g = toy_genome({0: (0, 2, 1.0)})
            g.fitness = rng.uniform(-50, 50)
            members.append(g)
        fitness_sharing([Species(id=0, representative=members[0], members=members)])
        total_adjusted = sum(g.adjusted_fitness for g in members)
        assert total_adjusted == pytest.approx(
            sum(g.fitness for g in members) / len(members))


def test_sharing_preserves_argmax_within_species():
    rng = random.Random(4)
    members = []
    for _ in range(6):
        g = toy_genome({0: (0, 2, 1.0)})
        g.fitness = rng.uniform(0, 10)
        members.append(g)
    fitness_sharing([Species(id=0, representative=members[0], members=members)])
    by_raw = max(members, key=lambda g: g.fitness)
    by_adj = max(members, key=lambda g: g.adjusted_fitness)
    assert by_raw is by_adj


# -- offspring allocation -------------------------------------------------------

def species_with(fits, sid=0):
    members = []
    for f in fits:
        g = toy_genome({0: (0, 2, 1.0)})
        g.fitness = f
        g.adjusted_fitness = f
        members.append(g)
    return Species(id=sid, representative=members[0], members=members)


def test_single_species_takes_everything():
    sp = species_with([1.0, 2.0])
    assert allocate_offspring([sp], 40, stale_limit=15) == {0: 40}


def test_exact_proportional_split():
    a = species_with([10.0, 10.0, 10.0], sid=0)  # adjusted sum 30
    b = species_with([10.0], sid=1)              # adjusted sum 10
    counts = allocate_offspring([a, b], 40, stale_limit=15)
    assert counts == {0: 30, 1: 10}


def test_allocation_conserves_population_size():
    rng = random.Random(5)
    for _ in range(1000):
        species = []
        for sid in range(rng.randrange(1, 7)):
            fits = [rng.uniform(-30, 30) for _ in range(rng.randrange(1, 6))]
            sp = species_with(fits, sid=sid)
            sp.staleness = rng.randrange(0, 25)
            species.append(sp)
        pop = rng.randrange(1, 80)
        best = max((g for sp in species for g in sp.members),
                   key=lambda g: g.fitness)
        counts = allocate_offspring(species, pop, stale_limit=15, best_genome=best)
        assert sum(counts.values()) == pop
        assert all(c >= 0 for c in counts.values())


def test_stale_species_get_nothing_unless_global_best():
    fresh = species_with([1.0], sid=0)
    stale = species_with([100.0], sid=1)
    stale.staleness = 99
    counts = allocate_offspring([fresh, stale], 10, stale_limit=15)
    assert counts[1] == 0 and counts[0] == 10
    best = stale.members[0]
    counts = allocate_offspring([fresh, stale], 10, stale_limit=15, best_genome=best)
    assert counts[1] > 0


def test_all_zero_mass_allocates_uniformly():
    a = species_with([0.0, 0.0], sid=0)
    b = species_with([0.0], sid=1)
    counts = allocate_offspring([a, b], 10, stale_limit=15)
    assert sum(counts.values()) == 10
    assert abs(counts[0] - counts[1]) <= 1


# -- crossover -------------------------------------------------------------------

def test_crossover_identical_fully_active_parents():
    rng = random.Random(6)
    a = toy_genome({0: (0, 2, 1.0), 1: (1, 2, -0.5)})
    a.fitness = 1.0
    b = a.copy()
    b.fitness = 0.5
    child = crossover_graph(a, b, rng)
    assert {(c.src, c.dst, c.weight, c.active, c.innovation) for c in child.connections} \
        == {(c.src, c.dst, c.weight, c.active, c.innovation) for c in a.connections}


def test_child_structure_equals_fitter_parent():
    rng = random.Random(7)
    small = toy_genome({0: (0, 2, 1.0)})
    small.fitness = 1.0
    big = toy_genome({0: (0, 2, 2.0), 1: (1, 2, 0.5), 7: (0, 2, 0.1)})
    big.fitness = 9.0
    for _ in range(10):
        child = crossover_graph(small, big, rng)
        assert {c.innovation for c in child.connections} == {0, 1, 7}


def test_no_duplicate_innovations_in_children():
    rng = random.Random(8)
    reg = InnovationRegistry()
    pop = initial_population(3, 2, 10, rng, reg)
    for g, f in zip(pop, range(10)):
        g.fitness = float(f)
    for _ in range(200):
        a, b = rng.sample(pop, 2)
        child = crossover_graph(a, b, rng)
        innos = [c.innovation for c in child.connections]
        assert len(innos) == len(set(innos))


# -- structural mutations ----------------------------------------------------------

def test_add_node_counts_and_wiring():
    rng = random.Random(9)
    reg = InnovationRegistry()
    g = initial_genome(68, 5, rng, reg, weight_scale=1.0)
    reg.begin_generation()
    n_nodes, n_conns = len(g.nodes), len(g.connections)
    mutate_add_node(g, reg, rng)
    assert len(g.nodes) == n_nodes + 1
    assert len(g.connections) == n_conns + 2
    new_node = g.nodes[-1]
    incoming = [c for c in g.connections if c.dst == new_node.id and c.active]
    outgoing = [c for c in g.connections if c.src == new_node.id and c.active]
    assert len(incoming) == 1 and incoming[0].weight == 1.0
    assert len(outgoing) == 1
    disabled = [c for c in g.connections
                if not c.active and c.src == incoming[0].src and c.dst == outgoing[0].dst]
    assert len(disabled) == 1
    assert outgoing[0].weight == disabled[0].weight
    decode_graph(g)  # still a valid feedforward genome


def test_same_split_same_generation_shares_numbers():
    rng_a, rng_b = random.Random(10), random.Random(10)
    reg = InnovationRegistry()
    a = initial_genome(2, 1, rng_a, reg)
    b = a.copy()
    reg.begin_generation()
    mutate_add_node(a, reg, rng_a)
    mutate_add_node(b, reg, rng_b)
    assert a.nodes[-1].id == b.nodes[-1].id
    assert [c.innovation for c in a.connections[-2:]] == \
           [c.innovation for c in b.connections[-2:]]
    # next generation, the same split mints fresh numbers
    c = initial_genome(2, 1, random.Random(10), reg)
    reg.begin_generation()
    mutate_add_node(c, reg, random.Random(10))
    assert c.nodes[-1].id != a.nodes[-1].id


def test_disabled_connection_never_split():
    rng = random.Random(11)
    reg = InnovationRegistry()
    g = initial_genome(2, 1, rng, reg)
    g.connections[0].active = False
    reg.begin_generation()
    for _ in range(50):
        before = {c.innovation for c in g.connections if not c.active}
        probe = g.copy()
        mutate_add_node(probe, reg, rng)
        after_disabled = {c.innovation for c in probe.connections if not c.active}
        # the pre-disabled gene may never be the split target
        assert before <= after_disabled


def test_add_node_noop_without_active_connections():
    rng = random.Random(12)
    reg = InnovationRegistry()
    g = initial_genome(2, 1, rng, reg)
    for c in g.connections:
        c.active = False
    reg.begin_generation()
    n = len(g.connections)
    mutate_add_node(g, reg, rng)
    assert len(g.connections) == n


def test_add_connection_saturated_genome_is_noop():
    rng = random.Random(13)
    reg = InnovationRegistry()
    g = initial_genome(3, 2, rng, reg)  # fully connected, no hidden nodes
    reg.begin_generation()
    n = len(g.connections)
    mutate_add_connection(g, reg, rng)
    assert len(g.connections) == n


def kahn_is_acyclic(genome):
    """Independent topological-sort oracle over all genes."""
    nodes = [n.id for n in genome.nodes]
    edges = [(c.src, c.dst) for c in genome.connections]
    indeg = {n: 0 for n in nodes}
    for _, d in edges:
        indeg[d] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for s, d in edges:
            if s == n:
                indeg[d] -= 1
                if indeg[d] == 0:
                    ready.append(d)
    return seen == len(nodes)


def test_random_mutations_never_create_cycles_or_duplicates():
    rng = random.Random(14)
    reg = InnovationRegistry()
    g = initial_genome(3, 2, rng, reg)
    for i in range(1000):
        if i % 40 == 0:
            reg.begin_generation()
        if rng.random() < 0.5:
            mutate_add_node(g, reg, rng)
        else:
            mutate_add_connection(g, reg, rng)
        keys = [(c.src, c.dst) for c in g.connections]
        assert len(keys) == len(set(keys))
        assert kahn_is_acyclic(g)


def test_weight_mutation_gate_and_clamp():
    rng = random.Random(15)
    reg = InnovationRegistry()
    g = initial_genome(4, 2, rng, reg)
    frozen = g.copy()
    mutate_weights_graph(g, cfg_small(weight_mutate_rate=0.0), rng)
    assert [c.weight for c in g.connections] == [c.weight for c in frozen.connections]
    for c in g.connections:
        c.weight = 29.9
    for _ in range(20):
        mutate_weights_graph(g, cfg_small(weight_mutate_rate=1.0), rng)
    assert all(-30.0 <= c.weight <= 30.0 for c in g.connections)


# -- generation loop -----------------------------------------------------------------

def test_generation_conserves_population_and_keeps_best():
    rng = random.Random(16)
    cfg = cfg_small(population_size=30, elitism_per_species=1)
    reg = InnovationRegistry()
    state = NeatState(registry=reg)
    pop = initial_population(3, 2, 30, rng, reg)

    def fitness(g):
        return -sum(abs(c.weight) for c in g.connections)

    for _ in range(10):
        fits = [fitness(g) for g in pop]
        best_idx = max(range(30), key=lambda i: fits[i])
        best_sig = sorted((c.innovation, c.weight) for c in pop[best_idx].connections)
        pop = evolve_generation_neat(pop, fits, state, cfg, rng)
        assert len(pop) == 30
        survivor_sigs = [sorted((c.innovation, c.weight) for c in g.connections)
                         for g in pop]
        assert best_sig in survivor_sigs


def test_species_partition_after_generations():
    rng = random.Random(17)
    cfg = cfg_small(population_size=25, compat_threshold=1.0)
    reg = InnovationRegistry()
    state = NeatState(registry=reg)
    pop = initial_population(3, 2, 25, rng, reg, weight_scale=3.0)
    for _ in range(6):
        fits = [rng.uniform(0, 10) for _ in pop]
        pop = evolve_generation_neat(pop, fits, state, cfg, rng)
        member_ids = sorted(id(g) for sp in state.species for g in sp.members)
        # the species snapshot covers exactly the population that was evaluated
        assert len(member_ids) == 25
        assert len(set(member_ids)) == 25


def test_innovations_strictly_increase():
    rng = random.Random(18)
    reg = InnovationRegistry()
    g = initial_genome(3, 2, rng, reg)
    seen_max = max(c.innovation for c in g.connections)
    for i in range(100):
        reg.begin_generation()
        before = reg.next_innovation
        mutate_add_connection(g.copy(), reg, rng)
        mutate_add_node(g, reg, rng)
        assert reg.next_innovation >= before
        new_max = max(c.innovation for c in g.connections)
        assert new_max >= seen_max
        seen_max = new_max
