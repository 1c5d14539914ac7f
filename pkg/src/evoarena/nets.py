"""Controller networks: flat weight genomes and node/connection genomes.

Both encodings decode to feedforward nets with logistic units; an output
strictly above 0.5 fires its action. The flat genome is one layer from the
68 sensors to the 5 actions plus 5 biases (345 weights total). The graph
genome carries explicit node and connection genes with innovation numbers
so structure can evolve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import ActionSet
from .sensors import SENSOR_COUNT

N_ACTIONS = 5
FIXED_GENOME_LEN = SENSOR_COUNT * N_ACTIONS + N_ACTIONS  # 345

# Output index -> action name; fixed so genomes stay portable.
OUTPUT_ACTIONS = ("left", "right", "jump", "shoot", "release")

GENOME_FORMAT_VERSION = 1

# Per-node fan-in above which activation uses a vectorized dot product.
# Kept identical across both genome kinds so a single-layer graph genome
# reproduces the flat genome bit for bit.
_VECTOR_FANIN = 16


class GenomeError(ValueError):
    """Malformed genome: wrong length, bad reference, or a cycle."""


class NonFiniteOutputError(RuntimeError):
    """A controller produced NaN/inf outputs; the match treats it as a loss."""


def logistic(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-min(z, 500.0)))
    ez = math.exp(max(z, -500.0))
    return ez / (1.0 + ez)


def _actions_from_outputs(outputs: list[float]) -> ActionSet:
    actions = ActionSet()
    for name, value in zip(OUTPUT_ACTIONS, outputs):
        if not math.isfinite(value):
            raise NonFiniteOutputError("controller output is not finite")
        if value > 0.5:
            setattr(actions, name, True)
    return actions


# --------------------------------------------------------------------------
# Flat single-layer genome


@dataclass
class FixedGenome:
    """345 weights: one block of 68 per output, then the 5 biases."""

    weights: np.ndarray
    fitness: float = 0.0

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (FIXED_GENOME_LEN,):
            raise GenomeError(
                f"flat genome must have {FIXED_GENOME_LEN} weights, got {self.weights.shape}"
            )
        if not np.all(np.isfinite(self.weights)):
            raise GenomeError("flat genome contains non-finite weights")

    def copy(self) -> "FixedGenome":
        return FixedGenome(self.weights.copy(), self.fitness)

    def output_block(self, j: int) -> np.ndarray:
        return self.weights[SENSOR_COUNT * j:SENSOR_COUNT * (j + 1)]

    def bias(self, j: int) -> float:
        return float(self.weights[SENSOR_COUNT * N_ACTIONS + j])


def random_fixed_genome(rng, scale: float = 1.0) -> FixedGenome:
    vals = [rng.uniform(-scale, scale) for _ in range(FIXED_GENOME_LEN)]
    return FixedGenome(np.array(vals, dtype=np.float64))


def fixed_outputs(genome: FixedGenome, sensors: np.ndarray) -> list[float]:
    if sensors.shape != (SENSOR_COUNT,):
        raise GenomeError(f"expected {SENSOR_COUNT} sensors, got {sensors.shape}")
    outs = []
    for j in range(N_ACTIONS):
        z = genome.bias(j) + float(np.dot(genome.output_block(j), sensors))
        outs.append(logistic(z))
    return outs


def activate_fixed(genome: FixedGenome, sensors: np.ndarray) -> ActionSet:
    return _actions_from_outputs(fixed_outputs(genome, sensors))


# --------------------------------------------------------------------------
# Graph genome (node + connection genes)


@dataclass(slots=True)
class NodeGene:
    id: int
    kind: str  # "input" | "output" | "hidden"
    bias: float = 0.0
    active: bool = True

    def copy(self) -> "NodeGene":
        return NodeGene(self.id, self.kind, self.bias, self.active)


@dataclass(slots=True)
class ConnectionGene:
    src: int
    dst: int
    weight: float
    active: bool
    innovation: int

    def copy(self) -> "ConnectionGene":
        return ConnectionGene(self.src, self.dst, self.weight, self.active, self.innovation)


@dataclass
class GraphGenome:
    nodes: list[NodeGene]
    connections: list[ConnectionGene]
    fitness: float = 0.0
    adjusted_fitness: float = 0.0

    def copy(self) -> "GraphGenome":
        return GraphGenome(
            [n.copy() for n in self.nodes],
            [c.copy() for c in self.connections],
            self.fitness,
            self.adjusted_fitness,
        )

    def node_ids(self) -> set[int]:
        return {n.id for n in self.nodes}

    def input_ids(self) -> list[int]:
        return sorted(n.id for n in self.nodes if n.kind == "input")

    def output_ids(self) -> list[int]:
        return sorted(n.id for n in self.nodes if n.kind == "output")

    def connection_keys(self) -> set[tuple[int, int]]:
        return {(c.src, c.dst) for c in self.connections}

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise GenomeError("duplicate node ids")
        known = set(ids)
        innos = [c.innovation for c in self.connections]
        if len(innos) != len(set(innos)):
            raise GenomeError("duplicate innovation numbers")
        keys = [(c.src, c.dst) for c in self.connections]
        if len(keys) != len(set(keys)):
            raise GenomeError("duplicate connections")
        for c in self.connections:
            if c.src not in known or c.dst not in known:
                raise GenomeError(f"connection {c.src}->{c.dst} references unknown node")
        _topo_order(self)  # raises on cycles


def _topo_order(genome: GraphGenome, active_only: bool = False) -> list[int]:
    """Kahn topological order over the genome's connection graph.

    With active_only=False the order covers every gene, enabled or not, so
    the feedforward invariant is enforced on the whole genotype (a disabled
    gene may be re-enabled later by crossover).
    """
    indegree: dict[int, int] = {n.id: 0 for n in genome.nodes}
    outgoing: dict[int, list[int]] = {n.id: [] for n in genome.nodes}
    for c in genome.connections:
        if active_only and not c.active:
            continue
        indegree[c.dst] += 1
        outgoing[c.src].append(c.dst)
    ready = sorted(nid for nid, deg in indegree.items() if deg == 0)
    order: list[int] = []
    while ready:
        nid = ready.pop()
        order.append(nid)
        inserted = False
        for dst in outgoing[nid]:
            indegree[dst] -= 1
            if indegree[dst] == 0:
                ready.append(dst)
                inserted = True
        if inserted:
            ready.sort()
    if len(order) != len(genome.nodes):
        raise GenomeError("connection graph contains a cycle")
    return order


def would_create_cycle(genome: GraphGenome, src: int, dst: int) -> bool:
    """True if adding src->dst would close a directed cycle.

    Checked against all genes, not just active ones, so a disabled edge can
    never be re-enabled into a cycle.
    """
    if src == dst:
        return True
    outgoing: dict[int, list[int]] = {}
    for c in genome.connections:
        outgoing.setdefault(c.src, []).append(c.dst)
    stack = [dst]
    seen = {dst}
    while stack:
        nid = stack.pop()
        if nid == src:
            return True
        for nxt in outgoing.get(nid, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


class Phenotype:
    """Execution plan decoded from a GraphGenome: nodes in dependency order,
    each with its incoming weights gathered for evaluation."""

    __slots__ = ("n_inputs", "input_index", "plan", "output_slots", "n_slots")

    def __init__(self, genome: GraphGenome):
        genome.validate()
        inputs = genome.input_ids()
        outputs = genome.output_ids()
        if not outputs:
            raise GenomeError("genome has no output nodes")
        order = _topo_order(genome, active_only=True)
        slot: dict[int, int] = {}
        for i, nid in enumerate(inputs):
            slot[nid] = i
        next_slot = len(inputs)
        for nid in order:
            if nid not in slot:
                slot[nid] = next_slot
                next_slot += 1
        self.n_slots = next_slot
        self.n_inputs = len(inputs)
        self.input_index = {nid: i for i, nid in enumerate(inputs)}

        incoming: dict[int, list[tuple[int, float]]] = {}
        for c in genome.connections:
            if c.active:
                incoming.setdefault(c.dst, []).append((c.src, c.weight))
        biases = {n.id: n.bias for n in genome.nodes}
        kinds = {n.id: n.kind for n in genome.nodes}

        # (slot, bias, src_slot_array, weight_array) per non-input node, in
        # evaluation order. Incoming edges are sorted by source id so the
        # accumulation order is reproducible.
        self.plan: list[tuple[int, float, np.ndarray, np.ndarray]] = []
        for nid in order:
            if kinds[nid] == "input":
                continue
            edges = sorted(incoming.get(nid, []), key=lambda e: e[0])
            srcs = np.array([slot[s] for s, _ in edges], dtype=np.intp)
            ws = np.array([w for _, w in edges], dtype=np.float64)
            self.plan.append((slot[nid], biases[nid], srcs, ws))
        self.output_slots = [slot[nid] for nid in outputs]

    def forward(self, inputs: np.ndarray) -> list[float]:
        if inputs.shape != (self.n_inputs,):
            raise GenomeError(f"expected {self.n_inputs} inputs, got {inputs.shape}")
        values = np.zeros(self.n_slots, dtype=np.float64)
        values[: self.n_inputs] = inputs
        for slot, bias, srcs, ws in self.plan:
            if len(ws) >= _VECTOR_FANIN:
                z = bias + float(np.dot(ws, values[srcs]))
            else:
                z = bias
                for k in range(len(ws)):
                    z += ws[k] * values[srcs[k]]
            values[slot] = logistic(z)
        return [float(values[s]) for s in self.output_slots]


def decode_graph(genome: GraphGenome) -> Phenotype:
    return Phenotype(genome)


def activate_graph(phenotype: Phenotype, sensors: np.ndarray) -> ActionSet:
    return _actions_from_outputs(phenotype.forward(sensors))


def graph_from_fixed(weights: np.ndarray) -> GraphGenome:
    """The single-layer graph genome equivalent to a flat genome.

    Innovation numbers follow the flat layout: connection (input i ->
    output j) gets innovation j*68 + i, matching the convention used for
    freshly seeded populations.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (FIXED_GENOME_LEN,):
        raise GenomeError(f"expected {FIXED_GENOME_LEN} weights")
    nodes = [NodeGene(i, "input") for i in range(SENSOR_COUNT)]
    for j in range(N_ACTIONS):
        nodes.append(
            NodeGene(SENSOR_COUNT + j, "output", bias=float(weights[SENSOR_COUNT * N_ACTIONS + j]))
        )
    connections = []
    for j in range(N_ACTIONS):
        for i in range(SENSOR_COUNT):
            connections.append(
                ConnectionGene(
                    src=i,
                    dst=SENSOR_COUNT + j,
                    weight=float(weights[SENSOR_COUNT * j + i]),
                    active=True,
                    innovation=SENSOR_COUNT * j + i,
                )
            )
    return GraphGenome(nodes, connections)


# --------------------------------------------------------------------------
# Serialization (structured text with a format version; round-trip tested)


def genome_to_json(genome: FixedGenome | GraphGenome) -> str:
    if isinstance(genome, FixedGenome):
        doc = {
            "format": "flat-genome",
            "format_version": GENOME_FORMAT_VERSION,
            "weights": [float(w) for w in genome.weights],
        }
    else:
        doc = {
            "format": "graph-genome",
            "format_version": GENOME_FORMAT_VERSION,
            "nodes": [
                {"id": n.id, "kind": n.kind, "bias": n.bias, "active": n.active}
                for n in genome.nodes
            ],
            "connections": [
                {
                    "src": c.src,
                    "dst": c.dst,
                    "weight": c.weight,
                    "active": c.active,
                    "innovation": c.innovation,
                }
                for c in genome.connections
            ],
        }
    return json.dumps(doc, indent=1)


def genome_from_json(text: str) -> FixedGenome | GraphGenome:
    doc = json.loads(text)
    version = doc.get("format_version")
    if version != GENOME_FORMAT_VERSION:
        raise GenomeError(f"unsupported genome format version {version!r}")
    kind = doc.get("format")
    if kind == "flat-genome":
        return FixedGenome(np.array(doc["weights"], dtype=np.float64))
    if kind == "graph-genome":
        nodes = [NodeGene(n["id"], n["kind"], n["bias"], n["active"]) for n in doc["nodes"]]
        conns = [
            ConnectionGene(c["src"], c["dst"], c["weight"], c["active"], c["innovation"])
            for c in doc["connections"]
        ]
        genome = GraphGenome(nodes, conns)
        genome.validate()
        return genome
    raise GenomeError(f"unknown genome format {kind!r}")
