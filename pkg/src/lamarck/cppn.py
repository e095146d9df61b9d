"""Body genotype: a small feed-forward CPPN with NEAT-style variation.

Genomes are immutable. Innovation ids and split-node ids are derived from a
hash of the structural event they describe, so two lineages that make the same
structural change agree on its id without sharing an innovation database.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

NUM_INPUTS = 4
NUM_OUTPUTS = 5
INPUT_IDS = tuple(range(NUM_INPUTS))
OUTPUT_IDS = tuple(range(NUM_INPUTS, NUM_INPUTS + NUM_OUTPUTS))
OUTPUT_NAMES = ("brick", "joint", "empty", "rot0", "rot90")
WEIGHT_LIMIT = 5.0

ACTIVATIONS = {
    "identity": lambda v: v,
    "sigmoid": lambda v: 1.0 / (1.0 + math.exp(-v)) if v > -700 else 0.0,
    "sine": math.sin,
    "gaussian": lambda v: math.exp(-v * v) if abs(v) < 30 else 0.0,
    "tanh": math.tanh,
}
ACTIVATION_NAMES = tuple(ACTIVATIONS)


class GenomeIntegrityError(ValueError):
    """A genome violates a structural invariant."""


@dataclass(frozen=True)
class NodeGene:
    id: int
    role: str  # "input" | "hidden" | "output"
    activation: str = "identity"


@dataclass(frozen=True)
class ConnectionGene:
    innovation: int
    src: int
    dst: int
    weight: float
    enabled: bool = True


@dataclass(frozen=True)
class MutationRates:
    weight_perturb: float = 0.8
    weight_sigma: float = 0.5
    add_connection: float = 0.1
    add_node: float = 0.05
    activation_swap: float = 0.05
    max_tries: int = 20

    @classmethod
    def zero(cls) -> MutationRates:
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)


def _hash_id(text: str) -> int:
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def innovation_id(src: int, dst: int) -> int:
    """Innovation id of the connection ``src -> dst`` (same in every genome)."""
    return _hash_id(f"conn:{src}->{dst}")


def split_node_id(innovation: int) -> int:
    """Id of the hidden node created by splitting connection ``innovation``."""
    return _hash_id(f"split:{innovation}") | (1 << 40)


@dataclass(frozen=True)
class CppnGenome:
    nodes: tuple[NodeGene, ...]
    connections: tuple[ConnectionGene, ...]
    _order: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_order", tuple(_topological_order(self.nodes, self.connections)))

    # -- construction -----------------------------------------------------

    @classmethod
    def build(
        cls,
        connections: Iterable[tuple[int, int, float]],
        hidden: Iterable[tuple[int, str]] = (),
        output_activation: str | dict[int, str] = "sigmoid",
    ) -> CppnGenome:
        """Assemble a genome from ``(src, dst, weight)`` triples."""
        if isinstance(output_activation, str):
            out_act = {i: output_activation for i in OUTPUT_IDS}
        else:
            out_act = {i: output_activation.get(i, "identity") for i in OUTPUT_IDS}
        nodes = [NodeGene(i, "input") for i in INPUT_IDS]
        nodes += [NodeGene(i, "output", out_act[i]) for i in OUTPUT_IDS]
        nodes += [NodeGene(i, "hidden", act) for i, act in hidden]
        conns = [ConnectionGene(innovation_id(s, d), s, d, float(w)) for s, d, w in connections]
        genome = cls(tuple(nodes), tuple(sorted(conns, key=lambda c: c.innovation)))
        validate(genome)
        return genome

    @classmethod
    def random(cls, rng: np.random.Generator) -> CppnGenome:
        """Fully connected input->output genome with N(0, 1) weights."""
        weights = rng.normal(0.0, 1.0, size=(NUM_INPUTS, NUM_OUTPUTS))
        triples = [
            (s, d, float(np.clip(weights[a, b], -WEIGHT_LIMIT, WEIGHT_LIMIT)))
            for a, s in enumerate(INPUT_IDS)
            for b, d in enumerate(OUTPUT_IDS)
        ]
        return cls.build(triples)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, query) -> tuple[float, ...]:
        """Return (brick, joint, empty, rot0, rot90) for ``(x, y, z, distance)``."""
        if len(query) != NUM_INPUTS:
            raise ValueError(f"expected {NUM_INPUTS} inputs, got {len(query)}")
        kinds = {n.id: n for n in self.nodes}
        incoming: dict[int, list[ConnectionGene]] = {}
        for c in self.connections:
            if c.enabled:
                incoming.setdefault(c.dst, []).append(c)
        values: dict[int, float] = {}
        for nid in self._order:
            node = kinds[nid]
            if node.role == "input":
                values[nid] = float(query[nid])
                continue
            total = 0.0
            for c in incoming.get(nid, ()):
                total += c.weight * values[c.src]
            values[nid] = ACTIVATIONS[node.activation](total)
        return tuple(values[i] for i in OUTPUT_IDS)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "role": n.role, "activation": n.activation} for n in self.nodes],
            "connections": [
                {
                    "innovation": c.innovation,
                    "from": c.src,
                    "to": c.dst,
                    "weight": c.weight,
                    "enabled": c.enabled,
                }
                for c in self.connections
            ],
            "innovation_counter": max((c.innovation for c in self.connections), default=0),
        }

    @classmethod
    def from_dict(cls, data: dict) -> CppnGenome:
        nodes = tuple(NodeGene(int(n["id"]), n["role"], n["activation"]) for n in data["nodes"])
        conns = tuple(
            ConnectionGene(int(c["innovation"]), int(c["from"]), int(c["to"]), float(c["weight"]), bool(c["enabled"]))
            for c in data["connections"]
        )
        genome = cls(nodes, conns)
        validate(genome)
        return genome


def _topological_order(nodes, connections) -> list[int]:
    ids = [n.id for n in nodes]
    indeg = {i: 0 for i in ids}
    out: dict[int, list[int]] = {i: [] for i in ids}
    for c in connections:
        if c.src not in indeg or c.dst not in indeg:
            raise GenomeIntegrityError(f"connection {c.innovation} references a missing node")
        # disabled edges still count: re-enabling one must never close a cycle
        out[c.src].append(c.dst)
        indeg[c.dst] += 1
    ready = sorted(i for i in ids if indeg[i] == 0)
    order: list[int] = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        for nxt in out[nid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    if len(order) != len(ids):
        raise GenomeIntegrityError("connection graph contains a cycle")
    return order


def validate(genome: CppnGenome) -> None:
    """Raise :class:`GenomeIntegrityError` if any genome invariant is broken."""
    roles = {}
    for n in genome.nodes:
        if n.id in roles:
            raise GenomeIntegrityError(f"duplicate node id {n.id}")
        if n.activation not in ACTIVATIONS:
            raise GenomeIntegrityError(f"unknown activation {n.activation!r}")
        roles[n.id] = n.role
    if tuple(i for i, r in roles.items() if r == "input") != INPUT_IDS:
        raise GenomeIntegrityError("input nodes must be exactly ids 0..3")
    if tuple(i for i, r in roles.items() if r == "output") != OUTPUT_IDS:
        raise GenomeIntegrityError("output nodes must be exactly ids 4..8")
    seen = set()
    for c in genome.connections:
        if c.innovation in seen:
            raise GenomeIntegrityError(f"duplicate innovation {c.innovation}")
        seen.add(c.innovation)
        if roles.get(c.dst) == "input" or roles.get(c.src) == "output":
            raise GenomeIntegrityError(f"connection {c.src}->{c.dst} has wrong direction")
        if not math.isfinite(c.weight):
            raise GenomeIntegrityError(f"non-finite weight on {c.innovation}")
    _topological_order(genome.nodes, genome.connections)


def _reaches(connections, start: int, target: int) -> bool:
    out: dict[int, list[int]] = {}
    for c in connections:
        out.setdefault(c.src, []).append(c.dst)
    stack, seen = [start], {start}
    while stack:
        nid = stack.pop()
        if nid == target:
            return True
        for nxt in out.get(nid, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def mutate(genome: CppnGenome, rng: np.random.Generator, rates: MutationRates = MutationRates()) -> CppnGenome:
    """Return a mutated copy of ``genome``.

    Weights are perturbed independently per connection; at most one structural
    change (add-connection or add-node) happens per call.
    """
    conns = list(genome.connections)
    nodes = list(genome.nodes)

    if rates.weight_perturb > 0.0:
        hits = rng.random(len(conns)) < rates.weight_perturb
        noise = rng.normal(0.0, rates.weight_sigma, size=len(conns))
        for k, c in enumerate(conns):
            if hits[k]:
                w = float(np.clip(c.weight + noise[k], -WEIGHT_LIMIT, WEIGHT_LIMIT))
                conns[k] = replace(c, weight=w)

    u = rng.random() if (rates.add_connection > 0.0 or rates.add_node > 0.0) else 1.0
    if u < rates.add_connection:
        conns = _add_connection(nodes, conns, rng, rates.max_tries)
    elif u < rates.add_connection + rates.add_node:
        nodes, conns = _add_node(nodes, conns, rng)

    if rates.activation_swap > 0.0 and rng.random() < rates.activation_swap:
        hidden = [k for k, n in enumerate(nodes) if n.role == "hidden"]
        if hidden:
            k = hidden[int(rng.integers(len(hidden)))]
            nodes[k] = replace(nodes[k], activation=ACTIVATION_NAMES[int(rng.integers(len(ACTIVATION_NAMES)))])

    return CppnGenome(tuple(nodes), tuple(sorted(conns, key=lambda c: c.innovation)))


def _add_connection(nodes, conns, rng, max_tries):
    sources = [n.id for n in nodes if n.role != "output"]
    targets = [n.id for n in nodes if n.role != "input"]
    existing = {(c.src, c.dst) for c in conns}
    for _ in range(max_tries):
        src = sources[int(rng.integers(len(sources)))]
        dst = targets[int(rng.integers(len(targets)))]
        if src == dst or (src, dst) in existing or _reaches(conns, dst, src):
            continue
        weight = float(np.clip(rng.normal(0.0, 1.0), -WEIGHT_LIMIT, WEIGHT_LIMIT))
        return conns + [ConnectionGene(innovation_id(src, dst), src, dst, weight)]
    return conns


def _add_node(nodes, conns, rng):
    enabled = [k for k, c in enumerate(conns) if c.enabled]
    if not enabled:
        return nodes, conns
    k = enabled[int(rng.integers(len(enabled)))]
    old = conns[k]
    new_id = split_node_id(old.innovation)
    if any(n.id == new_id for n in nodes):
        return nodes, conns
    act = ACTIVATION_NAMES[int(rng.integers(len(ACTIVATION_NAMES)))]
    conns = list(conns)
    conns[k] = replace(old, enabled=False)
    conns.append(ConnectionGene(innovation_id(old.src, new_id), old.src, new_id, 1.0))
    conns.append(ConnectionGene(innovation_id(new_id, old.dst), new_id, old.dst, old.weight))
    return nodes + [NodeGene(new_id, "hidden", act)], conns


def crossover(
    parent_a: CppnGenome, parent_b: CppnGenome, fitter: str, rng: np.random.Generator
) -> CppnGenome:
    """NEAT crossover: matching genes from either parent, the rest from the fitter one.

    Because matching innovations share endpoints, the child's topology is the
    fitter parent's topology and therefore stays acyclic.
    """
    if fitter not in ("a", "b"):
        raise ValueError("fitter must be 'a' or 'b'")
    best, other = (parent_a, parent_b) if fitter == "a" else (parent_b, parent_a)
    other_genes = {c.innovation: c for c in other.connections}
    coins = rng.random(len(best.connections))
    genes = []
    for coin, gene in zip(coins, best.connections):
        twin = other_genes.get(gene.innovation)
        genes.append(twin if twin is not None and coin < 0.5 else gene)
    return CppnGenome(best.nodes, tuple(genes))
