"""Rule-labelled random access graphs for exercising the room-type model."""

from __future__ import annotations

import numpy as np

from .graph import CONNECTION_TYPES, AccessGraph, Edge, LabelVocabulary, Node


def synthetic_vocabulary(n_zoning: int = 4, n_room_types: int | None = None) -> LabelVocabulary:
    n_room_types = n_zoning if n_room_types is None else n_room_types
    rooms = [f"R{k}" for k in range(n_room_types)]
    labels = {"background": 0, "structure": 1, **{r: k + 2 for k, r in enumerate(rooms)}}
    return LabelVocabulary([f"Z{k}" for k in range(n_zoning)], rooms, labels)


def random_graph(rng: np.random.Generator, vocab: LabelVocabulary, n_min: int = 5, n_max: int = 12, extra_edges: float = 0.3) -> AccessGraph:
    """Random connected graph: a random tree plus a few chords, random zoning and edge types."""
    n = int(rng.integers(n_min, n_max + 1))
    zoning = rng.integers(0, len(vocab.zoning_types), n)
    pairs = {(int(rng.integers(0, k)), k) for k in range(1, n)}
    for _ in range(int(extra_edges * n)):
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        pairs.add((a, b))
    nodes = [Node(i, vocab.zoning_types[z]) for i, z in enumerate(zoning)]
    edges = [Edge(a, b, CONNECTION_TYPES[int(rng.integers(0, 3))]) for a, b in sorted(pairs)]
    return AccessGraph(nodes, edges)


def _label(graph: AccessGraph, vocab: LabelVocabulary, rule) -> AccessGraph:
    zpos = {z: i for i, z in enumerate(vocab.zoning_types)}
    zones = np.array([zpos[n.zoning] for n in graph.nodes])
    nbrs = [[] for _ in graph.nodes]
    pos = graph.index()
    for e in graph.edges:
        nbrs[pos[e.a]].append((pos[e.b], e.type))
        nbrs[pos[e.b]].append((pos[e.a], e.type))
    types = [vocab.room_types[rule(i, zones, nbrs)] for i in range(len(graph.nodes))]
    return graph.with_room_types(types)


def bijective_rule(i, zones, nbrs) -> int:
    return int(zones[i])


def majority_rule(i, zones, nbrs) -> int:
    """Most frequent zoning among neighbours, ties to the lowest index; isolated nodes keep their own."""
    if not nbrs[i]:
        return int(zones[i])
    counts = np.bincount([zones[j] for j, _ in nbrs[i]], minlength=zones.max() + 1)
    return int(np.argmax(counts))


def door_rule(i, zones, nbrs) -> int:
    """Own zoning, doubled when a door leads to a zone-0 room (needs ``2 * |Z|`` room types)."""
    flag = any(t == "door" and zones[j] == 0 for j, t in nbrs[i])
    return int(zones[i]) * 2 + int(flag)


RULES = {"bijective": bijective_rule, "majority": majority_rule, "door": door_rule}


def make_dataset(n_graphs: int, rule: str = "bijective", seed: int = 0, n_zoning: int = 4, **graph_kwargs):
    """``(graphs, vocab)`` with room types assigned by one of :data:`RULES`."""
    n_room_types = 2 * n_zoning if rule == "door" else n_zoning
    vocab = synthetic_vocabulary(n_zoning, n_room_types)
    rng = np.random.default_rng(seed)
    graphs = [_label(random_graph(rng, vocab, **graph_kwargs), vocab, RULES[rule]) for _ in range(n_graphs)]
    return graphs, vocab
