"""Access graphs, label vocabularies and their JSON formats."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

CONNECTION_TYPES = ("door", "entrance", "passage")


class GraphValidationError(ValueError):
    pass


@dataclass(frozen=True)
class LabelVocabulary:
    zoning_types: tuple
    room_types: tuple
    grid_labels: dict

    def __post_init__(self):
        object.__setattr__(self, "zoning_types", tuple(self.zoning_types))
        object.__setattr__(self, "room_types", tuple(self.room_types))
        object.__setattr__(self, "grid_labels", {str(k): int(v) for k, v in self.grid_labels.items()})
        for name, items in (("zoning_types", self.zoning_types), ("room_types", self.room_types)):
            if len(set(items)) != len(items):
                raise GraphValidationError(f"duplicate names in {name}")
        for required in ("background", "structure"):
            if required not in self.grid_labels:
                raise GraphValidationError(f"grid_labels must define '{required}'")
        missing = [r for r in self.room_types if r not in self.grid_labels]
        if missing:
            raise GraphValidationError(f"room types without a grid label: {missing}")
        if len(set(self.grid_labels.values())) != len(self.grid_labels):
            raise GraphValidationError("grid label values must be distinct")

    @property
    def background(self) -> int:
        return self.grid_labels["background"]

    @property
    def structure(self) -> int:
        return self.grid_labels["structure"]

    def palette(self) -> dict:
        return {v: k for k, v in self.grid_labels.items()}

    def to_dict(self) -> dict:
        return {
            "zoning_types": list(self.zoning_types),
            "room_types": list(self.room_types),
            "grid_labels": dict(self.grid_labels),
        }

    @classmethod
    def from_dict(cls, data) -> "LabelVocabulary":
        try:
            return cls(data["zoning_types"], data["room_types"], data["grid_labels"])
        except (KeyError, TypeError) as exc:
            raise GraphValidationError(f"malformed vocabulary: {exc}") from exc

    @classmethod
    def load(cls, path) -> "LabelVocabulary":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def default_vocabulary() -> LabelVocabulary:
    """The bundled MSD-style vocabulary (4 zones, 9 room types)."""
    text = resources.files("plancomplete").joinpath("data/vocab_msd.json").read_text()
    return LabelVocabulary.from_dict(json.loads(text))


@dataclass(frozen=True)
class Node:
    id: int
    zoning: str
    room_type: str | None = None
    polygon: tuple | None = None  # ((x, y), ...) in the normalized frame


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    type: str


@dataclass
class AccessGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise GraphValidationError("node ids must be unique")
        known = set(ids)
        seen = set()
        for k, e in enumerate(self.edges):
            if e.a not in known or e.b not in known:
                raise GraphValidationError(f"edge {k} references an unknown node")
            if e.a == e.b:
                raise GraphValidationError(f"edge {k} is a self-loop")
            if e.type not in CONNECTION_TYPES:
                raise GraphValidationError(f"edge {k} has unknown connection type {e.type!r}")
            pair = frozenset((e.a, e.b))
            if pair in seen:
                raise GraphValidationError(f"edge {k} duplicates an earlier edge between {e.a} and {e.b}")
            seen.add(pair)

    def __len__(self):
        return len(self.nodes)

    def index(self) -> dict:
        """node id -> row position."""
        return {n.id: i for i, n in enumerate(self.nodes)}

    def edge_index(self) -> np.ndarray:
        """``(|E|, 2)`` row positions of edge endpoints, in edge order."""
        pos = self.index()
        return np.array([[pos[e.a], pos[e.b]] for e in self.edges], dtype=np.int64).reshape(-1, 2)

    def door_pairs(self, connection_types=("door",)) -> list:
        pos = self.index()
        return [(pos[e.a], pos[e.b]) for e in self.edges if e.type in connection_types]

    def with_room_types(self, room_types) -> "AccessGraph":
        nodes = [replace(n, room_type=t) for n, t in zip(self.nodes, room_types, strict=True)]
        return AccessGraph(nodes, list(self.edges))

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "zoning": n.zoning,
                    "room_type": n.room_type,
                    "polygon": None if n.polygon is None else [list(p) for p in n.polygon],
                }
                for n in self.nodes
            ],
            "edges": [{"a": e.a, "b": e.b, "type": e.type} for e in self.edges],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def graph_from_dict(data, vocab: LabelVocabulary | None = None) -> AccessGraph:
    if not isinstance(data, dict) or not isinstance(data.get("nodes"), list):
        raise GraphValidationError("graph must be an object with a 'nodes' list")
    edges_raw = data.get("edges", [])
    if not isinstance(edges_raw, list):
        raise GraphValidationError("'edges' must be a list")
    nodes = []
    for k, raw in enumerate(data["nodes"]):
        if not isinstance(raw, dict) or "id" not in raw or "zoning" not in raw:
            raise GraphValidationError(f"node {k}: needs 'id' and 'zoning'")
        if not isinstance(raw["id"], int) or isinstance(raw["id"], bool):
            raise GraphValidationError(f"node {k}: id must be an integer")
        zoning = raw["zoning"]
        room_type = raw.get("room_type")
        if vocab is not None:
            if zoning not in vocab.zoning_types:
                raise GraphValidationError(f"node {k}: unknown zoning type {zoning!r}")
            if room_type is not None and room_type not in vocab.room_types:
                raise GraphValidationError(f"node {k}: unknown room type {room_type!r}")
        poly = raw.get("polygon")
        if poly is not None:
            try:
                poly = tuple((float(x), float(y)) for x, y in poly)
            except (TypeError, ValueError) as exc:
                raise GraphValidationError(f"node {k}: malformed polygon") from exc
            if len(poly) < 3:
                raise GraphValidationError(f"node {k}: polygon needs at least 3 points")
        nodes.append(Node(raw["id"], zoning, room_type, poly))
    edges = []
    for k, raw in enumerate(edges_raw):
        if not isinstance(raw, dict) or not {"a", "b", "type"} <= raw.keys():
            raise GraphValidationError(f"edge {k}: needs 'a', 'b' and 'type'")
        edges.append(Edge(raw["a"], raw["b"], raw["type"]))
    return AccessGraph(nodes, edges)


def load_access_graph(path, vocab: LabelVocabulary | None = None) -> AccessGraph:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GraphValidationError(f"{path}: invalid JSON ({exc})") from exc
    return graph_from_dict(data, vocab)


def one_hot_features(graph: AccessGraph, vocab: LabelVocabulary):
    """Node zoning indicators ``(|V|, |Z|)`` and edge type indicators ``(|E|, 3)``."""
    node_x = np.zeros((len(graph.nodes), len(vocab.zoning_types)))
    zone_pos = {z: i for i, z in enumerate(vocab.zoning_types)}
    for i, n in enumerate(graph.nodes):
        if n.zoning not in zone_pos:
            raise GraphValidationError(f"node {i}: unknown zoning type {n.zoning!r}")
        node_x[i, zone_pos[n.zoning]] = 1.0
    edge_x = np.zeros((len(graph.edges), len(CONNECTION_TYPES)))
    for k, e in enumerate(graph.edges):
        edge_x[k, CONNECTION_TYPES.index(e.type)] = 1.0
    return node_x, edge_x


def room_type_targets(graph: AccessGraph, vocab: LabelVocabulary) -> np.ndarray:
    pos = {r: i for i, r in enumerate(vocab.room_types)}
    try:
        return np.array([pos[n.room_type] for n in graph.nodes], dtype=np.int64)
    except KeyError as exc:
        raise GraphValidationError(f"node without a known room type: {exc}") from exc
