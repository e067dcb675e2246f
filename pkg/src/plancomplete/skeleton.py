"""Raster-to-vector wall extraction: skeleton graph, straight-line split, filtering."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .raster import BinaryMask, neighbour_count, thin

DEFAULT_TOLERANCE = 1.5
DEFAULT_MIN_LENGTH = 4.0

_NEIGHBOURS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass
class SkeletonNode:
    x: float
    y: float
    pixels: list  # (x, y) pixels merged into this node
    pixel: tuple  # representative pixel, the start/end of incident edge paths


@dataclass
class SkeletonEdge:
    a: int
    b: int
    path: list  # ordered (x, y) pixels, path[0] == nodes[a].pixel, path[-1] == nodes[b].pixel


@dataclass
class SkeletonGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def degree(self, i: int) -> int:
        return sum((e.a == i) + (e.b == i) for e in self.edges)


@dataclass
class WallSet:
    """Straight wall segments in the normalized ``[-1, 1]^2`` frame."""

    segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 2, 2)))
    source_size: tuple = (0, 0)

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=float)
        if seg.size == 0:
            seg = np.zeros((0, 2, 2))
        if seg.ndim != 3 or seg.shape[1:] != (2, 2):
            raise ValueError(f"segments must have shape (n, 2, 2), got {seg.shape}")
        if not np.isfinite(seg).all():
            raise ValueError("segment coordinates must be finite")
        if np.abs(seg).max(initial=0.0) > 1.0 + 1e-12:
            raise ValueError("segment coordinates must lie in [-1, 1]")
        if len(seg) and (np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1) <= 0).any():
            raise ValueError("segments must have positive length")
        self.segments = seg
        self.source_size = tuple(int(v) for v in self.source_size)

    def __len__(self):
        return len(self.segments)

    def endpoints(self) -> np.ndarray:
        """``(2K, 2)`` array; rows 2k and 2k+1 are the ends of segment k."""
        return self.segments.reshape(-1, 2)

    def to_dict(self) -> dict:
        return {"source_size": list(self.source_size), "segments": self.segments.tolist()}

    @classmethod
    def from_dict(cls, data) -> "WallSet":
        return cls(np.asarray(data.get("segments", []), dtype=float), tuple(data.get("source_size", (0, 0))))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "WallSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------


def _cluster(pixels: set) -> list:
    """8-connected clusters of a pixel set, in raster order of their first pixel."""
    remaining = set(pixels)
    clusters = []
    for start in sorted(pixels, key=lambda p: (p[1], p[0])):
        if start not in remaining:
            continue
        remaining.discard(start)
        comp = [start]
        queue = deque([start])
        while queue:
            x, y = queue.popleft()
            for dy, dx in _NEIGHBOURS:
                q = (x + dx, y + dy)
                if q in remaining:
                    remaining.discard(q)
                    comp.append(q)
                    queue.append(q)
        clusters.append(comp)
    return clusters


def _route(cluster: set, start: tuple, goal: tuple) -> list:
    """Shortest 8-connected pixel route from start to goal inside a cluster."""
    if start == goal:
        return [start]
    prev = {start: None}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        if p == goal:
            break
        for dy, dx in _NEIGHBOURS:
            q = (p[0] + dx, p[1] + dy)
            if q in cluster and q not in prev:
                prev[q] = p
                queue.append(q)
    out = [goal]
    while out[-1] != start:
        out.append(prev[out[-1]])
    return out[::-1]


def extract_graph(mask: BinaryMask) -> SkeletonGraph:
    """Build a pixel graph from a thinned mask.

    Pixels with other than two 8-neighbours become nodes; touching node pixels
    are merged into one node. Chains of degree-2 pixels between nodes become
    edges. Rings without any node get one anchored at their first pixel in
    raster order.
    """
    bits = mask.bits
    ys, xs = np.nonzero(bits)
    fg = set(zip(xs.tolist(), ys.tolist()))
    if not fg:
        return SkeletonGraph()
    deg = neighbour_count(bits)
    node_pixels = {p for p in fg if deg[p[1], p[0]] != 2}

    graph = SkeletonGraph()
    owner = {}
    clusters = []

    def add_node(comp):
        comp_set = set(comp)
        cx = float(np.mean([p[0] for p in comp]))
        cy = float(np.mean([p[1] for p in comp]))
        rep = min(comp, key=lambda p: ((p[0] - cx) ** 2 + (p[1] - cy) ** 2, p[1], p[0]))
        idx = len(graph.nodes)
        graph.nodes.append(SkeletonNode(cx, cy, sorted(comp, key=lambda p: (p[1], p[0])), rep))
        clusters.append(comp_set)
        for p in comp:
            owner[p] = idx

    for comp in _cluster(node_pixels):
        add_node(comp)

    visited = set()

    def neighbours(p):
        for dy, dx in _NEIGHBOURS:
            q = (p[0] + dx, p[1] + dy)
            if q in fg:
                yield q

    def trace(attach, first):
        # follow degree-2 pixels from `first` until a node pixel is reached
        chain = [first]
        visited.add(first)
        prev, cur = attach, first
        while True:
            onward = [q for q in neighbours(cur) if q != prev]
            q = onward[0]
            if q in owner:
                return q, chain
            chain.append(q)
            visited.add(q)
            prev, cur = cur, q

    def emit(a, attach_a, chain, attach_b):
        b = owner[attach_b]
        path = _route(clusters[a], graph.nodes[a].pixel, attach_a) + chain
        path += _route(clusters[b], attach_b, graph.nodes[b].pixel)
        graph.edges.append(SkeletonEdge(a, b, path))

    for idx in range(len(graph.nodes)):
        for attach in graph.nodes[idx].pixels:
            for q in sorted(neighbours(attach), key=lambda p: (p[1], p[0])):
                if q in owner or q in visited:
                    continue
                end, chain = trace(attach, q)
                emit(idx, attach, chain, end)

    # node-free rings: anchor a node at the first pixel in raster order
    for p in sorted(fg - node_pixels, key=lambda p: (p[1], p[0])):
        if p in visited:
            continue
        add_node([p])
        visited.add(p)
        q = min(neighbours(p), key=lambda q: (q[1], q[0]))
        end, chain = trace(p, q)
        emit(owner[p], p, chain, end)
    return graph


# ---------------------------------------------------------------------------


def _deviation(points: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    d = p1 - p0
    norm = np.hypot(d[0], d[1])
    rel = points - p0
    if norm == 0:
        return np.hypot(rel[:, 0], rel[:, 1])
    return np.abs(d[0] * rel[:, 1] - d[1] * rel[:, 0]) / norm


def split_indices(path, tolerance: float) -> list:
    """Break indices of a recursive max-deviation subdivision of ``path``."""
    pts = np.asarray(path, dtype=float)
    if len(pts) < 2:
        raise ValueError("path needs at least two pixels")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    breaks = {0, len(pts) - 1}
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        dev = _deviation(pts[i + 1 : j], pts[i], pts[j])
        k = int(np.argmax(dev))
        if dev[k] > tolerance:
            k += i + 1
            breaks.add(k)
            stack.append((i, k))
            stack.append((k, j))
    return sorted(breaks)


def split_straight(path, tolerance: float = DEFAULT_TOLERANCE) -> list:
    """Split a pixel path into straight segments ``[(p0, p1), ...]`` that partition it."""
    pts = [tuple(float(v) for v in p) for p in path]
    idx = split_indices(pts, tolerance)
    return [(pts[i], pts[j]) for i, j in zip(idx[:-1], idx[1:])]


def filter_short(segments, min_length: float = DEFAULT_MIN_LENGTH) -> list:
    if min_length < 0:
        raise ValueError("min_length must be non-negative")
    return [s for s in segments if np.hypot(s[1][0] - s[0][0], s[1][1] - s[0][1]) >= min_length]


def normalize_points(points, size) -> np.ndarray:
    """Map pixel coordinates to ``[-1, 1]``: centre-anchored, longest side spans the range."""
    w, h = size
    half = max(w, h) / 2.0
    pts = np.asarray(points, dtype=float)
    return (pts + 0.5 - np.array([w / 2.0, h / 2.0])) / half


def denormalize_points(points, size) -> np.ndarray:
    w, h = size
    half = max(w, h) / 2.0
    return np.asarray(points, dtype=float) * half + np.array([w / 2.0, h / 2.0]) - 0.5


def vectorize_walls(mask: BinaryMask, tolerance: float = DEFAULT_TOLERANCE, min_length: float = DEFAULT_MIN_LENGTH) -> WallSet:
    size = (mask.width, mask.height)
    graph = extract_graph(thin(mask))
    segments = []
    for edge in graph.edges:
        if len(edge.path) < 2:
            continue
        segments.extend(split_straight(edge.path, tolerance))
    segments = [s for s in filter_short(segments, min_length) if s[0] != s[1]]
    if not segments:
        return WallSet(np.zeros((0, 2, 2)), size)
    seg = normalize_points(np.array(segments), size)
    return WallSet(np.clip(seg, -1.0, 1.0), size)


def draw_segment(bits: np.ndarray, p0, p1, width: int = 1) -> None:
    """Burn a pixel-space segment into ``bits`` in place."""
    h, w = bits.shape
    x0, y0 = p0
    x1, y1 = p1
    n = int(np.ceil(max(abs(x1 - x0), abs(y1 - y0)))) + 1
    xs = np.rint(np.linspace(x0, x1, n)).astype(int)
    ys = np.rint(np.linspace(y0, y1, n)).astype(int)
    r0 = -((width - 1) // 2)
    for dy in range(r0, r0 + width):
        for dx in range(r0, r0 + width):
            xx, yy = xs + dx, ys + dy
            ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
            bits[yy[ok], xx[ok]] = True


def rasterize_walls(walls: WallSet, width: int, height: int, line_width: int = 1) -> BinaryMask:
    bits = np.zeros((height, width), dtype=bool)
    for seg in walls.segments:
        p = denormalize_points(seg, (width, height))
        draw_segment(bits, p[0], p[1], line_width)
    return BinaryMask(bits)


class WallVectorizer(BaseEstimator, TransformerMixin):
    """Mask to :class:`WallSet` transformer; stateless, so ``fit`` only validates."""

    def __init__(self, tolerance=DEFAULT_TOLERANCE, min_length=DEFAULT_MIN_LENGTH):
        self.tolerance = tolerance
        self.min_length = min_length

    def fit(self, X=None, y=None):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.min_length < 0:
            raise ValueError("min_length must be non-negative")
        return self

    def transform(self, X):
        masks = [X] if isinstance(X, BinaryMask) else list(X)
        return [vectorize_walls(m, self.tolerance, self.min_length) for m in masks]
