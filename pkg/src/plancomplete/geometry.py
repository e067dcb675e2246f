"""Room polygons: hulls, minimum rotated rectangles, wall refinement and painting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import LineString
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import unary_union
from sklearn.base import BaseEstimator, TransformerMixin

from .graph import LabelVocabulary, default_vocabulary
from .raster import Grid
from .skeleton import WallSet, normalize_points, rasterize_walls

DEFAULT_WALL_EPS = 0.004


class DegenerateGeometryError(ValueError):
    pass


def signed_area(ring) -> float:
    p = np.asarray(ring, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple polygon, stored counter-clockwise and implicitly closed."""

    ring: np.ndarray

    def __post_init__(self):
        ring = np.asarray(self.ring, dtype=float)
        if ring.ndim != 2 or ring.shape[1] != 2:
            raise DegenerateGeometryError(f"ring must be (n, 2), got {ring.shape}")
        if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
            ring = ring[:-1]
        keep = np.any(ring != np.roll(ring, 1, axis=0), axis=1)
        ring = ring[keep] if len(ring) > 1 else ring
        if len(ring) < 3:
            raise DegenerateGeometryError("polygon needs at least 3 distinct points")
        area = signed_area(ring)
        if area == 0:
            raise DegenerateGeometryError("polygon has zero area")
        if area < 0:
            ring = ring[::-1].copy()
        if not shapely.LinearRing(ring).is_simple:
            raise DegenerateGeometryError("polygon ring self-intersects")
        object.__setattr__(self, "ring", ring)

    @property
    def area(self) -> float:
        return signed_area(self.ring)

    def centroid(self) -> np.ndarray:
        p = self.ring
        q = np.roll(p, -1, axis=0)
        cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
        a = cross.sum() / 2.0
        return np.array([((p[:, 0] + q[:, 0]) * cross).sum(), ((p[:, 1] + q[:, 1]) * cross).sum()]) / (6.0 * a)

    def to_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.ring)

    def tolist(self) -> list:
        return self.ring.tolist()


@dataclass(frozen=True, eq=False)
class RotatedRect:
    corners: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.corners, dtype=float)
        if c.shape != (4, 2):
            raise DegenerateGeometryError("a rotated rectangle has exactly 4 corners")
        if signed_area(c) < 0:
            c = c[::-1].copy()
        object.__setattr__(self, "corners", c)

    @property
    def area(self) -> float:
        return signed_area(self.corners)

    def side_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.corners, -1, axis=0) - self.corners, axis=1)

    def is_rectangle(self, rtol: float = 1e-9) -> bool:
        c = self.corners
        e = np.roll(c, -1, axis=0) - c
        lengths = np.linalg.norm(e, axis=1)
        if lengths.min() <= 0:
            return False
        scale = lengths.max()
        opposite = abs(lengths[0] - lengths[2]) <= rtol * scale and abs(lengths[1] - lengths[3]) <= rtol * scale
        dots = [abs(np.dot(e[k], e[(k + 1) % 4])) / (lengths[k] * lengths[(k + 1) % 4]) for k in range(4)]
        return opposite and max(dots) <= rtol

    def to_polygon(self) -> Polygon:
        return Polygon(self.corners)


@dataclass
class Room:
    polygon: Polygon
    room_type: str
    room_id: int


@dataclass
class FloorPlan:
    rooms: list = field(default_factory=list)
    walls: WallSet = field(default_factory=WallSet)

    def __post_init__(self):
        ids = [r.room_id for r in self.rooms]
        if len(set(ids)) != len(ids):
            raise ValueError("room ids must be unique")

    def validate(self, vocab: LabelVocabulary) -> None:
        for r in self.rooms:
            if r.room_type not in vocab.room_types:
                raise ValueError(f"room {r.room_id}: unknown room type {r.room_type!r}")

    def to_dict(self) -> dict:
        return {
            "rooms": [{"id": r.room_id, "room_type": r.room_type, "polygon": r.polygon.tolist()} for r in self.rooms],
            "walls": self.walls.to_dict(),
        }

    @classmethod
    def from_dict(cls, data) -> "FloorPlan":
        rooms = [Room(Polygon(np.asarray(r["polygon"], dtype=float)), r["room_type"], int(r["id"])) for r in data["rooms"]]
        return cls(rooms, WallSet.from_dict(data.get("walls") or {}))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "FloorPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


FLOORPLAN_SCHEMA = {
    "type": "object",
    "required": ["rooms", "walls"],
    "properties": {
        "rooms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "room_type", "polygon"],
                "properties": {
                    "id": {"type": "integer"},
                    "room_type": {"type": "string"},
                    "polygon": {
                        "type": "array",
                        "minItems": 3,
                        "items": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 2,
                            "items": {"type": "number", "minimum": -1, "maximum": 1},
                        },
                    },
                },
            },
        },
        "walls": {
            "type": "object",
            "required": ["source_size", "segments"],
            "properties": {
                "source_size": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                "segments": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 2,
                            "items": {"type": "number", "minimum": -1, "maximum": 1},
                        },
                    },
                },
            },
        },
    },
}


# ---------------------------------------------------------------------------


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> Polygon:
    """Andrew's monotone chain; collinear points on hull edges are dropped."""
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float).reshape(-1, 2)})
    if len(pts) < 3:
        raise DegenerateGeometryError("convex hull needs at least 3 distinct points")

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometryError("points are collinear")
    return Polygon(np.array(hull))


def min_rotated_rect(poly) -> RotatedRect:
    """Minimum-area enclosing rectangle by rotating calipers over the hull edges.

    For each hull edge the three supporting points (furthest along the edge,
    furthest behind it, furthest from it) only ever advance, so all edges are
    visited in linear time after the hull.
    """
    points = poly.ring if isinstance(poly, Polygon) else poly
    hull = convex_hull(points).ring
    n = len(hull)
    edges = np.roll(hull, -1, axis=0) - hull
    units = edges / np.linalg.norm(edges, axis=1)[:, None]
    normals = np.stack([-units[:, 1], units[:, 0]], axis=1)

    def advance(k, direction, start):
        # hull projections onto `direction` are unimodal going round from the edge
        while np.dot(hull[(k + 1) % n] - hull[start], direction) >= np.dot(hull[k] - hull[start], direction):
            k = (k + 1) % n
            if k == start:
                break
        return k

    right = top = left = None
    best = None
    for i in range(n):
        u, v = units[i], normals[i]
        right = advance(right if right is not None else i, u, i)
        top = advance(top if top is not None else right, v, i)
        left = advance(left if left is not None else top, -u, i)
        lo = np.dot(hull[left] - hull[i], u)
        hi = np.dot(hull[right] - hull[i], u)
        height = np.dot(hull[top] - hull[i], v)
        area = (hi - lo) * height
        if best is None or area < best[0]:
            best = (area, i, lo, hi, height)
    _, i, lo, hi, height = best
    u, v, o = units[i], normals[i], hull[i]
    corners = np.array([o + lo * u, o + hi * u, o + hi * u + height * v, o + lo * u + height * v])
    return RotatedRect(corners)


def _pieces(geom) -> list:
    polys = []
    for g in getattr(geom, "geoms", [geom]):
        if isinstance(g, ShapelyPolygon) and not g.is_empty and g.area > 0:
            try:
                polys.append(Polygon(np.asarray(g.exterior.coords)))
            except DegenerateGeometryError:
                continue
    return polys


def cut_by_walls(poly: Polygon, walls: WallSet, wall_eps: float = DEFAULT_WALL_EPS) -> list:
    """Pieces of ``poly`` left after removing a ``wall_eps`` corridor around each wall.

    Pieces are returned by their outer rings; corridors that end inside the
    room leave a notch rather than a hole.
    """
    if len(walls) == 0:
        return [poly]
    shape = poly.to_shapely()
    lines = [LineString(seg) for seg in walls.segments]
    cutters = [ln.buffer(wall_eps, cap_style="flat") for ln in lines if ln.intersects(shape)]
    if not cutters:
        return [poly]
    rest = shape.difference(unary_union(cutters))
    pieces = _pieces(rest)
    return pieces if pieces else [poly]


def refine_by_structure(rect, walls: WallSet, wall_eps: float = DEFAULT_WALL_EPS) -> Polygon:
    """Keep the largest piece when walls split a room; otherwise return the room unchanged."""
    poly = rect.to_polygon() if isinstance(rect, RotatedRect) else rect
    pieces = cut_by_walls(poly, walls, wall_eps)
    if len(pieces) == 1:
        return poly
    return min(pieces, key=lambda p: (-p.area, *p.centroid()))


# ---------------------------------------------------------------------------


def pixel_centers(width: int, height: int) -> tuple:
    """Normalized coordinates of pixel centres, each ``(height, width)``."""
    xs, ys = np.meshgrid(np.arange(width), np.arange(height))
    norm = normalize_points(np.stack([xs, ys], axis=-1), (width, height))
    return norm[..., 0], norm[..., 1]


def points_in_polygon(px: np.ndarray, py: np.ndarray, ring) -> np.ndarray:
    """Even-odd crossing test, vectorized over query points."""
    ring = np.asarray(ring, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    x0, y0 = ring[:, 0], ring[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for a, b, c, d in zip(x0, y0, x1, y1):
        straddle = (b > py) != (d > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a + (py - b) * (c - a) / (d - b)
        inside ^= straddle & (px < x_cross)
    return inside


def fill_polygon(grid: np.ndarray, ring, value: int) -> None:
    h, w = grid.shape
    px, py = pixel_centers(w, h)
    grid[points_in_polygon(px, py, ring)] = value


def rasterize_floorplan(
    plan: FloorPlan,
    width: int,
    height: int,
    vocab: LabelVocabulary | None = None,
    wall_width: int = 1,
) -> Grid:
    """Paint background, rooms largest-first (smaller rooms win overlaps), then walls."""
    if width <= 0 or height <= 0:
        raise ValueError("raster size must be positive")
    vocab = vocab or default_vocabulary()
    labels = vocab.grid_labels
    cells = np.full((height, width), vocab.background, dtype=np.int64)
    px, py = pixel_centers(width, height)
    order = sorted(plan.rooms, key=lambda r: (-r.polygon.area, r.room_id))
    for room in order:
        cells[points_in_polygon(px, py, room.polygon.ring)] = labels[room.room_type]
    if len(plan.walls):
        cells[rasterize_walls(plan.walls, width, height, wall_width).bits] = vocab.structure
    return Grid(cells, vocab.palette())


class MRRApproximator(BaseEstimator, TransformerMixin):
    """Replace each room polygon of a :class:`FloorPlan` by its MRR, optionally wall-refined."""

    def __init__(self, refine=True, wall_eps=DEFAULT_WALL_EPS):
        self.refine = refine
        self.wall_eps = wall_eps

    def fit(self, X=None, y=None):
        if self.wall_eps <= 0:
            raise ValueError("wall_eps must be positive")
        return self

    def transform(self, X):
        plans = [X] if isinstance(X, FloorPlan) else list(X)
        out = []
        for plan in plans:
            rooms = []
            for r in plan.rooms:
                rect = min_rotated_rect(r.polygon)
                poly = refine_by_structure(rect, plan.walls, self.wall_eps) if self.refine else rect.to_polygon()
                rooms.append(Room(poly, r.room_type, r.room_id))
            out.append(FloorPlan(rooms, plan.walls))
        return out
