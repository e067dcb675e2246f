"""End-to-end compositions: ground-truth MRR loop and auto-completion."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .denoiser import FloorPlanDenoiser
from .evaluation import IoUReport, evaluate
from .geometry import DEFAULT_WALL_EPS, FloorPlan, MRRApproximator, Polygon, Room, points_in_polygon, pixel_centers, rasterize_floorplan, refine_by_structure
from .graph import AccessGraph, LabelVocabulary, default_vocabulary
from .raster import BinaryMask, Grid
from .roomtype import RoomTypeClassifier
from .skeleton import DEFAULT_MIN_LENGTH, DEFAULT_TOLERANCE, WallSet, vectorize_walls


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture file."""
    return Path(str(resources.files("plancomplete").joinpath("data/fixtures", name)))


def edge_to_normalized(points, size) -> np.ndarray:
    """Pixel-edge coordinates (pixel k spans [k, k+1]) to the normalized frame."""
    w, h = size
    half = max(w, h) / 2.0
    return (np.asarray(points, dtype=float) - np.array([w / 2.0, h / 2.0])) / half


@dataclass
class Layout:
    """A ground-truth plan: label map, wall mask and exact room polygons."""

    truth: Grid
    structure: BinaryMask
    plan: FloorPlan


def load_layout(path, vocab: LabelVocabulary | None = None) -> Layout:
    vocab = vocab or default_vocabulary()
    doc = json.loads(Path(path).read_text())
    size = tuple(doc["size"])
    w, h = size
    px, py = pixel_centers(w, h)
    cells = np.full((h, w), vocab.background, dtype=np.int64)
    rooms = []
    for r in doc["rooms"]:
        ring = edge_to_normalized(r["polygon"], size)
        cells[points_in_polygon(px, py, ring)] = vocab.grid_labels[r["room_type"]]
        rooms.append(Room(Polygon(ring), r["room_type"], int(r["id"])))
    structure = np.zeros((h, w), dtype=bool)
    for poly in doc["walls"]:
        structure |= points_in_polygon(px, py, edge_to_normalized(poly, size))
    cells[structure] = vocab.structure
    return Layout(Grid(cells, vocab.palette()), BinaryMask(structure), FloorPlan(rooms, WallSet(source_size=size)))


def gt_mrr_report(
    layout: Layout,
    vocab: LabelVocabulary | None = None,
    refine: bool = True,
    tolerance: float = DEFAULT_TOLERANCE,
    min_length: float = DEFAULT_MIN_LENGTH,
    wall_eps: float = DEFAULT_WALL_EPS,
    wall_width: int = 1,
) -> IoUReport:
    """Truth polygons -> MRR -> wall refinement -> raster, scored against the truth raster."""
    vocab = vocab or default_vocabulary()
    walls = vectorize_walls(layout.structure, tolerance, min_length)
    plan = FloorPlan(layout.plan.rooms, walls)
    approx = MRRApproximator(refine=refine, wall_eps=wall_eps).fit().transform(plan)[0]
    grid = rasterize_floorplan(approx, layout.truth.width, layout.truth.height, vocab, wall_width)
    return evaluate(grid, layout.truth, vocab)


@dataclass
class AutocompleteResult:
    walls: WallSet
    graph: AccessGraph
    plan: FloorPlan
    grid: Grid


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


def autocomplete(
    mask: BinaryMask,
    graph: AccessGraph,
    roomtype: RoomTypeClassifier,
    denoiser: FloorPlanDenoiser,
    seed: int = 0,
    refine: bool = True,
    tolerance: float = DEFAULT_TOLERANCE,
    min_length: float = DEFAULT_MIN_LENGTH,
    wall_eps: float = DEFAULT_WALL_EPS,
    raster_size: tuple | None = None,
    max_rooms: int | None = None,
) -> AutocompleteResult:
    """Walls mask + access graph -> room polygons and a label map."""
    vocab = denoiser.vocab_
    try:
        walls = vectorize_walls(mask, tolerance, min_length)
    except Exception as exc:
        raise StageError("extract-walls", exc) from exc
    try:
        if max_rooms is not None and len(graph) > max_rooms:
            raise ValueError(f"graph has {len(graph)} rooms, limit is {max_rooms}")
        typed = roomtype.predict_graphs([graph])[0]
    except Exception as exc:
        raise StageError("predict-roomtype", exc) from exc
    try:
        plan = denoiser.sample(typed, walls, seed=seed)
    except Exception as exc:
        raise StageError("sample", exc) from exc
    try:
        if refine:
            plan = FloorPlan([Room(refine_by_structure(r.polygon, walls, wall_eps), r.room_type, r.room_id) for r in plan.rooms], walls)
        w, h = raster_size or (mask.width, mask.height)
        grid = rasterize_floorplan(plan, w, h, vocab)
    except Exception as exc:
        raise StageError("refine/rasterize", exc) from exc
    return AutocompleteResult(walls, typed, plan, grid)
