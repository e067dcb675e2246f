"""Floor-plan auto-completion from a structural wall mask and an access graph."""

from .denoiser import FloorPlanDenoiser
from .evaluation import IoUReport, evaluate, evaluate_corpus
from .geometry import FloorPlan, MRRApproximator, Polygon, Room, min_rotated_rect, rasterize_floorplan, refine_by_structure
from .graph import AccessGraph, LabelVocabulary, default_vocabulary, load_access_graph
from .raster import BinaryMask, Grid, load_grid, load_mask, thin
from .roomtype import GatConfig, RoomTypeClassifier
from .skeleton import WallSet, WallVectorizer, vectorize_walls

__version__ = "0.1.0"

__all__ = [
    "AccessGraph",
    "BinaryMask",
    "FloorPlan",
    "FloorPlanDenoiser",
    "GatConfig",
    "Grid",
    "IoUReport",
    "LabelVocabulary",
    "MRRApproximator",
    "Polygon",
    "Room",
    "RoomTypeClassifier",
    "WallSet",
    "WallVectorizer",
    "default_vocabulary",
    "evaluate",
    "evaluate_corpus",
    "load_access_graph",
    "load_grid",
    "load_mask",
    "min_rotated_rect",
    "rasterize_floorplan",
    "refine_by_structure",
    "thin",
    "vectorize_walls",
]
