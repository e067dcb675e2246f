"""Static figure output: label-map PNGs and SVG overlays."""

from __future__ import annotations

import colorsys
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image

from .geometry import FloorPlan
from .graph import LabelVocabulary
from .raster import Grid, write_label_image
from .skeleton import denormalize_points


def type_colours(vocab: LabelVocabulary) -> dict:
    """Distinct, stable colours per room type; background white, structure black."""
    colours = {"background": "#ffffff", "structure": "#000000"}
    n = max(len(vocab.room_types), 1)
    for k, name in enumerate(vocab.room_types):
        r, g, b = colorsys.hsv_to_rgb(k / n, 0.45, 0.95)
        colours[name] = "#{:02x}{:02x}{:02x}".format(int(r * 255), int(g * 255), int(b * 255))
    return colours


def save_label_png(path, grid: Grid) -> None:
    write_label_image(path, grid.cells)


def save_colour_png(path, grid: Grid, vocab: LabelVocabulary) -> None:
    colours = type_colours(vocab)
    lut = np.zeros((256, 3), dtype=np.uint8)
    for name, value in vocab.grid_labels.items():
        hexc = colours.get(name, "#808080")
        lut[value] = [int(hexc[i : i + 2], 16) for i in (1, 3, 5)]
    Image.fromarray(lut[grid.cells.astype(np.uint8)], mode="RGB").save(path)


def plan_svg(plan: FloorPlan, vocab: LabelVocabulary, size=(512, 512)) -> str:
    """Rooms filled by type (largest first, like the raster), walls as black lines."""
    w, h = size
    colours = type_colours(vocab)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="{colours["background"]}"/>',
    ]
    for room in sorted(plan.rooms, key=lambda r: (-r.polygon.area, r.room_id)):
        pts = denormalize_points(room.polygon.ring, size) + 0.5
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        out.append(
            f'<polygon points="{path}" fill="{colours.get(room.room_type, "#808080")}" stroke="#555555" '
            f'stroke-width="1"><title>{escape(str(room.room_id))}: {escape(room.room_type)}</title></polygon>'
        )
    for seg in plan.walls.segments:
        (x0, y0), (x1, y1) = denormalize_points(seg, size) + 0.5
        out.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="#000000" stroke-width="3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(path, plan: FloorPlan, vocab: LabelVocabulary, size=(512, 512)) -> None:
    Path(path).write_text(plan_svg(plan, vocab, size))
