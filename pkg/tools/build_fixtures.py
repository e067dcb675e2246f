"""Regenerate the bundled fixtures under src/plancomplete/data/fixtures.

The wall raster is drawn with PIL primitives only and its foreground count is
taken from PIL's histogram, so the manifest does not depend on package code.
"""

import json
from pathlib import Path

from PIL import Image, ImageDraw

OUT = Path(__file__).resolve().parents[1] / "src" / "plancomplete" / "data" / "fixtures"


def walls_cross():
    # 64x64: 3-px frame spanning pixels 4..59 and a 3-px cross at 30..32
    img = Image.new("L", (64, 64), 0)
    d = ImageDraw.Draw(img)
    d.rectangle([4, 4, 59, 6], fill=1)
    d.rectangle([4, 57, 59, 59], fill=1)
    d.rectangle([4, 4, 6, 59], fill=1)
    d.rectangle([57, 4, 59, 59], fill=1)
    d.rectangle([30, 7, 32, 56], fill=1)
    d.rectangle([7, 30, 56, 32], fill=1)
    img.save(OUT / "walls_cross.png")
    img.save(OUT / "walls_cross.pgm")
    return img.histogram()[1]


def _norm(points, size=64):
    # pixel-edge coordinates -> normalized frame
    return [[round((x - size / 2) / (size / 2), 6), round((y - size / 2) / (size / 2), 6)] for x, y in points]


def _box(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def apartment():
    # rooms of the walls_cross layout; wall pixels 4..6, 30..32, 57..59
    rooms = [
        (0, "Zone1", "Bedroom", _box(7, 7, 30, 30)),
        (1, "Zone3", "Bathroom", _box(33, 7, 45, 30)),
        (2, "Zone3", "Storeroom", _box(45, 7, 57, 30)),
        (3, "Zone2", "Kitchen", _box(7, 33, 30, 44)),
        (4, "Zone2", "Dining", _box(7, 44, 30, 57)),
        (5, "Zone2", "Corridor", _box(33, 33, 42, 57)),
        (6, "Zone2", "Livingroom", _box(42, 33, 57, 57)),
    ]
    edges = [
        (5, 0, "door"),
        (5, 1, "door"),
        (1, 2, "door"),
        (5, 6, "entrance"),
        (6, 3, "passage"),
        (3, 4, "passage"),
        (4, 6, "door"),
    ]
    doc = {
        "nodes": [{"id": i, "zoning": z, "room_type": t, "polygon": _norm(poly)} for i, z, t, poly in rooms],
        "edges": [{"a": a, "b": b, "type": t} for a, b, t in edges],
    }
    (OUT / "apartment_7rooms.json").write_text(json.dumps(doc, indent=1) + "\n")
    return edges


FRAME = [_box(6, 6, 58, 8), _box(6, 56, 58, 58), _box(6, 6, 8, 58), _box(56, 6, 58, 58)]

# Ground-truth layouts in pixel-edge coordinates on a 64x64 canvas. Rooms are
# deliberately non-rectangular in places so their MRRs overlap neighbours or walls.
GT_LAYOUTS = {
    "gt_01_l_living": {
        "walls": FRAME + [_box(30, 8, 32, 56)],
        "rooms": [
            ("Bedroom", _box(8, 8, 30, 56)),
            ("Livingroom", [[32, 8], [56, 8], [56, 40], [44, 40], [44, 56], [32, 56]]),
            ("Bathroom", _box(44, 40, 56, 56)),
        ],
    },
    "gt_02_split_levels": {
        "walls": FRAME + [_box(8, 28, 56, 30)],
        "rooms": [
            ("Livingroom", [[8, 8], [56, 8], [56, 28], [20, 28], [20, 20], [8, 20]]),
            ("Kitchen", _box(8, 20, 20, 28)),
            ("Bedroom", _box(8, 30, 36, 56)),
            ("Storeroom", _box(36, 30, 56, 56)),
        ],
    },
    "gt_03_diagonal": {
        "walls": FRAME + [[[8, 38], [38, 8], [41, 8], [8, 41]]],
        "rooms": [
            ("Kitchen", [[8, 8], [38, 8], [8, 38]]),
            ("Livingroom", [[41, 8], [56, 8], [56, 56], [8, 56], [8, 41]]),
        ],
    },
    "gt_04_quadrants": {
        "walls": FRAME + [_box(30, 8, 32, 56), _box(8, 30, 30, 32), _box(32, 36, 56, 38)],
        "rooms": [
            ("Corridor", [[8, 8], [30, 8], [30, 18], [18, 18], [18, 30], [8, 30]]),
            ("Storeroom", _box(18, 18, 30, 30)),
            ("Bedroom", _box(8, 32, 30, 56)),
            ("Livingroom", _box(32, 8, 56, 36)),
            ("Bathroom", [[32, 38], [56, 38], [56, 56], [44, 56], [44, 48], [32, 48]]),
            ("Balcony", _box(32, 48, 44, 56)),
        ],
    },
}


def _rotate(points, degrees, centre=32.0):
    import math

    c, s = math.cos(math.radians(degrees)), math.sin(math.radians(degrees))
    return [[round(centre + (x - centre) * c - (y - centre) * s, 4), round(centre + (x - centre) * s + (y - centre) * c, 4)] for x, y in points]


def _rotated_layout(name, degrees):
    # shrink towards the centre first so the rotated plan stays on the canvas
    base = GT_LAYOUTS[name]
    shrink = lambda pts: [[32 + (x - 32) * 0.8, 32 + (y - 32) * 0.8] for x, y in pts]  # noqa: E731
    return {
        "walls": [_rotate(shrink(w), degrees) for w in base["walls"]],
        "rooms": [(t, _rotate(shrink(p), degrees)) for t, p in base["rooms"]],
    }


def gt_layouts():
    layouts = dict(GT_LAYOUTS)
    layouts["gt_05_rotated"] = _rotated_layout("gt_01_l_living", 20.0)
    names = []
    for name, lay in layouts.items():
        doc = {
            "size": [64, 64],
            "walls": lay["walls"],
            "rooms": [{"id": i, "room_type": t, "polygon": p} for i, (t, p) in enumerate(lay["rooms"])],
        }
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        names.append(f"{name}.json")
    return names


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    count = walls_cross()
    edges = apartment()
    gts = gt_layouts()
    manifest_path = OUT / "manifest.json"
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    manifest.setdefault("walls_cross.png", {})
    manifest["walls_cross.png"].update({"foreground_labels": [1], "foreground_pixels": count, "size": [64, 64]})
    # frozen after inspecting the vectorized overlay (tolerance 1.5 px, min length 4 px):
    # 4 frame sides split at the T-junctions (8) plus 4 cross arms
    manifest["walls_cross.png"]["segments"] = {"tolerance": 1.5, "min_length": 4.0, "count": 12}
    manifest["apartment_7rooms.json"] = {"nodes": 7, "edges": sorted([min(a, b), max(a, b), t] for a, b, t in edges)}
    manifest["gt_layouts"] = gts
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    print("walls_cross foreground", count)


if __name__ == "__main__":
    main()
