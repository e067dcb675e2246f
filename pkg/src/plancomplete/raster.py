"""Label rasters, binary wall masks and topology-preserving thinning."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


class MaskFormatError(ValueError):
    """Raised when an image file cannot be interpreted as an 8-bit label map."""


@dataclass
class Grid:
    """Dense 2-D label map, stored as a ``(height, width)`` integer array."""

    cells: np.ndarray
    palette: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        self.cells = np.asarray(self.cells)
        if self.cells.ndim != 2:
            raise ValueError(f"Grid cells must be 2-D, got shape {self.cells.shape}")
        if self.cells.size and self.cells.min() < 0:
            raise ValueError("Grid labels must be non-negative")
        if self.palette:
            unknown = set(np.unique(self.cells).tolist()) - set(self.palette)
            if unknown:
                raise ValueError(f"labels {sorted(unknown)} missing from palette")

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]


@dataclass
class BinaryMask:
    """Boolean raster; ``True`` marks foreground (wall) pixels."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {self.bits.shape}")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))


# ---------------------------------------------------------------------------
# I/O


def _read_pgm(data: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    # header: magic, width, height, maxval; '#' starts a comment
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MaskFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise MaskFormatError("malformed PGM header") from exc
    if maxval > 255:
        raise MaskFormatError(f"unsupported PGM bit depth (maxval {maxval})")
    if magic == b"P5":
        raster = data[pos + 1 : pos + 1 + width * height]
        if len(raster) != width * height:
            raise MaskFormatError("truncated PGM raster")
        return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()
    if magic == b"P2":
        values = data[pos:].split()
        if len(values) < width * height:
            raise MaskFormatError("truncated PGM raster")
        return np.array([int(v) for v in values[: width * height]], dtype=np.uint8).reshape(height, width)
    raise MaskFormatError(f"not a grayscale PGM (magic {magic!r})")


def read_label_image(path) -> np.ndarray:
    """Read an 8-bit single-channel PNG or PGM as a ``uint8`` label array."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MaskFormatError(f"cannot read {path}: {exc.strerror}") from exc
    if data[:2] in (b"P2", b"P5"):
        return _read_pgm(data)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode not in ("L", "P"):
                raise MaskFormatError(f"{path}: expected 8-bit single-channel image, got mode {img.mode}")
            return np.array(img, dtype=np.uint8)
    except MaskFormatError:
        raise
    except Exception as exc:  # PIL raises a zoo of exception types
        raise MaskFormatError(f"{path}: {exc}") from exc


def write_label_image(path, labels: np.ndarray) -> None:
    """Write labels as 8-bit grayscale; ``.pgm`` gives binary PGM, anything else PNG."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must fit in 8 bits")
    labels = labels.astype(np.uint8)
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        h, w = labels.shape
        path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + labels.tobytes())
    else:
        Image.fromarray(labels, mode="L").save(path)


def load_mask(path, foreground_labels) -> BinaryMask:
    labels = read_label_image(path)
    return BinaryMask(np.isin(labels, list(foreground_labels)))


def load_grid(path, palette=None) -> Grid:
    return Grid(read_label_image(path).astype(np.int64), dict(palette or {}))


def save_mask(path, mask: BinaryMask) -> None:
    write_label_image(path, mask.bits.astype(np.uint8))


# ---------------------------------------------------------------------------
# Thinning
#
# Neighbour bit order follows the usual P2..P9 convention, clockwise from north:
# N, NE, E, SE, S, SW, W, NW.

_OFFSETS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _neighbour_codes(bits: np.ndarray) -> np.ndarray:
    padded = np.pad(bits, 1).astype(np.uint16)
    h, w = bits.shape
    code = np.zeros((h, w), dtype=np.uint16)
    for k, (dy, dx) in enumerate(_OFFSETS):
        code |= padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] << k
    return code


def _ring_components(ring, adjacency) -> int:
    # ring: 8 booleans in P2..P9 order; count components among the True entries
    seen = [False] * 8
    n = 0
    for start in range(8):
        if not ring[start] or seen[start]:
            continue
        n += 1
        stack = [start]
        seen[start] = True
        while stack:
            a = stack.pop()
            for b in adjacency[a]:
                if ring[b] and not seen[b]:
                    seen[b] = True
                    stack.append(b)
    return n


def _build_tables():
    pos = [(dy, dx) for dy, dx in _OFFSETS]
    adj8 = [[b for b in range(8) if b != a and max(abs(pos[a][0] - pos[b][0]), abs(pos[a][1] - pos[b][1])) == 1] for a in range(8)]
    adj4 = [[b for b in range(8) if abs(pos[a][0] - pos[b][0]) + abs(pos[a][1] - pos[b][1]) == 1] for a in range(8)]
    edge_neighbours = {0, 2, 4, 6}
    simple = np.zeros(256, dtype=bool)
    crossings = np.zeros(256, dtype=np.uint8)
    counts = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        ring = [(code >> k) & 1 == 1 for k in range(8)]
        counts[code] = sum(ring)
        crossings[code] = sum(1 for k in range(8) if not ring[k] and ring[(k + 1) % 8])
        fg = _ring_components(ring, adj8)
        # background components only count when 4-adjacent to the centre
        bg_ring = [not r for r in ring]
        seen_bg = 0
        seen = [False] * 8
        for start in range(8):
            if not bg_ring[start] or seen[start]:
                continue
            comp = []
            stack = [start]
            seen[start] = True
            while stack:
                a = stack.pop()
                comp.append(a)
                for b in adj4[a]:
                    if bg_ring[b] and not seen[b]:
                        seen[b] = True
                        stack.append(b)
            if edge_neighbours.intersection(comp):
                seen_bg += 1
        simple[code] = fg == 1 and seen_bg == 1
    return simple, crossings, counts


_SIMPLE, _CROSSINGS, _COUNTS = _build_tables()


def _subiteration_candidates(code: np.ndarray, bits: np.ndarray, first: bool) -> np.ndarray:
    b = _COUNTS[code]
    a = _CROSSINGS[code]
    p2, p4, p6, p8 = ((code >> k) & 1 for k in (0, 2, 4, 6))
    if first:
        directional = ((p2 & p4 & p6) == 0) & ((p4 & p6 & p8) == 0)
    else:
        directional = ((p2 & p4 & p8) == 0) & ((p2 & p6 & p8) == 0)
    return bits & (b >= 2) & (b <= 6) & (a == 1) & directional


def thin(mask: BinaryMask) -> BinaryMask:
    """Zhang-Suen thinning with a sequential simple-point guard.

    Candidates are marked in parallel per sub-iteration exactly as Zhang-Suen
    does, then removed one at a time only while they are still simple points
    (8-connected foreground, 4-connected background) and not end points. The
    guard keeps 2x2 blocks and similar configurations from vanishing, so the
    number of 8-connected components never changes.
    """
    bits = mask.bits.copy()
    h, w = bits.shape
    if not bits.any():
        return BinaryMask(bits)
    padded = np.pad(bits, 1)
    changed = True
    while changed:
        changed = False
        for first in (True, False):
            inner = padded[1:-1, 1:-1]
            cand = _subiteration_candidates(_neighbour_codes(inner), inner, first)
            ys, xs = np.nonzero(cand)
            for y, x in zip(ys.tolist(), xs.tolist()):
                py, px = y + 1, x + 1
                code = 0
                for k, (dy, dx) in enumerate(_OFFSETS):
                    if padded[py + dy, px + dx]:
                        code |= 1 << k
                if _COUNTS[code] >= 2 and _SIMPLE[code]:
                    padded[py, px] = False
                    changed = True
    return BinaryMask(padded[1:-1, 1:-1].copy())


def is_removable(mask: BinaryMask) -> np.ndarray:
    """Pixels that one more thinning sub-iteration would still delete."""
    code = _neighbour_codes(mask.bits)
    guard = (_COUNTS[code] >= 2) & _SIMPLE[code]
    return guard & (
        _subiteration_candidates(code, mask.bits, True) | _subiteration_candidates(code, mask.bits, False)
    )


def neighbour_count(bits: np.ndarray) -> np.ndarray:
    """Number of 8-neighbours set, per pixel."""
    return _COUNTS[_neighbour_codes(np.asarray(bits, dtype=bool))]
