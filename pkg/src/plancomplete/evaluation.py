"""Pixel-wise IoU over label maps, with the five class-subset variants."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import LabelVocabulary, default_vocabulary
from .raster import Grid

VARIANTS = ("wo_background", "all", "structure_only", "background_only", "wo_structure")
VARIANT_TITLES = {
    "wo_background": "w/o background",
    "all": "all",
    "structure_only": "structure only",
    "background_only": "background only",
    "wo_structure": "w/o structure",
}


def _cells(g) -> np.ndarray:
    return g.cells if isinstance(g, Grid) else np.asarray(g)


def _check_shapes(pred, truth):
    if pred.shape != truth.shape:
        raise ValueError(f"grid size mismatch: {pred.shape[::-1]} vs {truth.shape[::-1]}")


def class_iou(pred, truth, label: int):
    """IoU of one label as an exact :class:`Fraction`; ``None`` when the label is absent from both."""
    p, t = _cells(pred), _cells(truth)
    _check_shapes(p, t)
    pm, tm = p == label, t == label
    union = int(np.count_nonzero(pm | tm))
    if union == 0:
        return None
    return Fraction(int(np.count_nonzero(pm & tm)), union)


@dataclass
class Tally:
    """Per-label intersection/union pixel counts; merging is plain addition."""

    inter: dict = field(default_factory=dict)
    union: dict = field(default_factory=dict)

    @classmethod
    def of(cls, pred, truth, labels) -> "Tally":
        p, t = _cells(pred), _cells(truth)
        _check_shapes(p, t)
        out = cls()
        for lab in labels:
            pm, tm = p == lab, t == lab
            out.inter[lab] = int(np.count_nonzero(pm & tm))
            out.union[lab] = int(np.count_nonzero(pm | tm))
        return out

    def merge(self, other: "Tally") -> "Tally":
        keys = set(self.inter) | set(other.inter)
        return Tally(
            {k: self.inter.get(k, 0) + other.inter.get(k, 0) for k in keys},
            {k: self.union.get(k, 0) + other.union.get(k, 0) for k in keys},
        )

    def ious(self) -> dict:
        return {k: (Fraction(self.inter[k], u) if u else None) for k, u in self.union.items()}


def _mean(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return sum(vals, Fraction(0)) / len(vals)


def variant_means(per_label: dict, vocab: LabelVocabulary) -> dict:
    bg, st = vocab.background, vocab.structure
    labels = list(per_label)
    return {
        "all": _mean(per_label[k] for k in labels),
        "wo_background": _mean(per_label[k] for k in labels if k != bg),
        "structure_only": per_label.get(st),
        "background_only": per_label.get(bg),
        "wo_structure": _mean(per_label[k] for k in labels if k != st),
    }


@dataclass
class IoUReport:
    per_class: dict  # class name -> Fraction | None
    variants: dict  # variant -> Fraction | None

    def as_floats(self) -> dict:
        return {k: (None if v is None else float(v)) for k, v in self.variants.items()}

    def to_dict(self) -> dict:
        return {
            "variants": self.as_floats(),
            "per_class": {k: (None if v is None else float(v)) for k, v in self.per_class.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self, row_name: str = "") -> str:
        """Aligned text table with the variants as columns."""
        heads = [VARIANT_TITLES[v] for v in VARIANTS]
        cells = ["-" if self.variants[v] is None else f"{float(self.variants[v]):.3f}" for v in VARIANTS]
        widths = [max(len(h), len(c)) for h, c in zip(heads, cells)]
        first = max(len(row_name), 1)
        lines = [
            " " * first + "  " + "  ".join(h.rjust(w) for h, w in zip(heads, widths)),
            row_name.ljust(first) + "  " + "  ".join(c.rjust(w) for c, w in zip(cells, widths)),
        ]
        return "\n".join(lines)


def _report_from_ious(per_label: dict, vocab: LabelVocabulary) -> IoUReport:
    names = vocab.palette()
    return IoUReport({names[k]: v for k, v in per_label.items()}, variant_means(per_label, vocab))


def evaluate(pred, truth, vocab: LabelVocabulary | None = None) -> IoUReport:
    vocab = vocab or default_vocabulary()
    labels = sorted(vocab.grid_labels.values())
    p, t = _cells(pred), _cells(truth)
    _check_shapes(p, t)
    known = set(labels)
    for name, g in (("prediction", p), ("truth", t)):
        stray = set(np.unique(g).tolist()) - known
        if stray:
            raise ValueError(f"{name} contains labels outside the vocabulary: {sorted(stray)}")
    per_label = {lab: class_iou(p, t, lab) for lab in labels}
    return _report_from_ious(per_label, vocab)


def evaluate_corpus(pairs, vocab: LabelVocabulary | None = None, macro: bool = False) -> IoUReport:
    """Corpus IoU; micro-averaged (tallies summed before dividing) unless ``macro``."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("corpus is empty")
    vocab = vocab or default_vocabulary()
    labels = sorted(vocab.grid_labels.values())
    if macro:
        reports = [evaluate(p, t, vocab) for p, t in pairs]
        per_class = {name: _mean(r.per_class[name] for r in reports) for name in reports[0].per_class}
        variants = {v: _mean(r.variants[v] for r in reports) for v in VARIANTS}
        return IoUReport(per_class, variants)
    total = Tally()
    for p, t in pairs:
        total = total.merge(Tally.of(p, t, labels))
    return _report_from_ious(total.ious(), vocab)
