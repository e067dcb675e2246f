"""Named-tensor checkpoints: flat JSON or ``.npz``, always with explicit shapes."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def save_tensors(path, tensors: dict, meta: dict | None = None) -> None:
    path = Path(path)
    arrays = {k: np.asarray(v.detach().cpu().numpy() if hasattr(v, "detach") else v, dtype=np.float64) for k, v in tensors.items()}
    meta = dict(meta or {})
    if path.suffix == ".json":
        doc = {
            "meta": meta,
            "tensors": {k: {"shape": list(a.shape), "data": a.ravel().tolist()} for k, a in arrays.items()},
        }
        path.write_text(json.dumps(doc))
    else:
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load_tensors(path) -> tuple:
    """Return ``(tensors, meta)`` with tensors as float64 numpy arrays."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        tensors = {}
        for k, entry in doc["tensors"].items():
            data = np.asarray(entry["data"], dtype=np.float64)
            shape = tuple(entry["shape"])
            if data.size != int(np.prod(shape)):
                raise ValueError(f"{path}: tensor {k!r} has {data.size} values for shape {shape}")
            tensors[k] = data.reshape(shape)
        return tensors, doc.get("meta", {})
    with np.load(path, allow_pickle=False) as npz:
        meta = json.loads(str(npz["__meta__"])) if "__meta__" in npz.files else {}
        return {k: npz[k].astype(np.float64) for k in npz.files if k != "__meta__"}, meta
