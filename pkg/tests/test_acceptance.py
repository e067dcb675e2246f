"""Acceptance checks: one PASS/FAIL line per criterion.

Run with pytest (lines are printed even when output is captured) or
directly as ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

from conftest import bar, plus_sign  # noqa: E402
from oracles import brute_masks, components, random_blob, random_simple_polygon, raster_area, refined_sweep_mrr_area, sweep_mrr_area  # noqa: E402

RESULTS: dict = {}


def report(name: str, ok: bool, detail: str) -> str:
    RESULTS[name] = ok
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line, flush=True)
    return line


# ---------------------------------------------------------------------------


def check_mrr():
    from plancomplete.geometry import min_rotated_rect

    rng = np.random.default_rng(2024)
    polys = [random_simple_polygon(rng, int(rng.integers(5, 31))) for _ in range(200)]
    t0 = time.perf_counter()
    worst, over, areas = 0.0, 0, []
    for p in polys:
        ours = min_rotated_rect(p).area
        sweep = sweep_mrr_area(p, 0.05)
        rel = abs(ours - sweep) / sweep
        worst = max(worst, rel)
        over += rel > 1e-4
        areas.append(ours)
    elapsed = time.perf_counter() - t0
    # diagnostic only: a sweep refined around each local minimum
    refined_worst = max(abs(a - refined_sweep_mrr_area(p)) / a for a, p in zip(areas, polys))
    ok = over == 0 and elapsed < 10
    detail = (
        f"{over}/200 polygons exceed 1e-4 vs the 0.05-degree sweep (max rel {worst:.2e}); "
        f"refined sweep agrees to {refined_worst:.1e}; {elapsed:.1f}s"
    )
    return ok, detail


def check_thinning():
    from plancomplete.raster import BinaryMask, neighbour_count, thin

    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(100):
        b = random_blob(rng)
        sk = thin(BinaryMask(b))
        if components(sk.bits) != components(b) or thin(sk) != sk:
            bad += 1
    sk = thin(BinaryMask(bar(20, 5))).bits
    no_block = not (sk[:-1, :-1] & sk[1:, :-1] & sk[:-1, 1:] & sk[1:, 1:]).any()
    deg = neighbour_count(sk)[sk]
    path = no_block and deg.max() <= 2 and (deg == 1).sum() == 2
    ok = bad == 0 and path and components(sk) == 1
    return ok, f"{100 - bad}/100 blobs idempotent with components preserved; bar -> {int(sk.sum())}-pixel path, {components(sk)} component"


def check_skeleton():
    from plancomplete.raster import BinaryMask
    from plancomplete.skeleton import vectorize_walls

    plus = len(vectorize_walls(BinaryMask(plus_sign(width=3))))
    straight = len(vectorize_walls(BinaryMask(bar(20, 5))))
    return plus == 4 and straight == 1, f"plus sign -> {plus} segments, bar -> {straight} segment"


def check_refinement():
    from plancomplete.geometry import Polygon, refine_by_structure
    from plancomplete.skeleton import WallSet

    square = Polygon([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    kept = refine_by_structure(square, WallSet([[[0.1, -0.9], [0.1, 0.9]]]))
    area = raster_area(kept.ring, 512)
    rel = abs(area - 0.6) / 0.6
    return rel <= 0.02, f"retained raster area {area:.4f} vs 0.6 (rel {rel:.2%})"


def check_iou():
    from fractions import Fraction

    from plancomplete.evaluation import class_iou, evaluate
    from plancomplete.graph import default_vocabulary

    vocab = default_vocabulary()
    bg, st, a = vocab.background, vocab.structure, vocab.grid_labels["Bedroom"]
    v = evaluate(np.array([[bg, a, st, a]]), np.array([[bg, bg, st, a]]), vocab).variants
    want = {"all": Fraction(2, 3), "wo_background": Fraction(3, 4), "structure_only": Fraction(1), "background_only": Fraction(1, 2), "wo_structure": Fraction(1, 2)}
    exact = v == want and all(isinstance(x, Fraction) for x in v.values())
    rng = np.random.default_rng(11)
    labels = sorted(vocab.grid_labels.values())
    sym = 0
    for _ in range(100):
        shape = tuple(rng.integers(1, 12, 2))
        p, t = rng.choice(labels, shape), rng.choice(labels, shape)
        sym += all(class_iou(p, t, lab) == class_iou(t, p, lab) for lab in labels) and evaluate(p, t, vocab).variants == evaluate(t, p, vocab).variants
    return exact and sym == 100, f"4x1 case {'exact' if exact else dict(v)}; symmetry {sym}/100"


def check_gat():
    import tempfile

    from plancomplete.cli import main
    from plancomplete.graph import AccessGraph, Edge, Node, default_vocabulary
    from plancomplete.roomtype import GatConfig, collate, init_params, model_forward, train
    from plancomplete.synthetic import make_dataset

    vocab = default_vocabulary()
    nodes = [Node(i, z) for i, z in enumerate(["Zone1", "Zone2", "Zone2", "Zone3", "Zone4"])]
    edges = [Edge(0, 1, "door"), Edge(1, 2, "passage"), Edge(2, 3, "entrance"), Edge(3, 4, "door"), Edge(1, 4, "door")]
    g = AccessGraph(nodes, edges).with_room_types(["Bedroom", "Kitchen", "Corridor", "Bathroom", "Balcony"])
    config = GatConfig(num_layers=2, hidden_dim=4, dropout_rate=0.0)
    params = init_params(config, 4, 9, seed=1)
    batch = collate([g], vocab, with_targets=True)

    def loss_of(p):
        return torch.nn.functional.cross_entropy(model_forward(batch, p, config), batch.y)

    live = {k: v.clone().requires_grad_(True) for k, v in params.items()}
    grads = torch.autograd.grad(loss_of(live), list(live.values()))
    worst = 0.0
    for (name, value), grad in zip(params.items(), grads):
        for i in range(value.numel()):
            plus = {k: v.clone() for k, v in params.items()}
            minus = {k: v.clone() for k, v in params.items()}
            plus[name].view(-1)[i] += 1e-5
            minus[name].view(-1)[i] -= 1e-5
            num = (loss_of(plus) - loss_of(minus)).item() / 2e-5
            an = grad.view(-1)[i].item()
            worst = max(worst, abs(num - an) / max(abs(num), abs(an), 1e-6))
    fd_ok = worst < 1e-4

    graphs, v = make_dataset(256, "bijective", seed=0)
    _, history = train(graphs, GatConfig(max_epochs=50), v)
    reached = next((r["epoch"] for r in history if r["mean_val_acc"] == 1.0), None)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        main(["synth-dataset", "--out-dir", str(tmp / "door"), "--n", "200", "--rule", "door", "--seed", "0"])
        rc = main(["train-roomtype", str(tmp / "door"), "--out", str(tmp / "m.npz"), "--layers", "3,16", "--table", str(tmp / "t.txt")])
        rows = [line.split() for line in (tmp / "t.txt").read_text().splitlines()[1:]] if rc == 0 else []
    acc = {int(r[0]): float(r[2]) for r in rows}
    sweep_ok = rc == 0 and acc.get(3, 0) > acc.get(16, 1)
    ok = fd_ok and reached is not None and sweep_ok
    return ok, f"finite differences max rel {worst:.1e}; bijective val acc 1.0 at epoch {reached}; sweep acc N=3 {acc.get(3)} vs N=16 {acc.get(16)}"


def check_masks():
    from plancomplete.denoiser import build_masks, masked_attention

    rng = np.random.default_rng(5)
    same = 0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        doors = [(int(a), int(b)) for a, b in rng.integers(0, n, (int(rng.integers(0, 2 * n)), 2)) if a != b]
        w = int(rng.integers(0, 7))
        m = build_masks(n, doors, w)
        same += all(np.array_equal(x.numpy(), y) for x, y in zip((m.csa, m.gsa, m.rca, m.sca), brute_masks(n, doors, w)))
    leak_free = True
    for _ in range(50):
        q, k, v = (torch.tensor(rng.normal(size=s)) for s in ((6, 4), (7, 4), (7, 4)))
        mask = torch.tensor(rng.random((6, 7)) < 0.5)
        base = masked_attention(q, k, v, mask)
        for i in range(6):
            k2, v2 = k.clone(), v.clone()
            k2[~mask[i]] = 1e3
            v2[~mask[i]] = -1e6
            leak_free &= torch.equal(base[i], masked_attention(q, k2, v2, mask)[i])
    empty_row = torch.zeros(2, 3, dtype=torch.bool)
    zeros = torch.equal(masked_attention(q[:2], k[:3], v[:3], empty_row), torch.zeros(2, 4, dtype=torch.float64))
    ok = same == 100 and leak_free and zeros
    return ok, f"brute-force equal {same}/100; zero leakage {'bit-exact' if leak_free else 'VIOLATED'}; all-masked rows {'zero' if zeros else 'non-zero'}"


def _eight_room_graph():
    from plancomplete.graph import AccessGraph, Edge, Node, default_vocabulary

    vocab = default_vocabulary()
    nodes = [Node(i, vocab.zoning_types[i % 4], vocab.room_types[i % 9]) for i in range(8)]
    edges = [Edge(i, i + 1, "door") for i in range(7)] + [Edge(0, 7, "entrance"), Edge(2, 5, "passage")]
    return AccessGraph(nodes, edges)


def check_sampler():
    import jsonschema

    from plancomplete.denoiser import FloorPlanDenoiser
    from plancomplete.geometry import FLOORPLAN_SCHEMA, signed_area
    from plancomplete.graph import load_access_graph
    from plancomplete.pipeline import autocomplete, fixture_path
    from plancomplete.raster import load_mask
    from plancomplete.roomtype import RoomTypeClassifier
    from plancomplete.skeleton import vectorize_walls

    mask = load_mask(fixture_path("walls_cross.png"), [1])
    walls = vectorize_walls(mask)
    g = _eight_room_graph()
    est = FloorPlanDenoiser(steps=50, discrete_steps=8, seed=0).fit()
    plan = est.sample(g, walls, seed=1)
    shapes = all(r.polygon.ring.shape == (4, 2) and signed_area(r.polygon.ring) > 0 for r in plan.rooms)
    inside = all(np.abs(r.polygon.ring).max() <= 1 for r in plan.rooms)
    again = est.sample(g, walls, seed=1)
    det = all(np.array_equal(a.polygon.ring, b.polygon.ring) for a, b in zip(plan.rooms, again.rooms))
    try:
        jsonschema.validate(json.loads(json.dumps(plan.to_dict())), FLOORPLAN_SCHEMA)
        schema = True
    except jsonschema.ValidationError:
        schema = False

    apartment = load_access_graph(fixture_path("apartment_7rooms.json"))
    roomtype = RoomTypeClassifier(max_epochs=1).fit([apartment])
    t0 = time.perf_counter()
    result = autocomplete(mask, apartment, roomtype, est, seed=0)
    elapsed = time.perf_counter() - t0
    ok = shapes and inside and det and schema and len(plan.rooms) == 8 and len(result.plan.rooms) == 7 and elapsed < 10
    return ok, f"8 rooms, 4 CCW corners each: {shapes}; in [-1,1]: {inside}; deterministic: {det}; schema-valid: {schema}; autocomplete {elapsed:.2f}s"


def check_liveness():
    from plancomplete.denoiser import DiffusionSchedule, DenoiserConfig, init_params, sample_coords
    from plancomplete.skeleton import WallSet

    g = _eight_room_graph()
    config = DenoiserConfig()
    params = init_params(config, 9, seed=0)
    sched = DiffusionSchedule.cosine(50, 8)
    walls = WallSet([[[-0.8, 0.0], [0.8, 0.0]], [[0.0, -0.8], [0.0, 0.8]]], (64, 64))
    moved = WallSet(walls.segments.copy(), walls.source_size)
    moved.segments[0, 0, 0] += 0.1
    a = sample_coords(g, walls, params, config, sched, seed=0)
    b = sample_coords(g, moved, params, config, sched, seed=0)
    changed = int((a != b).sum())
    return changed >= 1, f"{changed} of {a.numel()} output coordinates changed after moving one wall endpoint by 0.1"


def check_gt_ordering():
    from plancomplete.graph import default_vocabulary
    from plancomplete.pipeline import fixture_path, gt_mrr_report, load_layout

    vocab = default_vocabulary()
    names = json.loads(fixture_path("manifest.json").read_text())["gt_layouts"]
    parts, ok = [], len(names) >= 5
    for name in names:
        v = gt_mrr_report(load_layout(fixture_path(name), vocab), vocab).as_floats()
        ok &= v["all"] > v["structure_only"]
        parts.append(f"{Path(name).stem} {v['all']:.3f}>{v['structure_only']:.3f}")
    return ok, f"{len(names)} fixtures; " + ", ".join(parts)


CRITERIA = [
    ("MRR oracle equivalence", check_mrr),
    ("Thinning", check_thinning),
    ("Skeleton fixtures", check_skeleton),
    ("Refinement 60/40", check_refinement),
    ("IoU", check_iou),
    ("GAT numerics", check_gat),
    ("Attention masks", check_masks),
    ("Sampler contract", check_sampler),
    ("Structural conditioning liveness", check_liveness),
    ("GT-MRR ordering", check_gt_ordering),
]


@pytest.mark.parametrize("name, check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print()
        line = report(name, ok, detail)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for name, check in CRITERIA:
        ok, detail = check()
        report(name, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
