import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_hull_area, random_simple_polygon, raster_area, refined_sweep_mrr_area, sweep_mrr_area
from plancomplete.geometry import (
    DegenerateGeometryError,
    FloorPlan,
    MRRApproximator,
    Polygon,
    RotatedRect,
    Room,
    convex_hull,
    cut_by_walls,
    min_rotated_rect,
    pixel_centers,
    points_in_polygon,
    rasterize_floorplan,
    refine_by_structure,
    signed_area,
)
from plancomplete.skeleton import WallSet

UNIT = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])


def test_polygon_normalizes_orientation_and_closure():
    cw = Polygon(UNIT[::-1].tolist() + [UNIT[-1].tolist()])
    assert cw.area == pytest.approx(1.0) and signed_area(cw.ring) > 0
    assert len(cw.ring) == 4
    with pytest.raises(DegenerateGeometryError):
        Polygon([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(DegenerateGeometryError):
        Polygon([[0, 0], [1, 1], [1, 0], [0, 1]])  # bow tie
    with pytest.raises(DegenerateGeometryError):
        Polygon([[0, 0], [1, 1]])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=3, max_size=25))
def test_hull_matches_brute_force(points):
    pts = np.round(np.array(points), 2)  # coarse lattice makes collinear inputs common
    oracle = brute_hull_area(pts)
    if oracle < 1e-12:
        with pytest.raises(DegenerateGeometryError):
            convex_hull(pts)
        return
    hull = convex_hull(pts)
    assert hull.area == pytest.approx(oracle, rel=1e-9, abs=1e-12)
    # every input point is inside or on the hull
    ring = hull.ring
    for p in pts:
        for a, b in zip(ring, np.roll(ring, -1, axis=0)):
            assert (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-9


def test_mrr_of_rectangles_is_themselves():
    for theta in np.linspace(0, np.pi, 7):
        c, s = np.cos(theta), np.sin(theta)
        rect = np.array([[-0.3, -0.1], [0.3, -0.1], [0.3, 0.1], [-0.3, 0.1]]) @ np.array([[c, s], [-s, c]])
        mrr = min_rotated_rect(Polygon(rect))
        assert mrr.area == pytest.approx(0.12, rel=1e-12)
        assert mrr.is_rectangle()


def test_mrr_of_diamond_and_triangle():
    diamond = Polygon([[0, -1], [1, 0], [0, 1], [-1, 0]])
    assert min_rotated_rect(diamond).area == pytest.approx(2.0)
    # right isoceles triangle: best box is flush with a leg, area = leg^2
    tri = Polygon([[0, 0], [1, 0], [0, 1]])
    assert min_rotated_rect(tri).area == pytest.approx(1.0)


def test_mrr_matches_refined_sweep(rng):
    for _ in range(60):
        pts = random_simple_polygon(rng, int(rng.integers(5, 31)))
        mrr = min_rotated_rect(Polygon(pts))
        assert mrr.is_rectangle(1e-9)
        assert mrr.area == pytest.approx(refined_sweep_mrr_area(pts), rel=1e-9)
        # the calipers answer can only be below or at the coarse sweep
        assert mrr.area <= sweep_mrr_area(pts) * (1 + 1e-12)
        # and it encloses every vertex
        rc = mrr.corners
        for a, b in zip(rc, np.roll(rc, -1, axis=0)):
            cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
            assert (cross >= -1e-9).all()


def test_mrr_speed(rng):
    polys = [random_simple_polygon(rng, 30) for _ in range(200)]
    t0 = time.perf_counter()
    for p in polys:
        min_rotated_rect(p)
    assert time.perf_counter() - t0 < 2.0


def test_mrr_rejects_collinear():
    with pytest.raises(DegenerateGeometryError):
        min_rotated_rect(np.array([[0, 0], [1, 1], [2, 2]]))


def test_sixty_forty_split_keeps_larger_piece():
    walls = WallSet([[[0.1, -0.9], [0.1, 0.9]]])
    kept = refine_by_structure(Polygon(UNIT), walls)
    assert raster_area(kept.ring) == pytest.approx(0.6, rel=0.02)
    assert kept.centroid()[0] < 0
    pieces = cut_by_walls(Polygon(UNIT), walls)
    assert sorted(round(p.area, 6) for p in pieces) == [0.396, 0.596]


def test_cut_variants():
    sq = Polygon(UNIT)
    cross = WallSet([[[0.0, -0.9], [0.0, 0.9]], [[-0.9, 0.0], [0.9, 0.0]]])
    assert len(cut_by_walls(sq, cross)) == 4
    outside = WallSet([[[0.7, -0.9], [0.7, 0.9]]])
    assert refine_by_structure(sq, outside) is sq
    # a wall ending inside the room notches it but does not split it
    stub = WallSet([[[0.0, -0.9], [0.0, 0.0]]])
    assert refine_by_structure(sq, stub) is sq
    assert refine_by_structure(sq, WallSet()) is sq


def test_equal_split_tie_break_is_deterministic():
    walls = WallSet([[[0.0, -0.9], [0.0, 0.9]]])
    a = refine_by_structure(Polygon(UNIT), walls)
    b = refine_by_structure(Polygon(UNIT[::-1]), walls)
    assert np.allclose(a.centroid(), b.centroid()) and a.centroid()[0] < 0


def test_points_in_polygon_against_raster_oracle(rng):
    for _ in range(10):
        ring = Polygon(random_simple_polygon(rng, 12)).ring
        px, py = pixel_centers(512, 512)
        ours = points_in_polygon(px, py, ring).sum() * (2 / 512) ** 2
        assert ours == pytest.approx(raster_area(ring), abs=1e-12)
        assert ours == pytest.approx(Polygon(ring).area, rel=0.05)


def test_rasterize_painter_order(vocab):
    big = Room(Polygon(UNIT * 1.6), "Livingroom", 0)
    small = Room(Polygon(UNIT * 0.4), "Bathroom", 1)
    for rooms in ([big, small], [small, big]):
        grid = rasterize_floorplan(FloorPlan(rooms), 32, 32, vocab)
        assert grid.cells[16, 16] == vocab.grid_labels["Bathroom"]
        assert grid.cells[16, 4] == vocab.grid_labels["Livingroom"]
        assert grid.cells[0, 0] == vocab.background
    walls = WallSet([[[-0.9, 0.0], [0.9, 0.0]]])
    grid = rasterize_floorplan(FloorPlan([big], walls), 32, 32, vocab)
    assert (grid.cells == vocab.structure).sum() >= 28
    with pytest.raises(ValueError):
        rasterize_floorplan(FloorPlan([big]), 0, 32, vocab)


def test_floorplan_json_round_trip(tmp_path, vocab):
    import json

    import jsonschema

    from plancomplete.geometry import FLOORPLAN_SCHEMA

    plan = FloorPlan([Room(Polygon(UNIT), "Kitchen", 3)], WallSet([[[0, 0], [0.5, 0]]], (8, 8)))
    plan.save(tmp_path / "p.json")
    jsonschema.validate(json.loads((tmp_path / "p.json").read_text()), FLOORPLAN_SCHEMA)
    back = FloorPlan.load(tmp_path / "p.json")
    assert np.allclose(back.rooms[0].polygon.ring, plan.rooms[0].polygon.ring)
    assert back.rooms[0].room_id == 3 and len(back.walls) == 1
    plan.validate(vocab)
    with pytest.raises(ValueError):
        FloorPlan([Room(Polygon(UNIT), "Spaceship", 0)]).validate(vocab)
    with pytest.raises(ValueError):
        FloorPlan([Room(Polygon(UNIT), "Kitchen", 0), Room(Polygon(UNIT), "Kitchen", 0)])


def test_mrr_approximator(vocab):
    l_shape = Polygon([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.0], [0.0, 0.0], [0.0, 0.5], [-0.5, 0.5]])
    walls = WallSet([[[0.1, -0.9], [0.1, 0.9]]])
    plan = FloorPlan([Room(l_shape, "Livingroom", 0)], walls)
    raw = MRRApproximator(refine=False).fit().transform(plan)[0]
    assert raw.rooms[0].polygon.area == pytest.approx(1.0)
    refined = MRRApproximator(refine=True).fit().transform(plan)[0]
    assert refined.rooms[0].polygon.area == pytest.approx(0.596)
    with pytest.raises(ValueError):
        MRRApproximator(wall_eps=0).fit()


def test_rotated_rect_checks():
    r = RotatedRect(UNIT[::-1])
    assert r.area == pytest.approx(1.0) and r.is_rectangle()
    assert not RotatedRect([[0, 0], [2, 0], [2, 1], [0, 2]]).is_rectangle()
    with pytest.raises(DegenerateGeometryError):
        RotatedRect(UNIT[:3])
