import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bar
from oracles import components, holes, random_blob
from plancomplete.raster import (
    BinaryMask,
    Grid,
    MaskFormatError,
    is_removable,
    load_grid,
    load_mask,
    neighbour_count,
    read_label_image,
    save_mask,
    thin,
    write_label_image,
)


def test_bar_thins_to_single_path():
    sk = thin(BinaryMask(bar()))
    assert components(sk.bits) == 1
    # one pixel wide: no 2x2 block survives and every pixel has at most two neighbours
    b = sk.bits
    assert not (b[:-1, :-1] & b[1:, :-1] & b[:-1, 1:] & b[1:, 1:]).any()
    assert neighbour_count(b)[b].max() <= 2
    assert (neighbour_count(b)[b] == 1).sum() == 2


def test_empty_and_single_pixel():
    empty = BinaryMask(np.zeros((5, 7), dtype=bool))
    assert thin(empty) == empty
    one = np.zeros((5, 5), dtype=bool)
    one[2, 2] = True
    assert thin(BinaryMask(one)) == BinaryMask(one)


def test_two_by_two_block_is_not_erased():
    b = np.zeros((6, 6), dtype=bool)
    b[2:4, 2:4] = True
    sk = thin(BinaryMask(b))
    assert sk.count() >= 1
    assert components(sk.bits) == 1


def test_ring_keeps_its_hole():
    yy, xx = np.mgrid[:31, :31]
    r = np.hypot(yy - 15, xx - 15)
    b = (r >= 6) & (r <= 10)
    sk = thin(BinaryMask(b))
    assert components(sk.bits) == 1 and holes(sk.bits) == 1


def test_random_blobs_topology_and_idempotence(rng):
    for _ in range(100):
        b = random_blob(rng)
        sk = thin(BinaryMask(b))
        assert components(sk.bits) == components(b)
        assert holes(sk.bits) == holes(b)
        assert not (sk.bits & ~b).any()
        assert thin(sk) == sk
        assert not is_removable(sk).any()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.booleans(), min_size=100, max_size=100))
def test_arbitrary_masks_subset_and_fixed_point(cells):
    b = np.array(cells, dtype=bool).reshape(10, 10)
    sk = thin(BinaryMask(b))
    assert not (sk.bits & ~b).any()
    assert components(sk.bits) == components(b)
    assert thin(sk) == sk


def test_png_and_pgm_round_trip(tmp_path, rng):
    labels = rng.integers(0, 12, (9, 13)).astype(np.uint8)
    for name in ("l.png", "l.pgm"):
        write_label_image(tmp_path / name, labels)
        assert np.array_equal(read_label_image(tmp_path / name), labels)
    mask = load_mask(tmp_path / "l.png", [1, 3])
    assert np.array_equal(mask.bits, np.isin(labels, [1, 3]))
    grid = load_grid(tmp_path / "l.pgm")
    assert isinstance(grid, Grid) and (grid.width, grid.height) == (13, 9)
    save_mask(tmp_path / "m.png", mask)
    assert load_mask(tmp_path / "m.png", [1]) == mask


def test_ascii_pgm_with_comment(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P2\n# hand made\n3 2\n255\n0 1 2\n3 4 5\n")
    assert read_label_image(tmp_path / "a.pgm").tolist() == [[0, 1, 2], [3, 4, 5]]


def test_format_errors(tmp_path):
    with pytest.raises(MaskFormatError):
        read_label_image(tmp_path / "missing.png")
    (tmp_path / "junk.png").write_bytes(b"not an image")
    with pytest.raises(MaskFormatError):
        read_label_image(tmp_path / "junk.png")
    (tmp_path / "deep.pgm").write_bytes(b"P2\n1 1\n65535\n7\n")
    with pytest.raises(MaskFormatError):
        read_label_image(tmp_path / "deep.pgm")
    from PIL import Image

    Image.new("RGB", (2, 2)).save(tmp_path / "rgb.png")
    with pytest.raises(MaskFormatError):
        read_label_image(tmp_path / "rgb.png")


def test_fixture_pixel_count():
    from plancomplete.pipeline import fixture_path

    png = load_mask(fixture_path("walls_cross.png"), [1])
    pgm = load_mask(fixture_path("walls_cross.pgm"), [1])
    assert png == pgm and png.count() == 927
