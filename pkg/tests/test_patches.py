"""Patch grids and histogram descriptors."""

import numpy as np
import pytest

from patchgraph import BoundingBox, FrameMaps, describe_patch, feature_matrix, init_seeds, partition
from patchgraph.errors import GeometryError
from patchgraph.patches import (
    DESCRIPTOR_DIM,
    GRID,
    INTERIOR_IDS,
    INTERIOR_MASK,
    N_INTERIOR,
    N_NODES,
    RING_IDS,
    node_matrix,
    round_half_up,
    window_histograms,
)


def _rgb(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def test_grid_constants():
    assert GRID == 10 and N_NODES == 100 and N_INTERIOR == 64
    assert INTERIOR_IDS.size == 64 and RING_IDS.size == 36
    assert INTERIOR_MASK.sum() == 64
    # row-major: node 0 is the top-left ring corner, node 11 the first interior
    assert not INTERIOR_MASK[0] and INTERIOR_MASK[11]


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(2.49) == 2
    assert round_half_up(-0.5) == 0
    assert round_half_up(3.0) == 3


def test_partition_uniform_box():
    lay = partition(BoundingBox(0.0, 0.0, 80.0, 80.0))
    assert (lay.bw, lay.bh, lay.cell_w, lay.cell_h) == (80, 80, 10, 10)
    assert np.all(lay.pw == 10) and np.all(lay.ph == 10)
    # interior spans the box exactly; ring sits one cell outside
    xs = np.unique(lay.x0[INTERIOR_IDS])
    np.testing.assert_array_equal(xs, np.arange(0, 80, 10))
    assert lay.x0[0] == -10 and lay.x0[GRID - 1] == 80


def test_partition_remainder_goes_to_last_interior_cell():
    lay = partition(BoundingBox(0.0, 0.0, 83.0, 80.0))
    assert lay.bw == 83 and lay.cell_w == 10
    widths = lay.pw[INTERIOR_IDS].reshape(8, 8)
    assert np.all(widths[:, :7] == 10)
    assert np.all(widths[:, 7] == 13)
    # the ring keeps the nominal width
    assert lay.pw[0] == 10 and lay.pw[GRID - 1] == 10


def test_partition_rejects_tiny_boxes():
    with pytest.raises(GeometryError):
        partition(BoundingBox(0.0, 0.0, 7.0, 80.0))
    with pytest.raises(GeometryError):
        partition(BoundingBox(0.0, 0.0, 80.0, 7.9))


def test_partition_fractional_origin_rounds_half_up():
    lay = partition(BoundingBox(2.5, 3.49, 16.0, 16.0))
    assert lay.bx == 3 and lay.by == 3


def test_interior_tiles_box_sweep():
    rng = np.random.default_rng(29)
    for _ in range(100):
        box = BoundingBox(*rng.uniform(-20, 20, size=2), *rng.uniform(8, 90, size=2))
        lay = partition(box)
        starts = lay.x0[INTERIOR_IDS].reshape(8, 8)[0]
        widths = lay.pw[INTERIOR_IDS].reshape(8, 8)[0]
        # consecutive interior cells abut and cover [bx, bx + bw)
        np.testing.assert_array_equal(starts[1:], starts[:-1] + widths[:-1])
        assert starts[0] == lay.bx
        assert starts[-1] + widths[-1] == lay.bx + lay.bw
        assert np.all(widths >= 1)
        ys = lay.y0[INTERIOR_IDS].reshape(8, 8)[:, 0]
        hs = lay.ph[INTERIOR_IDS].reshape(8, 8)[:, 0]
        assert ys[-1] + hs[-1] == lay.by + lay.bh


def test_layout_shift_is_pure_translation():
    lay = partition(BoundingBox(5.0, 6.0, 40.0, 48.0))
    moved = lay.shifted(3, -2)
    np.testing.assert_array_equal(moved.x0, lay.x0 + 3)
    np.testing.assert_array_equal(moved.y0, lay.y0 - 2)
    np.testing.assert_array_equal(moved.pw, lay.pw)
    assert moved.box.lx == lay.box.lx + 3


def test_constant_patch_histogram_is_one_hot():
    frame = np.zeros((40, 40, 3), dtype=np.uint8)
    frame[:, :, 0] = 200  # 200 >> 5 = 6
    frame[:, :, 1] = 31   # -> bin 0
    frame[:, :, 2] = 64   # -> bin 2
    v = describe_patch(frame, (10, 10, 8, 8))
    assert v.shape == (DESCRIPTOR_DIM,)
    expect_r = np.zeros(8)
    expect_r[6] = 1.0
    np.testing.assert_allclose(v[0:8], expect_r)
    assert v[8] == 1.0 and v[16 + 2] == 1.0
    # constant image: no gradient anywhere, block stays zero
    np.testing.assert_array_equal(v[24:32], np.zeros(8))


def test_vertical_edge_lands_in_bin_zero():
    frame = np.zeros((40, 40, 3), dtype=np.uint8)
    frame[:, 20:] = 255
    v = describe_patch(frame, (16, 10, 8, 8))
    assert v[24] == pytest.approx(1.0)
    assert np.all(v[25:32] == 0.0)


def test_horizontal_edge_lands_in_middle_bin():
    frame = np.zeros((40, 40, 3), dtype=np.uint8)
    frame[20:] = 255
    v = describe_patch(frame, (10, 16, 8, 8))
    # angle pi/2 -> bin floor((pi/2) * 8 / pi) = 4
    assert v[24 + 4] == pytest.approx(1.0)


def test_blocks_are_l1_normalized_sweep():
    rng = np.random.default_rng(31)
    frame = _rgb(60, 60, 31)
    maps = FrameMaps(frame)
    for _ in range(200):
        x0, y0 = rng.integers(-10, 60, size=2)
        w, h = rng.integers(1, 15, size=2)
        v = describe_patch(frame, (x0, y0, w, h), maps=maps)
        for b in range(3):
            assert v[b * 8:(b + 1) * 8].sum() == pytest.approx(1.0)
        gsum = v[24:32].sum()
        assert gsum == pytest.approx(1.0) or gsum == 0.0
        assert np.all(v >= 0.0)


def test_empty_rectangle_rejected():
    frame = _rgb(20, 20)
    with pytest.raises(GeometryError):
        describe_patch(frame, (5, 5, 0, 3))


def test_fully_off_frame_sees_nearest_column():
    # no in-frame pixel: the descriptor reads the nearest in-frame column
    # (uniform along the clamped direction) and carries no gradient mass
    frame = _rgb(30, 30, 37)
    a = describe_patch(frame, (-30, 5, 5, 5))
    b = describe_patch(frame, (-300, 5, 5, 5))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[24:32], np.zeros(8))
    sliver = describe_patch(frame, (0, 5, 1, 5))
    np.testing.assert_allclose(a[0:24], sliver[0:24], atol=1e-12)


def test_overhang_matches_clipped_rectangle():
    # partially off-frame rectangles histogram their in-frame area only,
    # so they must agree with an explicit intersection rectangle
    frame = _rgb(24, 26, 41)
    maps = FrameMaps(frame)
    rng = np.random.default_rng(43)
    checked = 0
    for _ in range(120):
        x0, y0 = (int(v) for v in rng.integers(-8, 30, size=2))
        w, h = (int(v) for v in rng.integers(1, 12, size=2))
        cx0, cy0 = max(x0, 0), max(y0, 0)
        cx1, cy1 = min(x0 + w, 26), min(y0 + h, 24)
        if cx1 - cx0 < 1 or cy1 - cy0 < 1:
            continue
        a = describe_patch(frame, (x0, y0, w, h), maps=maps)
        b = describe_patch(frame, (cx0, cy0, cx1 - cx0, cy1 - cy0), maps=maps)
        np.testing.assert_allclose(a, b, atol=1e-12)
        checked += 1
    assert checked > 60


def test_feature_matrix_shape_and_determinism():
    frame = _rgb(80, 100, 47)
    box = BoundingBox(20.0, 15.0, 48.0, 56.0)
    X1, lay1 = feature_matrix(frame, box)
    X2, _ = feature_matrix(frame, box)
    assert X1.shape == (DESCRIPTOR_DIM, N_NODES)
    np.testing.assert_array_equal(X1, X2)
    assert np.all(np.isfinite(X1))


def test_batched_columns_match_single_patch_calls():
    frame = _rgb(70, 90, 53)
    box = BoundingBox(18.0, 12.0, 43.0, 37.0)
    X, lay = feature_matrix(frame, box)
    maps = FrameMaps(frame)
    for node in (0, 9, 11, 47, 55, 88, 99):
        single = describe_patch(
            frame,
            (lay.x0[node], lay.y0[node], lay.pw[node], lay.ph[node]),
            maps=maps,
        )
        np.testing.assert_array_equal(X[:, node], single)


def test_periodic_content_shift_equivariance():
    # tile a random 12x12 cell; moving the box by one full cell re-reads
    # identical pixels, so the whole feature matrix is unchanged
    rng = np.random.default_rng(59)
    tile = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)
    frame = np.tile(tile, (20, 20, 1))
    box = BoundingBox(60.0, 60.0, 96.0, 96.0)  # cell 12 matches the tile
    X1, _ = feature_matrix(frame, box)
    X2, _ = feature_matrix(frame, box.shifted(12.0, 12.0))
    np.testing.assert_allclose(X1, X2, atol=1e-12)


def test_window_histograms_batch_consistency():
    frame = _rgb(50, 50, 61)
    maps = FrameMaps(frame)
    ox = np.array([3, 17, -2, 40])
    oy = np.array([5, 9, 44, -1])
    batch = window_histograms(maps, ox, oy, 6, 4)
    assert batch.shape == (4, DESCRIPTOR_DIM)
    for i in range(4):
        one = window_histograms(maps, ox[i:i + 1], oy[i:i + 1], 6, 4)[0]
        np.testing.assert_array_equal(batch[i], one)


def test_init_seed_counts_canonical():
    lay = partition(BoundingBox(0.0, 0.0, 80.0, 80.0))
    seeds = init_seeds(lay)
    assert seeds.r.sum() == 16.0
    assert seeds.gamma.sum() == pytest.approx(16 + 36)
    # all ring nodes are determined background
    assert np.all(seeds.gamma[RING_IDS] == 1.0)
    assert np.all(seeds.r[RING_IDS] == 0.0)
    # free nodes are interior and carry gamma = 0
    free = seeds.gamma == 0.0
    assert free.sum() == 48 and np.all(INTERIOR_MASK[free])


def test_init_seed_geometry_sweep():
    rng = np.random.default_rng(67)
    for _ in range(60):
        box = BoundingBox(*rng.uniform(0, 30, size=2), *rng.uniform(16, 80, size=2))
        lay = partition(box)
        seeds = init_seeds(lay)
        assert seeds.n == N_NODES
        fg = seeds.r == 1.0
        assert fg.any() and np.all(INTERIOR_MASK[fg])
        assert np.all(seeds.gamma[~INTERIOR_MASK] == 1.0)
        # foreground centers really are inside the shrunk box
        shrunk = box.shrunk(0.2)
        centers = lay.centers()
        for i in np.flatnonzero(fg):
            assert shrunk.contains_point(*centers[i])


def test_node_matrix_subset():
    frame = _rgb(60, 60, 71)
    box = BoundingBox(10.0, 10.0, 40.0, 40.0)
    lay = partition(box)
    maps = FrameMaps(frame)
    full = node_matrix(maps, lay)
    sub = node_matrix(maps, lay, node_ids=INTERIOR_IDS)
    assert sub.shape == (DESCRIPTOR_DIM, 64)
    np.testing.assert_array_equal(sub, full[:, INTERIOR_IDS])
