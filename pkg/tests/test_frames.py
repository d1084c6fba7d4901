"""Sequence loading and the minimum-side rescale plan."""

import numpy as np
import pytest
from PIL import Image

from patchgraph import BoundingBox, load_sequence, rescale_for_min_side
from patchgraph.errors import DecodeError, GeometryError, InputError
from patchgraph.frames import ScalePlan, iter_sequence, list_frame_files


def _write_png(path, arr):
    Image.fromarray(arr).save(path)


def _rgb(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def test_load_sequence_sorted_rgb(tmp_path):
    # written out of order on purpose; loading must sort by name
    for name, seed in (("0002.png", 2), ("0001.png", 1), ("0003.png", 3)):
        _write_png(tmp_path / name, _rgb(12, 16, seed))
    frames = load_sequence(tmp_path)
    assert len(frames) == 3
    for fr in frames:
        assert fr.shape == (12, 16, 3) and fr.dtype == np.uint8
    np.testing.assert_array_equal(frames[0], _rgb(12, 16, 1))
    np.testing.assert_array_equal(frames[2], _rgb(12, 16, 3))


def test_grayscale_is_replicated_to_three_channels(tmp_path):
    g = np.arange(64, dtype=np.uint8).reshape(8, 8)
    Image.fromarray(g, mode="L").save(tmp_path / "a.png")
    (frame,) = load_sequence(tmp_path)
    assert frame.shape == (8, 8, 3)
    np.testing.assert_array_equal(frame[:, :, 0], frame[:, :, 1])
    np.testing.assert_array_equal(frame[:, :, 0], frame[:, :, 2])


def test_empty_and_missing_directories(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    with pytest.raises(InputError):
        load_sequence(empty)
    with pytest.raises(InputError):
        list_frame_files(tmp_path / "missing")


def test_undecodable_file_names_the_culprit(tmp_path):
    _write_png(tmp_path / "0001.png", _rgb(8, 8))
    (tmp_path / "0002.png").write_bytes(b"not a png")
    with pytest.raises(DecodeError) as err:
        load_sequence(tmp_path)
    assert "0002.png" in str(err.value)


def test_pattern_filter(tmp_path):
    import os

    _write_png(tmp_path / "0001.png", _rgb(8, 8))
    _write_png(tmp_path / "skip.jpg", _rgb(8, 8))
    (tmp_path / "notes.txt").write_text("x")
    files = list_frame_files(tmp_path)
    assert [os.path.basename(f) for f in files] == ["0001.png", "skip.jpg"]
    only = list_frame_files(tmp_path, pattern="*.png")
    assert [os.path.basename(f) for f in only] == ["0001.png"]


def test_iter_matches_load(tmp_path):
    for i in range(3):
        _write_png(tmp_path / f"{i:04d}.png", _rgb(10, 10, i))
    eager = load_sequence(tmp_path)
    lazy = list(iter_sequence(tmp_path))
    assert len(eager) == len(lazy)
    for a, b in zip(eager, lazy):
        np.testing.assert_array_equal(a, b)


def test_large_box_is_downscaled():
    # min side 64 -> scale 32/64 = 0.5, frame 128x256 -> 64x128
    frame = _rgb(128, 256, 5)
    box = BoundingBox(40.0, 40.0, 64.0, 80.0)
    out, obox, plan = rescale_for_min_side(frame, box)
    assert plan.scale == pytest.approx(0.5)
    assert out.shape == (64, 128, 3)
    assert obox.as_tuple() == pytest.approx((20.0, 20.0, 32.0, 40.0))
    assert min(obox.w, obox.h) == pytest.approx(32.0)


def test_small_box_is_left_alone():
    # upscaling never happens; min side 20 stays at 20
    frame = _rgb(64, 64, 6)
    box = BoundingBox(5.0, 5.0, 20.0, 30.0)
    out, obox, plan = rescale_for_min_side(frame, box)
    assert plan.scale == 1.0
    assert out is frame
    assert obox == box


def test_exact_threshold_is_identity():
    frame = _rgb(64, 64, 7)
    out, obox, plan = rescale_for_min_side(frame, BoundingBox(0.0, 0.0, 32.0, 40.0))
    assert plan.scale == 1.0
    assert out is frame


def test_plan_round_trip():
    plan = ScalePlan(scale=1.6)
    b = BoundingBox(10.0, 12.0, 30.0, 20.0)
    back = plan.to_original(plan.apply(b))
    assert back.as_tuple() == pytest.approx(b.as_tuple())
    rng = np.random.default_rng(23)
    for _ in range(100):
        s = float(rng.uniform(0.2, 5.0))
        p = ScalePlan(scale=s)
        b = BoundingBox(*rng.uniform(-10, 50, size=2), *rng.uniform(1, 40, size=2))
        back = p.to_original(p.apply(b))
        assert np.allclose(back.as_tuple(), b.as_tuple(), atol=1e-9)


def test_box_outside_frame_rejected():
    frame = _rgb(40, 40, 9)
    with pytest.raises(GeometryError):
        rescale_for_min_side(frame, BoundingBox(100.0, 100.0, 10.0, 10.0))


def test_rescaled_content_is_a_resample():
    # a solid color survives bilinear resampling exactly
    frame = np.full((80, 90, 3), 77, dtype=np.uint8)
    out, _, plan = rescale_for_min_side(frame, BoundingBox(5.0, 5.0, 64.0, 64.0))
    assert plan.scale < 1.0
    assert np.all(out == 77)
