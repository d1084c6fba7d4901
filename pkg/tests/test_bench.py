"""Benchmark harness: loading, curve metrics, OPE plumbing, CSV output."""

import os

import numpy as np
import pytest

from patchgraph.bench import (EvalRecord, PRECISION_THRESHOLDS,
                              SUCCESS_THRESHOLDS, emit_plot_data,
                              group_by_attribute, load_otb_sequence,
                              make_records, precision_curve, run_ope,
                              success_curve, summarize)
from patchgraph.errors import FormatError, InputError
from patchgraph.geometry import BoundingBox
from patchgraph.synthetic import write_otb_sequence


def _write_seq(tmp_path, n_frames=4, attributes=None):
    rng = np.random.default_rng(9)
    frames = [rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
              for _ in range(n_frames)]
    boxes = [BoundingBox(10.0, 12.0, 20.0, 20.0)] * n_frames
    root = tmp_path / "seq"
    write_otb_sequence(str(root), frames, boxes, attributes=attributes)
    return str(root), boxes


# ---------------------------------------------------------------- loading


def test_ground_truth_round_trip(tmp_path):
    root, boxes = _write_seq(tmp_path)
    spec = load_otb_sequence(root)
    assert spec.name == "seq"
    assert spec.n_frames == len(boxes)
    for got, want in zip(spec.boxes, boxes):
        # written 1-based, read back 0-based
        assert got.lx == pytest.approx(want.lx, abs=1e-9)
        assert got.ly == pytest.approx(want.ly, abs=1e-9)
        assert got.w == pytest.approx(want.w)
        assert got.h == pytest.approx(want.h)


def test_separators_and_blank_lines(tmp_path):
    root, _ = _write_seq(tmp_path, n_frames=4)
    gt = os.path.join(root, "groundtruth_rect.txt")
    with open(gt, "w") as fh:
        fh.write("2,3,5,7\n")        # comma
        fh.write("2\t3\t5\t7\n")     # tab
        fh.write("2 3 5 7\n")        # space
        fh.write("\n")               # blank lines are skipped
        fh.write("2, 3,\t5 , 7\n")   # mixed
    spec = load_otb_sequence(root)
    assert spec.n_frames == 4
    for b in spec.boxes:
        assert (b.lx, b.ly, b.w, b.h) == (1.0, 2.0, 5.0, 7.0)


def test_attribute_sidecar(tmp_path):
    root, _ = _write_seq(tmp_path, attributes=("OCC", "SV"))
    spec = load_otb_sequence(root)
    assert spec.attributes == ("OCC", "SV")
    bare, _ = _write_seq(tmp_path / "b")
    assert load_otb_sequence(bare).attributes == ()


@pytest.mark.parametrize("line,fragment", [
    ("1,2,3\n", "4 box fields"),
    ("1,2,3,4,5\n", "4 box fields"),
    ("1,2,three,4\n", "bad box number"),
    ("1,2,0,4\n", "sides must be positive"),
    ("1,2,3,-4\n", "sides must be positive"),
])
def test_malformed_lines_carry_position(tmp_path, line, fragment):
    root, _ = _write_seq(tmp_path, n_frames=2)
    gt = os.path.join(root, "groundtruth_rect.txt")
    with open(gt, "w") as fh:
        fh.write("2,3,5,7\n")
        fh.write(line)
    with pytest.raises(FormatError) as exc_info:
        load_otb_sequence(root)
    assert exc_info.value.line == 2
    assert fragment in str(exc_info.value)


def test_count_mismatch_rejected(tmp_path):
    root, _ = _write_seq(tmp_path, n_frames=4)
    gt = os.path.join(root, "groundtruth_rect.txt")
    with open(gt) as fh:
        lines = fh.readlines()
    with open(gt, "w") as fh:
        fh.writelines(lines[:-1])
    with pytest.raises(FormatError, match="4 frames but 3"):
        load_otb_sequence(root)


def test_missing_pieces(tmp_path):
    with pytest.raises(InputError, match="not found"):
        load_otb_sequence(str(tmp_path / "nope"))
    root, _ = _write_seq(tmp_path)
    os.remove(os.path.join(root, "groundtruth_rect.txt"))
    with pytest.raises(FormatError, match="no ground-truth"):
        load_otb_sequence(root)


def test_alternate_ground_truth_name(tmp_path):
    root, _ = _write_seq(tmp_path)
    os.rename(os.path.join(root, "groundtruth_rect.txt"),
              os.path.join(root, "groundtruth.txt"))
    assert load_otb_sequence(root).n_frames == 4


# ----------------------------------------------------------------- curves


def _record(err, ov):
    b = BoundingBox(0.0, 0.0, 1.0, 1.0)
    return EvalRecord(b, b, float(err), float(ov))


def test_precision_curve_hand_example():
    recs = [_record(e, 1.0) for e in (0.0, 10.0, 30.0)]
    curve = precision_curve(recs)
    assert curve.shape == (51,)
    assert curve[0] == pytest.approx(1 / 3)
    assert curve[9] == pytest.approx(1 / 3)
    assert curve[10] == pytest.approx(2 / 3)    # boundary counts
    assert curve[29] == pytest.approx(2 / 3)
    assert curve[30] == pytest.approx(1.0)
    assert curve[50] == pytest.approx(1.0)


def test_success_curve_hand_example():
    recs = [_record(0.0, ov) for ov in (0.0, 0.5, 0.8)]
    curve, auc = success_curve(recs)
    assert curve.shape == (21,)
    assert curve[0] == pytest.approx(2 / 3)     # > 0 excludes the zero
    assert curve[10] == pytest.approx(1 / 3)    # > 0.5 excludes the tie
    assert curve[16] == pytest.approx(0.0)      # > 0.8 excludes the tie
    assert auc == pytest.approx(curve.mean())


def test_curves_match_loop_recount():
    rng = np.random.default_rng(0)
    errs = np.concatenate([rng.uniform(0.0, 60.0, 150),
                           rng.integers(0, 51, 50).astype(float)])
    ovs = np.concatenate([rng.uniform(0.0, 1.0, 150),
                          rng.integers(0, 21, 50) / 20.0])
    recs = [_record(e, o) for e, o in zip(errs, ovs)]
    pcurve = precision_curve(recs)
    scurve, _ = success_curve(recs)
    for i, tau in enumerate(PRECISION_THRESHOLDS):
        want = sum(1 for e in errs if e <= tau) / len(errs)
        assert pcurve[i] == pytest.approx(want, abs=1e-12)
    for i, th in enumerate(SUCCESS_THRESHOLDS):
        want = sum(1 for o in ovs if o > th) / len(ovs)
        assert scurve[i] == pytest.approx(want, abs=1e-12)
    # precision accumulates, success decays
    assert np.all(np.diff(pcurve) >= 0)
    assert np.all(np.diff(scurve) <= 0)


def test_empty_records_rejected():
    with pytest.raises(InputError):
        precision_curve([])
    with pytest.raises(InputError):
        success_curve([])
    with pytest.raises(InputError):
        make_records([BoundingBox(0, 0, 1, 1)], [])


def test_summarize_scalars_index_the_curves():
    rng = np.random.default_rng(3)
    recs = [_record(rng.uniform(0, 50), rng.uniform(0, 1))
            for _ in range(40)]
    rep = summarize(recs)
    assert rep["pr20"] == pytest.approx(precision_curve(recs)[20])
    scurve, auc = success_curve(recs)
    assert rep["sr_auc"] == pytest.approx(auc)
    assert rep["sr_at_05"] == pytest.approx(scurve[10])
    assert rep["n_frames"] == 40


# -------------------------------------------------------------------- OPE


class _EchoTracker:
    """Replays ground truth; a perfect oracle for plumbing tests."""

    def __init__(self, boxes):
        self._boxes = iter(boxes[1:])

    def step(self, frame):
        class R:
            box = next(self._boxes)
        return R()


def test_run_ope_with_oracle_tracker(tmp_path):
    root, boxes = _write_seq(tmp_path, n_frames=5, attributes=("OCC",))
    spec = load_otb_sequence(root)
    records, report = run_ope(spec, lambda f0, b0: _EchoTracker(spec.boxes))
    assert len(records) == 5
    assert all(r.center_error == pytest.approx(0.0) for r in records)
    assert all(r.overlap == pytest.approx(1.0) for r in records)
    assert report["pr20"] == pytest.approx(1.0)
    assert report["sr_at_05"] == pytest.approx(1.0)
    # overlap 1.0 is not > 1.0, so the last success bin is empty
    assert report["sr_auc"] == pytest.approx(20 / 21)
    assert report["fps"] > 0
    assert report["name"] == "seq"
    assert report["attributes"] == ("OCC",)


def test_group_by_attribute():
    reports = [
        {"attributes": ("OCC",), "pr20": 1.0, "sr_auc": 0.8, "sr_at_05": 0.9},
        {"attributes": ("OCC", "SV"), "pr20": 0.5, "sr_auc": 0.4,
         "sr_at_05": 0.5},
        {"attributes": ("SV",), "pr20": 0.0, "sr_auc": 0.0, "sr_at_05": 0.0},
    ]
    occ = group_by_attribute(reports, "OCC")
    assert occ["count"] == 2 and not occ["empty"]
    assert occ["pr20"] == pytest.approx(0.75)
    assert occ["sr_auc"] == pytest.approx(0.6)
    missing = group_by_attribute(reports, "LR")
    assert missing == {"tag": "LR", "count": 0, "empty": True}


def test_emit_plot_data_round_trips(tmp_path):
    rng = np.random.default_rng(5)
    recs = [_record(rng.uniform(0, 50), rng.uniform(0, 1))
            for _ in range(30)]
    rep = summarize(recs)
    ppath, spath = emit_plot_data(rep, str(tmp_path / "plots"), prefix="a_")
    assert ppath.endswith("a_precision.csv")
    with open(ppath) as fh:
        plines = fh.read().splitlines()
    with open(spath) as fh:
        slines = fh.read().splitlines()
    assert len(plines) == 52 and len(slines) == 22
    assert f"PR(20)={rep['pr20']:.3f}" in plines[0]
    assert f"AUC={rep['sr_auc']:.3f}" in slines[0]
    for line, tau, val in zip(plines[1:], PRECISION_THRESHOLDS,
                              rep["precision"]):
        t, v = line.split(",")
        assert float(t) == tau and float(v) == pytest.approx(val, abs=1e-6)
    for line, th, val in zip(slines[1:], SUCCESS_THRESHOLDS, rep["success"]):
        t, v = line.split(",")
        assert float(t) == pytest.approx(th) and \
            float(v) == pytest.approx(val, abs=1e-6)
