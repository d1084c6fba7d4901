"""OTB-style benchmark harness: loading, metrics, one-pass evaluation.

Ground truth follows the common convention: one ``x,y,w,h`` box per
line (comma, tab or space separated) with a 1-based pixel origin,
converted to 0-based on load.  Precision counts frames with center
error at or below each threshold; success counts frames with overlap
strictly above each threshold.
"""

import dataclasses
import os
import re
import time

import numpy as np

from .errors import FormatError, InputError
from .frames import list_frame_files, load_sequence
from .geometry import BoundingBox, center_distance, iou

PRECISION_THRESHOLDS = np.arange(51.0)          # 0..50 px
SUCCESS_THRESHOLDS = np.arange(21) / 20.0       # 0..1 step 0.05
PRECISION_REF = 20                               # scalar PR threshold
SUCCESS_REF = 0.5                                # scalar SR threshold

_GT_NAMES = ("groundtruth_rect.txt", "groundtruth.txt")
_SPLIT = re.compile(r"[,\s]+")


@dataclasses.dataclass(frozen=True)
class SequenceSpec:
    """One benchmark sequence: frames on disk plus ground truth."""

    name: str
    image_dir: str
    boxes: tuple
    attributes: tuple = ()

    @property
    def n_frames(self):
        return len(self.boxes)


@dataclasses.dataclass(frozen=True)
class EvalRecord:
    """Per-frame evaluation entry."""

    predicted: BoundingBox
    truth: BoundingBox
    center_error: float
    overlap: float


def _parse_gt_line(line, path, lineno):
    parts = [p for p in _SPLIT.split(line.strip()) if p]
    if len(parts) != 4:
        raise FormatError("expected 4 box fields", path=path, line=lineno)
    try:
        x, y, w, h = (float(p) for p in parts)
    except ValueError as exc:
        raise FormatError(f"bad box number: {exc}", path=path,
                          line=lineno) from exc
    if w <= 0 or h <= 0:
        raise FormatError("box sides must be positive", path=path,
                          line=lineno)
    # 1-based image origin -> 0-based
    return BoundingBox(x - 1.0, y - 1.0, w, h)


def load_otb_sequence(directory):
    """Load a sequence directory in the OTB layout.

    Expects ``groundtruth_rect.txt`` (or ``groundtruth.txt``) next to
    an ``img``/image directory; an optional ``attributes.txt`` sidecar
    carries challenge tags.  The ground-truth line count must match the
    frame count.
    """
    if not os.path.isdir(directory):
        raise InputError(f"sequence directory not found: {directory!r}")
    gt_path = None
    for name in _GT_NAMES:
        cand = os.path.join(directory, name)
        if os.path.isfile(cand):
            gt_path = cand
            break
    if gt_path is None:
        raise FormatError("no ground-truth file", path=directory)
    boxes = []
    with open(gt_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                boxes.append(_parse_gt_line(line, gt_path, lineno))
    if not boxes:
        raise FormatError("empty ground-truth file", path=gt_path)

    img_dir = os.path.join(directory, "img")
    if not os.path.isdir(img_dir):
        img_dir = directory
    n_frames = len(list_frame_files(img_dir))
    if n_frames != len(boxes):
        raise FormatError(
            f"{n_frames} frames but {len(boxes)} ground-truth lines",
            path=gt_path)

    attributes = ()
    attr_path = os.path.join(directory, "attributes.txt")
    if os.path.isfile(attr_path):
        with open(attr_path) as fh:
            attributes = tuple(
                tag for tag in _SPLIT.split(fh.read().strip()) if tag)
    return SequenceSpec(name=os.path.basename(os.path.normpath(directory)),
                        image_dir=img_dir, boxes=tuple(boxes),
                        attributes=attributes)


def make_records(predicted, truths):
    """Pair predicted and ground-truth boxes into EvalRecords."""
    if len(predicted) != len(truths):
        raise InputError("prediction/truth length mismatch")
    return [EvalRecord(p, t, center_distance(p, t), iou(p, t))
            for p, t in zip(predicted, truths)]


def precision_curve(records):
    """Fraction of frames with center error <= tau for tau = 0..50.

    Returns an array of 51 values; the scalar PR score is the value at
    20 px.
    """
    if not records:
        raise InputError("no evaluation records")
    errs = np.array([r.center_error for r in records])
    return (errs[None, :] <= PRECISION_THRESHOLDS[:, None]).mean(axis=1)


def success_curve(records):
    """Fraction of frames with overlap > theta for 21 thresholds.

    Returns (curve, auc) where auc is the mean of the sampled values.
    """
    if not records:
        raise InputError("no evaluation records")
    ovs = np.array([r.overlap for r in records])
    curve = (ovs[None, :] > SUCCESS_THRESHOLDS[:, None]).mean(axis=1)
    return curve, float(curve.mean())


def summarize(records):
    """Scalar metrics bundle for one record list."""
    pcurve = precision_curve(records)
    scurve, auc = success_curve(records)
    return {
        "pr20": float(pcurve[PRECISION_REF]),
        "sr_auc": auc,
        "sr_at_05": float(scurve[SUCCESS_THRESHOLDS == SUCCESS_REF][0]),
        "precision": pcurve,
        "success": scurve,
        "n_frames": len(records),
    }


def run_ope(spec, tracker_factory):
    """One-pass evaluation of a sequence.

    ``tracker_factory(frame0, box0)`` must return an object whose
    ``step(frame)`` yields a record with a ``box`` attribute; the
    tracker is initialized once from the first ground-truth box and
    never reinitialized.

    Returns
    -------
    (records, report) : EvalRecords plus a metrics dict including fps.
    """
    frames = load_sequence(spec.image_dir)
    if len(frames) != spec.n_frames:
        raise InputError("frame/ground-truth count mismatch")
    t0 = time.perf_counter()
    tracker = tracker_factory(frames[0], spec.boxes[0])
    predicted = [spec.boxes[0]]
    for frame in frames[1:]:
        predicted.append(tracker.step(frame).box)
    elapsed = time.perf_counter() - t0
    records = make_records(predicted, list(spec.boxes))
    report = summarize(records)
    report["fps"] = len(frames) / elapsed if elapsed > 0 else float("inf")
    report["name"] = spec.name
    report["attributes"] = spec.attributes
    return records, report


def group_by_attribute(reports, tag):
    """Mean PR/SR over the reports carrying ``tag``.

    Returns a dict with the group size; an absent tag yields
    ``{"tag": tag, "count": 0, "empty": True}`` so callers can flag it.
    """
    group = [r for r in reports if tag in r.get("attributes", ())]
    if not group:
        return {"tag": tag, "count": 0, "empty": True}
    return {
        "tag": tag,
        "count": len(group),
        "empty": False,
        "pr20": float(np.mean([r["pr20"] for r in group])),
        "sr_auc": float(np.mean([r["sr_auc"] for r in group])),
        "sr_at_05": float(np.mean([r["sr_at_05"] for r in group])),
    }


def emit_plot_data(report, out_dir, prefix=""):
    """Write precision/success curves as CSV files.

    Each file has one header line whose trailing comment is the legend
    with the scalar score (three decimals), followed by
    ``threshold,value`` data lines.
    """
    os.makedirs(out_dir, exist_ok=True)
    ppath = os.path.join(out_dir, f"{prefix}precision.csv")
    spath = os.path.join(out_dir, f"{prefix}success.csv")
    with open(ppath, "w") as fh:
        fh.write(f"threshold,precision # PR(20)={report['pr20']:.3f}\n")
        for tau, val in zip(PRECISION_THRESHOLDS, report["precision"]):
            fh.write(f"{tau:.0f},{val:.6f}\n")
    with open(spath, "w") as fh:
        fh.write(f"threshold,success # AUC={report['sr_auc']:.3f} "
                 f"SR(0.5)={report['sr_at_05']:.3f}\n")
        for th, val in zip(SUCCESS_THRESHOLDS, report["success"]):
            fh.write(f"{th:.2f},{val:.6f}\n")
    return ppath, spath
