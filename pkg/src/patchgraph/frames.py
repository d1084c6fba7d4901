"""Sequence loading and the minimum-side rescaling rule.

Frames are plain ``uint8`` RGB arrays of shape ``(height, width, 3)``.
Tracking operates on a rescaled copy of each frame chosen so the
tracked box has a minimum side of 32 pixels; results are mapped back
to original coordinates through the recorded :class:`ScalePlan`.
"""

import dataclasses
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, GeometryError, InputError
from .geometry import BoundingBox

MIN_SIDE = 32.0

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif")


@dataclasses.dataclass(frozen=True)
class ScalePlan:
    """Record of the rescaling applied to a frame/box pair.

    ``scale`` multiplies original coordinates to give working
    coordinates; :meth:`to_original` inverts it.
    """

    scale: float
    min_side: float = MIN_SIDE

    def apply(self, box):
        return box.scaled(self.scale)

    def to_original(self, box):
        return box.scaled(1.0 / self.scale)


def _decode_image(path):
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeError(f"cannot decode image file {path!r}: {exc}") from exc


def list_frame_files(directory, pattern=None):
    """Image files under ``directory`` in lexicographic order.

    ``pattern`` is an ``fnmatch`` glob applied to the file name; when
    omitted, any file with a common image extension matches.
    """
    import fnmatch

    if not os.path.isdir(directory):
        raise InputError(f"sequence directory not found: {directory!r}")
    names = sorted(os.listdir(directory))
    picked = []
    for name in names:
        full = os.path.join(directory, name)
        if not os.path.isfile(full):
            continue
        if pattern is not None:
            if fnmatch.fnmatch(name, pattern):
                picked.append(full)
        elif name.lower().endswith(IMAGE_EXTENSIONS):
            picked.append(full)
    return picked


def load_sequence(directory, pattern=None):
    """Load every frame of a sequence directory, in filename order.

    Grayscale inputs are replicated to three channels.  Raises
    :class:`InputError` for a missing directory or an empty sequence
    and :class:`DecodeError` (naming the file) for undecodable images.

    Returns
    -------
    list of ndarray, each ``uint8`` of shape (h, w, 3).
    """
    files = list_frame_files(directory, pattern)
    if not files:
        raise InputError(f"no frames found in {directory!r}")
    return [_decode_image(path) for path in files]


def iter_sequence(directory, pattern=None):
    """Generator twin of :func:`load_sequence` for long sequences."""
    files = list_frame_files(directory, pattern)
    if not files:
        raise InputError(f"no frames found in {directory!r}")
    for path in files:
        yield _decode_image(path)


def rescale_for_min_side(frame, box):
    """Shrink ``frame`` so ``box`` has minimum side 32 px.

    Boxes already at or below the minimum are left alone (scale 1);
    upscaling never happens.  Bilinear resampling.  The returned plan
    can be replayed on later frames with :func:`apply_plan` so a whole
    sequence shares one working resolution.

    Returns
    -------
    (frame, box, plan) : working frame, working box, ScalePlan.

    Raises
    ------
    GeometryError
        If ``box`` does not intersect the frame at all.
    """
    side = min(box.w, box.h)
    scale = 1.0 if side <= MIN_SIDE else MIN_SIDE / side
    return apply_plan(frame, box, ScalePlan(scale))


def apply_plan(frame, box, plan):
    """Resample ``frame`` and map ``box`` under a fixed :class:`ScalePlan`.

    Raises
    ------
    GeometryError
        If ``box`` does not intersect the frame at all.
    """
    frame = np.asarray(frame)
    h, w = frame.shape[:2]
    if not box.intersects_frame(w, h):
        raise GeometryError(
            f"box {box.as_tuple()} lies outside the {w}x{h} frame")
    if plan.scale == 1.0:
        return frame, box, plan
    new_w = max(1, int(round(w * plan.scale)))
    new_h = max(1, int(round(h * plan.scale)))
    img = Image.fromarray(frame)
    resized = np.asarray(img.resize((new_w, new_h), Image.BILINEAR),
                         dtype=np.uint8)
    return resized, plan.apply(box), plan
