"""Axis-aligned boxes and overlap measures.

Boxes are stored as ``(lx, ly, w, h)`` with the origin at the top-left
corner and real-valued coordinates.  Rasterization to pixel windows is
deferred to feature extraction.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundingBox:
    lx: float
    ly: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")

    @property
    def center(self):
        return (self.lx + 0.5 * self.w, self.ly + 0.5 * self.h)

    @property
    def area(self):
        return self.w * self.h

    def shifted(self, dx, dy):
        return BoundingBox(self.lx + dx, self.ly + dy, self.w, self.h)

    def scaled(self, s):
        """All four coordinates multiplied by ``s`` (frame rescaling)."""
        return BoundingBox(self.lx * s, self.ly * s, self.w * s, self.h * s)

    def resized_about_center(self, new_w, new_h):
        cx, cy = self.center
        return BoundingBox(cx - 0.5 * new_w, cy - 0.5 * new_h, new_w, new_h)

    def shrunk(self, margin=0.2):
        """Central region: offsets by ``margin`` of each side, keeps 1 - 2*margin."""
        return BoundingBox(
            self.lx + margin * self.w,
            self.ly + margin * self.h,
            (1.0 - 2.0 * margin) * self.w,
            (1.0 - 2.0 * margin) * self.h,
        )

    def contains_point(self, x, y):
        """Half-open membership test: lx <= x < lx + w and likewise for y."""
        return (self.lx <= x < self.lx + self.w) and (self.ly <= y < self.ly + self.h)

    def intersects_frame(self, frame_w, frame_h):
        return (
            self.lx < frame_w
            and self.ly < frame_h
            and self.lx + self.w > 0
            and self.ly + self.h > 0
        )

    def clamped_inside(self, frame_w, frame_h):
        """Translate (and only if oversized, shrink) the box into the frame."""
        w = min(self.w, float(frame_w))
        h = min(self.h, float(frame_h))
        lx = min(max(self.lx, 0.0), frame_w - w)
        ly = min(max(self.ly, 0.0), frame_h - h)
        return BoundingBox(lx, ly, w, h)

    def as_tuple(self):
        return (self.lx, self.ly, self.w, self.h)


def iou(a, b):
    """Intersection-over-union of two boxes; 0 when disjoint."""
    x0 = max(a.lx, b.lx)
    y0 = max(a.ly, b.ly)
    x1 = min(a.lx + a.w, b.lx + b.w)
    y1 = min(a.ly + a.h, b.ly + b.h)
    iw = max(0.0, x1 - x0)
    ih = max(0.0, y1 - y0)
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def center_distance(a, b):
    ax, ay = a.center
    bx, by = b.center
    return float(np.hypot(ax - bx, ay - by))
