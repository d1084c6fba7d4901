"""Patch grids, color/gradient histogram descriptors and seed labels.

A bounding box is partitioned into an 8x8 interior grid plus a
one-patch ring, 10x10 = 100 nodes in row-major order.  Every node
yields a 32-dimensional descriptor: an 8-bin histogram per RGB channel
plus an 8-bin unsigned gradient-orientation histogram weighted by
gradient magnitude, each block L1-normalized.

Rectangles that stick out of the frame are histogrammed over their
in-frame (clipped) area only; gradient gathers see zero magnitude
outside the frame.  A rectangle with no in-frame pixel falls back to
edge clamping and describes its nearest in-frame row/column with a
zero gradient block.
"""

import dataclasses

import numpy as np

from .errors import GeometryError
from .geometry import BoundingBox
from .graphlearn import SeedAssignment

GRID = 10                  # nodes per side, interior 8 + ring
N_NODES = GRID * GRID
INTERIOR = 8
N_INTERIOR = INTERIOR * INTERIOR
DESCRIPTOR_DIM = 32
N_BINS = 8

_GX = np.tile(np.arange(GRID), GRID)
_GY = np.repeat(np.arange(GRID), GRID)
INTERIOR_MASK = (_GX >= 1) & (_GX <= 8) & (_GY >= 1) & (_GY <= 8)
INTERIOR_IDS = np.flatnonzero(INTERIOR_MASK)
RING_IDS = np.flatnonzero(~INTERIOR_MASK)


def round_half_up(v):
    """Round to nearest integer, halves away from zero-point-five up."""
    return int(np.floor(v + 0.5))


@dataclasses.dataclass(frozen=True)
class PatchLayout:
    """Rasterized 10x10 node grid for one bounding box.

    ``x0, y0, pw, ph`` give each node's pixel rectangle in frame
    coordinates; nodes are row-major over the grid.  All boxes with the
    same rounded size share the same cell table up to translation,
    which lets candidate scoring batch histogram gathers.
    """

    box: BoundingBox
    bx: int
    by: int
    bw: int
    bh: int
    cell_w: int
    cell_h: int
    x0: np.ndarray
    y0: np.ndarray
    pw: np.ndarray
    ph: np.ndarray

    def centers(self):
        """Real-valued patch centers, shape (100, 2) as (cx, cy)."""
        return np.stack([self.x0 + self.pw / 2.0,
                         self.y0 + self.ph / 2.0], axis=1)

    def shifted(self, dx, dy):
        """Same layout translated by integer (dx, dy) pixels."""
        return dataclasses.replace(
            self, box=self.box.shifted(dx, dy),
            bx=self.bx + dx, by=self.by + dy,
            x0=self.x0 + dx, y0=self.y0 + dy)


def _axis_cells(origin, total, cell):
    # 10 cells along one axis: ring, 8 interior (last absorbs remainder), ring
    starts = np.empty(GRID, dtype=np.int64)
    sizes = np.empty(GRID, dtype=np.int64)
    starts[0] = origin - cell
    sizes[0] = cell
    for k in range(INTERIOR):
        starts[1 + k] = origin + k * cell
        sizes[1 + k] = cell
    sizes[INTERIOR] = total - (INTERIOR - 1) * cell
    starts[GRID - 1] = origin + total
    sizes[GRID - 1] = cell
    return starts, sizes


def partition(box):
    """Partition ``box`` into the 10x10 patch grid.

    The interior nominal patch size is (floor(w/8), floor(h/8)); the
    eighth interior row/column absorbs the remainder pixels, and the
    ring reuses the nominal size.

    Raises
    ------
    GeometryError
        If either side of the box is below 8 px.
    """
    if box.w < INTERIOR or box.h < INTERIOR:
        raise GeometryError(
            f"box {box.as_tuple()} smaller than {INTERIOR}x{INTERIOR} px")
    bx = round_half_up(box.lx)
    by = round_half_up(box.ly)
    bw = max(INTERIOR, round_half_up(box.w))
    bh = max(INTERIOR, round_half_up(box.h))
    cw = bw // INTERIOR
    ch = bh // INTERIOR
    xs, ws = _axis_cells(bx, bw, cw)
    ys, hs = _axis_cells(by, bh, ch)
    return PatchLayout(
        box=box, bx=bx, by=by, bw=bw, bh=bh, cell_w=cw, cell_h=ch,
        x0=xs[_GX], y0=ys[_GY], pw=ws[_GX], ph=hs[_GY])


class FrameMaps:
    """Per-frame lookup maps shared by every histogram gather.

    Color maps hold the 8-level quantization (value >> 5) of each
    channel.  Gradient maps hold the orientation bin and magnitude of
    clamped central differences on intensity, padded by one pixel of
    zero magnitude so out-of-frame gathers see the gradient of the
    edge-replicated image.  Bin 0 collects near-horizontal gradients
    (vertical edges).
    """

    def __init__(self, frame):
        frame = np.asarray(frame)
        if frame.ndim != 3 or frame.shape[2] != 3:
            raise ValueError("frame must be (h, w, 3)")
        h, w = frame.shape[:2]
        self.h = h
        self.w = w
        # one-pixel replicate pad makes color and gradient maps share indexing
        cbins = (frame >> 5).astype(np.uint8)
        cbins = np.pad(cbins, ((1, 1), (1, 1), (0, 0)), mode="edge")
        self.color_bins = np.ascontiguousarray(cbins)

        intensity = frame.astype(np.float64).mean(axis=2)
        right = np.empty_like(intensity)
        right[:, :-1] = intensity[:, 1:]
        right[:, -1] = intensity[:, -1]
        left = np.empty_like(intensity)
        left[:, 1:] = intensity[:, :-1]
        left[:, 0] = intensity[:, 0]
        gx = (right - left) / 2.0
        down = np.empty_like(intensity)
        down[:-1] = intensity[1:]
        down[-1] = intensity[-1]
        up = np.empty_like(intensity)
        up[1:] = intensity[:-1]
        up[0] = intensity[0]
        gy = (down - up) / 2.0

        mag = np.hypot(gx, gy)
        ang = np.mod(np.arctan2(gy, gx), np.pi)
        gbin = np.minimum((ang * (N_BINS / np.pi)).astype(np.int64),
                          N_BINS - 1).astype(np.uint8)
        self.grad_bin = np.pad(gbin, 1, mode="constant")
        self.grad_mag = np.pad(mag, 1, mode="constant")
        self._cflat = [np.ascontiguousarray(self.color_bins[:, :, c]).ravel()
                       for c in range(3)]
        self._gbflat = self.grad_bin.ravel()
        self._gmflat = self.grad_mag.ravel()


def window_histograms(maps, ox, oy, cw, ch):
    """Descriptors of same-size rectangles at many origins.

    Rectangles may stick out of the frame.  Color histograms count the
    in-frame pixels only and normalize by that clipped area; a
    rectangle with no in-frame pixel at all falls back to the
    edge-clamped gather, which sees its nearest in-frame row/column.
    Gradient gathers hit zero magnitude outside the frame either way.

    Parameters
    ----------
    maps : FrameMaps
    ox, oy : int arrays, shape (k,)
        Rectangle origins in frame coordinates.
    cw, ch : int
        Shared rectangle size, both >= 1.

    Returns
    -------
    array, shape (k, 32) with L1-normalized blocks in R, G, B,
    gradient order.  The gradient block may be all-zero.
    """
    ox = np.asarray(ox, dtype=np.int64)
    oy = np.asarray(oy, dtype=np.int64)
    k = ox.shape[0]
    stride = maps.w + 2
    xc = ox[:, None] + np.arange(cw)
    yc = oy[:, None] + np.arange(ch)
    # +1 maps frame coordinate -1 (the replicate border) to padded index 0
    xi = np.clip(xc, -1, maps.w) + 1
    yi = np.clip(yc, -1, maps.h) + 1
    flat = (yi[:, :, None] * stride + xi[:, None, :]).reshape(k, -1)
    ids_base = (np.arange(k, dtype=np.int64) * N_BINS)[:, None]

    xin = (xc >= 0) & (xc < maps.w)
    yin = (yc >= 0) & (yc < maps.h)
    mask = (yin[:, :, None] & xin[:, None, :]).reshape(k, -1).astype(float)
    areas = mask.sum(axis=1)
    off = areas <= 0.0
    if off.any():
        # fully off-frame: every gather clamps to the nearest edge pixels
        mask[off] = 1.0
        areas[off] = float(cw * ch)

    out = np.empty((k, DESCRIPTOR_DIM))
    for c in range(3):
        vals = maps._cflat[c][flat]
        counts = np.bincount((vals + ids_base).ravel(), weights=mask.ravel(),
                             minlength=k * N_BINS).reshape(k, N_BINS)
        out[:, c * N_BINS:(c + 1) * N_BINS] = counts / areas[:, None]
    gvals = maps._gbflat[flat].astype(np.int64)
    gmag = maps._gmflat[flat]
    ghist = np.bincount((gvals + ids_base).ravel(), weights=gmag.ravel(),
                        minlength=k * N_BINS).reshape(k, N_BINS)
    gsum = ghist.sum(axis=1, keepdims=True)
    np.divide(ghist, gsum, out=ghist, where=gsum > 0)
    out[:, 3 * N_BINS:] = ghist
    return out


def describe_patch(frame, rect, maps=None):
    """32-vector descriptor of one pixel rectangle.

    ``rect`` is (x0, y0, w, h) in pixels with w, h >= 1; coordinates
    may stick out of the frame (clipped-area semantics, see
    :func:`window_histograms`).
    """
    x0, y0, w, h = rect
    if w < 1 or h < 1:
        raise GeometryError(f"patch rectangle {rect} has empty area")
    if maps is None:
        maps = FrameMaps(frame)
    return window_histograms(maps, np.array([int(x0)]), np.array([int(y0)]),
                             int(w), int(h))[0]


def _size_groups(layout):
    # at most four distinct rectangle sizes per layout
    sizes = np.stack([layout.pw, layout.ph], axis=1)
    _, inverse = np.unique(sizes, axis=0, return_inverse=True)
    for g in range(inverse.max() + 1):
        yield np.flatnonzero(inverse == g)


def node_matrix(maps, layout, node_ids=None):
    """Descriptor matrix of the layout's nodes, column i = node i."""
    if node_ids is None:
        node_ids = np.arange(N_NODES)
    X = np.empty((DESCRIPTOR_DIM, len(node_ids)))
    pos = {int(n): i for i, n in enumerate(node_ids)}
    for group in _size_groups(layout):
        sel = [int(n) for n in group if int(n) in pos]
        if not sel:
            continue
        sel = np.asarray(sel)
        hist = window_histograms(
            maps, layout.x0[sel], layout.y0[sel],
            int(layout.pw[sel[0]]), int(layout.ph[sel[0]]))
        for row, n in enumerate(sel):
            X[:, pos[int(n)]] = hist[row]
    return X


def feature_matrix(frame, box, maps=None):
    """Assemble the 32x100 patch feature matrix for ``box``.

    Returns
    -------
    (X, layout) : feature matrix with row-major node columns, layout.
    """
    layout = partition(box)
    if maps is None:
        maps = FrameMaps(frame)
    return node_matrix(maps, layout), layout


def init_seeds(layout):
    """Seed labels from shrunk-box geometry.

    Interior nodes whose patch center falls inside the box shrunk by
    20% per side are foreground seeds (r = 1); all 36 ring nodes are
    background seeds; remaining interior nodes are non-determined.
    """
    shrunk = layout.box.shrunk(0.2)
    centers = layout.centers()
    inside = np.array([shrunk.contains_point(cx, cy) for cx, cy in centers])
    r = np.zeros(N_NODES)
    gamma = np.zeros(N_NODES)
    fg = INTERIOR_MASK & inside
    if not fg.any():
        raise GeometryError("no interior patch center falls in the shrunk box")
    r[fg] = 1.0
    gamma[fg] = 1.0
    gamma[~INTERIOR_MASK] = 1.0
    return SeedAssignment(r=r, gamma=gamma)
