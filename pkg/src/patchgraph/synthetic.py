"""Seeded synthetic data: descriptor-shaped matrices and rendered
tracking sequences.  Used by the demos and the test-suite; everything is
deterministic given the seed.
"""

import numpy as np
from PIL import Image

from .geometry import BoundingBox
from .graphlearn import SeedAssignment


def two_cluster_instance(seed, d=32, n_fg_seed=16, n_bg_seed=36, n_free=48,
                         noise=0.05, dominant=0.78, n_anchor=6,
                         minor_conc=0.5, mix_conc=0.8):
    """Descriptor-shaped two-cluster matrix with seed labels.

    Each cluster owns one dominant bin per 8-entry histogram block
    (carrying ``dominant`` of the block mass, like a strongly textured
    patch) plus ``n_anchor`` anchor columns that vary the minor bins.
    Cluster members are convex anchor mixtures with additive noise, so
    every column is exactly representable by its cluster mates up to the
    noise while the two clusters stay well separated.  The free
    (non-determined) nodes split evenly between the clusters.

    Returns
    -------
    X : array, shape (d, n)
    seeds : SeedAssignment
        ``r = 1`` on foreground seeds, ``gamma = 1`` on all seeds.
    fg_mask : bool array, shape (n,)
        True cluster membership of every node.
    free_mask : bool array, shape (n,)
        Non-determined nodes.
    """
    if d % 8 != 0:
        raise ValueError("d must be a multiple of the 8-bin block size")
    if not 0.0 < dominant < 1.0:
        raise ValueError("dominant must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    n_blocks = d // 8
    n_free_fg = n_free // 2
    n = n_fg_seed + n_bg_seed + n_free

    def cluster_anchors():
        dom_bins = rng.integers(0, 8, size=n_blocks)
        anchors = np.empty((n_anchor, d))
        for a in range(n_anchor):
            blocks = rng.dirichlet(np.full(8, minor_conc), size=n_blocks)
            blocks *= 1.0 - dominant
            blocks[np.arange(n_blocks), dom_bins] += dominant
            anchors[a] = blocks.ravel()
        return anchors

    anchors_fg = cluster_anchors()
    anchors_bg = cluster_anchors()

    def draw(anchors, count):
        weights = rng.dirichlet(np.full(n_anchor, mix_conc), size=count)
        cols = weights @ anchors
        if noise > 0:
            cols = np.clip(cols + rng.normal(0.0, noise, cols.shape), 0.0, None)
        # renormalize every 8-entry block to unit mass, like histogram blocks
        blocks = cols.reshape(count, n_blocks, 8)
        sums = blocks.sum(axis=2, keepdims=True)
        sums = np.where(sums > 0, sums, 1.0)
        return (blocks / sums).reshape(count, d).T

    fg_mask = np.zeros(n, dtype=bool)
    free_mask = np.zeros(n, dtype=bool)
    fg_mask[:n_fg_seed] = True
    fg_mask[n_fg_seed + n_bg_seed:n_fg_seed + n_bg_seed + n_free_fg] = True
    free_mask[n_fg_seed + n_bg_seed:] = True

    X = np.empty((d, n))
    X[:, fg_mask] = draw(anchors_fg, int(fg_mask.sum()))
    X[:, ~fg_mask] = draw(anchors_bg, int((~fg_mask).sum()))

    r = np.zeros(n)
    gamma = np.zeros(n)
    r[:n_fg_seed] = 1.0
    gamma[:n_fg_seed + n_bg_seed] = 1.0
    return X, SeedAssignment(r=r, gamma=gamma), fg_mask, free_mask


def _smooth(img, passes=2):
    """Cheap box blur with edge clamping, channelwise."""
    out = img.astype(float)
    for _ in range(passes):
        padded = np.pad(out, ((1, 1), (1, 1), (0, 0)), mode="edge")
        out = (
            padded[:-2, :-2] + padded[:-2, 1:-1] + padded[:-2, 2:]
            + padded[1:-1, :-2] + padded[1:-1, 1:-1] + padded[1:-1, 2:]
            + padded[2:, :-2] + padded[2:, 1:-1] + padded[2:, 2:]
        ) / 9.0
    return out


def _texture(rng, h, w, palette, cell=4):
    """Blocky random texture drawn from a palette of RGB anchors."""
    gh, gw = -(-h // cell), -(-w // cell)
    picks = rng.integers(0, len(palette), size=(gh, gw))
    base = np.asarray(palette, dtype=float)[picks]
    base = np.repeat(np.repeat(base, cell, axis=0), cell, axis=1)[:h, :w]
    base += rng.normal(0.0, 12.0, size=base.shape)
    return np.clip(base, 0, 255)


def _background(rng, h, w, clutter=True):
    bg = _smooth(rng.uniform(40, 215, size=(h, w, 3)), passes=3)
    if clutter:
        # scattered distractor rectangles with target-like statistics
        for _ in range(24):
            rw = int(rng.integers(12, 48))
            rh = int(rng.integers(12, 48))
            x = int(rng.integers(0, max(1, w - rw)))
            y = int(rng.integers(0, max(1, h - rh)))
            palette = rng.uniform(30, 225, size=(3, 3))
            bg[y:y + rh, x:x + rw] = _texture(rng, rh, rw, palette)
    return bg


def make_linear_sequence(seed=7, n_frames=100, frame_h=160, frame_w=480,
                         target=60, speed=3.0, start=(24.0, 50.0),
                         occlusion=(45, 55), occlusion_frac=0.3,
                         clutter=True):
    """Textured square target moving on a straight line over clutter.

    ``occlusion`` gives the half-open frame range where an occluder is
    pasted over the left ``occlusion_frac`` of the target.  Returns
    (frames, boxes) with frames as uint8 RGB arrays and ground-truth
    boxes in pixel coordinates.
    """
    rng = np.random.default_rng(seed)
    bg = _background(rng, frame_h, frame_w, clutter=clutter)
    palette = [(220, 40, 40), (245, 200, 60), (150, 20, 90), (250, 120, 30)]
    tex = _texture(rng, target, target, palette)
    occ = _texture(rng, target, target, [(70, 110, 80), (90, 140, 100)])

    frames = []
    boxes = []
    for t in range(n_frames):
        fr = bg.copy()
        x = start[0] + speed * t
        y = start[1]
        xi, yi = int(round(x)), int(round(y))
        fr[yi:yi + target, xi:xi + target] = tex
        if occlusion is not None and occlusion[0] <= t < occlusion[1]:
            cover = int(occlusion_frac * target)
            fr[yi:yi + target, xi:xi + cover] = occ[:, :cover]
        frames.append(np.clip(fr, 0, 255).astype(np.uint8))
        boxes.append(BoundingBox(x, y, float(target), float(target)))
    return frames, boxes


def make_zoom_sequence(seed=11, n_frames=60, frame_h=240, frame_w=320,
                       start_size=60, growth=2.0, hold=12):
    """Static-centre target whose side grows by ``growth``, then holds.

    The side ramps linearly over the first ``n_frames - hold`` frames
    and stays at its final size for the last ``hold`` frames.
    """
    rng = np.random.default_rng(seed)
    bg = _background(rng, frame_h, frame_w, clutter=False)
    palette = [(220, 40, 40), (245, 200, 60), (150, 20, 90), (30, 60, 200)]
    hi = 4 * start_size
    # cell size chosen so the texture drawn at start_size has 4 px cells
    tex_hi = _texture(rng, hi, hi, palette, cell=16).astype(np.uint8)
    cx, cy = frame_w / 2.0, frame_h / 2.0
    ramp = max(1, n_frames - 1 - hold)

    frames = []
    boxes = []
    for t in range(n_frames):
        f = 1.0 + (growth - 1.0) * min(t, ramp) / ramp
        side = start_size * f
        px = int(round(side))
        img = Image.fromarray(tex_hi).resize((px, px), Image.BILINEAR)
        fr = bg.copy()
        x = cx - side / 2.0
        y = cy - side / 2.0
        xi, yi = int(round(x)), int(round(y))
        fr[yi:yi + px, xi:xi + px] = np.asarray(img, dtype=float)
        frames.append(np.clip(fr, 0, 255).astype(np.uint8))
        boxes.append(BoundingBox(x, y, side, side))
    return frames, boxes


def make_static_sequence(seed=3, n_frames=10, frame_h=160, frame_w=240,
                         target=60):
    """Identical frames; the target never moves."""
    frames, boxes = make_linear_sequence(
        seed=seed, n_frames=1, frame_h=frame_h, frame_w=frame_w,
        target=target, speed=0.0, start=(90.0, 50.0), occlusion=None,
        clutter=False)
    return [frames[0].copy() for _ in range(n_frames)], [boxes[0]] * n_frames


def write_otb_sequence(root, frames, boxes, attributes=None):
    """Save a sequence in the on-disk layout the benchmark loader reads.

    Images go to ``root/img/%04d.png``; ground truth is written with
    1-based corners, one ``x,y,w,h`` line per frame.
    """
    import os

    img_dir = os.path.join(root, "img")
    os.makedirs(img_dir, exist_ok=True)
    for i, fr in enumerate(frames):
        Image.fromarray(fr).save(os.path.join(img_dir, f"{i + 1:04d}.png"))
    with open(os.path.join(root, "groundtruth_rect.txt"), "w", encoding="utf-8") as fh:
        for b in boxes:
            fh.write(f"{b.lx + 1:.2f},{b.ly + 1:.2f},{b.w:.2f},{b.h:.2f}\n")
    if attributes:
        with open(os.path.join(root, "attributes.txt"), "w", encoding="utf-8") as fh:
            fh.write(" ".join(attributes) + "\n")
    return root
