"""Weighted-descriptor tracking with an online structured SVM.

Per frame: build the weighted descriptor from the previous patch
weights, pick the translation by a blended structured-SVM score over a
stride-2 candidate grid, refine scale every third frame with Gaussian
box samples, then gate all model updates on a confidence score.  When
the gate passes, patch weights are re-learned by the graph solver at
the new box and the translation/scale classifiers take an online step.

The translation classifier is a budgeted LaRank with a linear kernel;
the scale classifier is a dense margin model trained by a small
variance-reduced stochastic gradient routine.
"""

import dataclasses
import warnings

import numpy as np

from .errors import DegenerateDescriptorError, GeometryError, PatchGraphError
from .frames import apply_plan, rescale_for_min_side
from .geometry import BoundingBox, center_distance, iou
from .graphlearn import solve_variant
from .patches import (DESCRIPTOR_DIM, FrameMaps, INTERIOR_IDS, N_INTERIOR,
                      _size_groups, init_seeds, node_matrix, partition,
                      window_histograms)

FEATURE_DIM = N_INTERIOR * DESCRIPTOR_DIM  # 64 * 32 = 2048


def sigmoid_weights(w, sigma=37.0):
    """Map raw interior node weights to (0, 1) sigmoid weights.

    The 64 weights are normalized to sum to one (uniform fallback when
    all are zero), then passed through ``1 / (1 + exp(-sigma * wbar))``.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (N_INTERIOR,):
        raise ValueError(f"expected {N_INTERIOR} interior weights")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    wbar = w / total if total > 0 else np.full(N_INTERIOR, 1.0 / N_INTERIOR)
    return 1.0 / (1.0 + np.exp(-sigma * wbar))


def weighted_descriptor(X_interior, w_hat):
    """Concatenate weighted interior descriptors into a unit vector.

    Column i of ``X_interior`` is scaled by ``w_hat[i]``; the
    2048-vector is then L2-normalized.
    """
    X_interior = np.asarray(X_interior, dtype=float)
    if X_interior.shape != (DESCRIPTOR_DIM, N_INTERIOR):
        raise ValueError("expected a 32x64 interior descriptor matrix")
    x = (X_interior * np.asarray(w_hat, dtype=float)).T.ravel()
    norm = np.linalg.norm(x)
    if norm == 0:
        raise DegenerateDescriptorError("all-zero weighted descriptor")
    return x / norm


def _weighted_rows(H, w_hat):
    # H: (k, 64, 32) per-cell histograms -> (k, 2048) unit rows
    x = (H * w_hat[None, :, None]).reshape(H.shape[0], -1)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    np.divide(x, norms, out=x, where=norms > 0)
    return x


def _interior_batch(maps, layout, dxs, dys):
    """Per-cell histograms of the layout's interior translated copies.

    Returns array (k, 64, 32); candidates share the layout's cell
    table, shifted by the integer offsets.
    """
    k = len(dxs)
    out = np.empty((k, N_INTERIOR, DESCRIPTOR_DIM))
    pos = {int(n): i for i, n in enumerate(INTERIOR_IDS)}
    for group in _size_groups(layout):
        sel = np.asarray([int(n) for n in group if int(n) in pos])
        if sel.size == 0:
            continue
        ox = (layout.x0[sel][None, :] + np.asarray(dxs)[:, None]).ravel()
        oy = (layout.y0[sel][None, :] + np.asarray(dys)[:, None]).ravel()
        hist = window_histograms(maps, ox, oy, int(layout.pw[sel[0]]),
                                 int(layout.ph[sel[0]]))
        hist = hist.reshape(k, sel.size, DESCRIPTOR_DIM)
        for j, n in enumerate(sel):
            out[:, pos[int(n)], :] = hist[:, j, :]
    return out


def interior_descriptor(maps, box, w_hat):
    """Weighted descriptor of one box (partition + extract + weight)."""
    layout = partition(box)
    H = _interior_batch(maps, layout, [0], [0])
    x = _weighted_rows(H, np.asarray(w_hat, dtype=float))[0]
    if not np.any(x):
        raise DegenerateDescriptorError("all-zero weighted descriptor")
    return x


@dataclasses.dataclass
class _Pattern:
    """Support pattern: candidate descriptors, losses and dual vars."""

    phi: np.ndarray      # (k, 2048) unit rows, row 0 = true box
    loss: np.ndarray     # (k,) task loss, loss[0] = 0
    beta: np.ndarray     # (k,) dual coefficients, sum = 0


class StructuredSVM:
    """Budgeted online structured SVM (LaRank style, linear kernel).

    Maintains the dense weight vector ``h`` alongside per-pattern dual
    coefficients.  ``update`` runs one ProcessNew step on the new
    pattern followed by alternating ProcessOld/Optimize reprocess
    passes; the support budget is enforced by removing the negative
    vector whose removal perturbs ``h`` least, folding its coefficient
    into the pattern's true vector.
    """

    def __init__(self, c=100.0, budget=100, reprocess=10, rng=None):
        if c <= 0 or budget < 2:
            raise ValueError("need c > 0 and budget >= 2")
        self.c = float(c)
        self.budget = int(budget)
        self.reprocess = int(reprocess)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.h = np.zeros(FEATURE_DIM)
        self.patterns = []

    # -- internals ---------------------------------------------------

    def _grads(self, pat):
        # g(y) = -loss(y) - <h, phi(y)> + <h, phi(true)>
        scores = pat.phi @ self.h
        return -pat.loss - scores + scores[0]

    def _smo(self, pat, ip, im):
        if ip == im:
            return
        diff = pat.phi[ip] - pat.phi[im]
        den = float(diff @ diff)
        if den <= 1e-12:
            return
        g = self._grads(pat)
        cap = (self.c if ip == 0 else 0.0) - pat.beta[ip]
        lam = min(max((g[ip] - g[im]) / den, 0.0), cap)
        if lam <= 0.0:
            return
        pat.beta[ip] += lam
        pat.beta[im] -= lam
        self.h += lam * diff

    def _n_support(self):
        return sum(int(np.count_nonzero(p.beta)) for p in self.patterns)

    def _support_patterns(self):
        return [p for p in self.patterns if np.any(p.beta != 0)]

    def _enforce_budget(self):
        while self._n_support() > self.budget:
            best = None
            for p in self.patterns:
                for idx in np.flatnonzero(p.beta < 0):
                    diff = p.phi[0] - p.phi[idx]
                    cost = p.beta[idx] ** 2 * float(diff @ diff)
                    if best is None or cost < best[0]:
                        best = (cost, p, int(idx))
            if best is None:
                break
            _, p, idx = best
            b = p.beta[idx]
            self.h += b * (p.phi[0] - p.phi[idx])
            p.beta[0] += b
            p.beta[idx] = 0.0
        self.patterns = [p for p in self.patterns if np.any(p.beta != 0)]

    def _process_old(self, pat):
        g = self._grads(pat)
        up = np.flatnonzero(pat.beta < 0).tolist()
        if pat.beta[0] < self.c:
            up.append(0)
        if not up:
            return
        ip = up[int(np.argmax(g[up]))]
        im = int(np.argmin(g))
        self._smo(pat, ip, im)

    def _optimize(self, pat):
        active = np.flatnonzero(pat.beta != 0).tolist()
        if 0 not in active:
            active.append(0)
        g = self._grads(pat)
        up = [i for i in active if pat.beta[i] < 0 or
              (i == 0 and pat.beta[0] < self.c)]
        if not up:
            return
        ip = up[int(np.argmax(g[up]))]
        im = active[int(np.argmin(g[active]))]
        self._smo(pat, ip, im)

    # -- public ------------------------------------------------------

    def update(self, phi, loss):
        """One online step on a new pattern.

        ``phi`` rows are candidate descriptors with the true box first;
        ``loss`` the matching task losses (loss[0] = 0).
        """
        phi = np.asarray(phi, dtype=float)
        loss = np.asarray(loss, dtype=float)
        pat = _Pattern(phi=phi, loss=loss, beta=np.zeros(len(loss)))
        self.patterns.append(pat)
        g = self._grads(pat)
        self._smo(pat, 0, int(np.argmin(g)))
        self._enforce_budget()
        for _ in range(self.reprocess):
            sup = self._support_patterns()
            if not sup:
                break
            self._process_old(sup[int(self.rng.integers(len(sup)))])
            self._enforce_budget()
            sup = self._support_patterns()
            if not sup:
                break
            self._optimize(sup[int(self.rng.integers(len(sup)))])
        self._enforce_budget()

    def score(self, x):
        return np.asarray(x) @ self.h

    def positive_svs(self):
        """Unit-normalized support vectors with positive coefficient."""
        rows = [p.phi[i] for p in self.patterns
                for i in np.flatnonzero(p.beta > 0)]
        if not rows:
            return np.empty((0, FEATURE_DIM))
        out = np.asarray(rows)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out


def confidence(x_hat, svm):
    """Mean similarity of ``x_hat`` to the positive support vectors.

    Returns 1.0 when no positive support vector exists yet (the
    first-frame bootstrap).
    """
    pos = svm.positive_svs()
    if pos.shape[0] == 0:
        return 1.0
    return float(np.mean(pos @ np.asarray(x_hat)))


def _polar_offsets(radius, n_radii=5, n_angles=16):
    """Integer polar-grid center offsets, true offset (0, 0) first."""
    offsets = [(0, 0)]
    seen = {(0, 0)}
    for j in range(1, n_radii + 1):
        r = radius * j / n_radii
        for k in range(n_angles):
            ang = 2.0 * np.pi * k / n_angles
            off = (int(round(r * np.cos(ang))), int(round(r * np.sin(ang))))
            if off not in seen:
                seen.add(off)
                offsets.append(off)
    return offsets


def estimate_translation(maps, prev_box, svm, h0, w_hat, omega=0.67,
                         stride=2, window_factor=0.8):
    """Argmax of the blended translation score over a stride grid.

    Candidates share ``prev_box``'s size and sit on a ``stride``-pixel
    grid of center offsets within the square search window of side
    ``window_factor * sqrt(w * h)``.  Exact score ties break toward the
    smaller displacement, then toward row-major grid order.
    """
    layout = partition(prev_box)
    side = window_factor * np.sqrt(prev_box.w * prev_box.h)
    r = max(1, int(side / 2.0))
    cx, cy = prev_box.center
    if (cx + r < 0 or cy + r < 0 or cx - r > maps.w or cy - r > maps.h):
        raise GeometryError("search window lies outside the frame")
    axis = np.arange(-r, r + 1, stride)
    dxs, dys = np.meshgrid(axis, axis)
    dxs = dxs.ravel()
    dys = dys.ravel()
    H = _interior_batch(maps, layout, dxs, dys)
    xs = _weighted_rows(H, np.asarray(w_hat, dtype=float))
    scores = omega * (xs @ svm.h) + (1.0 - omega) * (xs @ h0)
    best = scores.max()
    tied = np.flatnonzero(scores == best)
    disp2 = dxs[tied] ** 2 + dys[tied] ** 2
    pick = tied[np.lexsort((tied, disp2))[0]]
    return prev_box.shifted(float(dxs[pick]), float(dys[pick]))


def sample_scale_candidates(box, rng, frame_w, frame_h, n=100,
                            stds=(0.05, 0.01, 1.0, 1.0)):
    """Gaussian box samples around ``box``; sample 0 is ``box`` itself.

    Scale and aspect multipliers are drawn from N(1, stds[0/1]), the
    center shift from N(0, stds[2/3]); samples are clamped inside the
    frame.
    """
    s_std, a_std, dx_std, dy_std = stds
    out = [box]
    cx, cy = box.center
    for _ in range(n - 1):
        s = max(0.1, 1.0 + s_std * rng.standard_normal())
        a = max(0.1, 1.0 + a_std * rng.standard_normal())
        dx = dx_std * rng.standard_normal()
        dy = dy_std * rng.standard_normal()
        w = max(8.0, s * np.sqrt(a) * box.w)
        h = max(8.0, s / np.sqrt(a) * box.h)
        cand = BoundingBox(cx + dx - w / 2.0, cy + dy - h / 2.0, w, h)
        out.append(cand.clamped_inside(frame_w, frame_h))
    return out


def warp_descriptor(frame, box, w_hat, ref_w, ref_h):
    """Weighted descriptor of ``box`` warped to a reference size.

    The rectangle (clipped to the frame, kept at sub-pixel precision)
    is resampled to ``(ref_w, ref_h)`` with bilinear interpolation and
    described with the standard interior grid.  Warping first makes
    descriptors of different-sized boxes directly comparable: every
    grid cell covers the same fraction of its box, so growing the box
    actually moves content across cells instead of leaving the integer
    cell grid almost unchanged.
    """
    from PIL import Image

    fh, fw = frame.shape[:2]
    x0 = min(max(box.lx, 0.0), fw - 1.0)
    y0 = min(max(box.ly, 0.0), fh - 1.0)
    x1 = max(x0 + 1.0, min(box.lx + box.w, float(fw)))
    y1 = max(y0 + 1.0, min(box.ly + box.h, float(fh)))
    patch = Image.fromarray(np.ascontiguousarray(frame)).resize(
        (ref_w, ref_h), Image.BILINEAR, box=(x0, y0, x1, y1))
    maps = FrameMaps(np.asarray(patch))
    ref_box = BoundingBox(0.0, 0.0, float(ref_w), float(ref_h))
    return interior_descriptor(maps, ref_box, w_hat)


def estimate_scale(frame, box, g, g0, w_hat, rng, ref_size, omega=0.67,
                   n=100, stds=(0.05, 0.01, 1.0, 1.0)):
    """Argmax of the blended scale score over Gaussian box samples."""
    fh, fw = frame.shape[:2]
    cands = sample_scale_candidates(box, rng, fw, fh, n=n, stds=stds)
    best_box, best_score = None, None
    for cand in cands:
        x = warp_descriptor(frame, cand, w_hat, ref_size[0], ref_size[1])
        score = omega * float(g @ x) + (1.0 - omega) * float(g0 @ x)
        if best_score is None or score > best_score:
            best_box, best_score = cand, score
    return best_box


SCALE_FACTORS = tuple(round(0.5 + 0.02 * k, 2) for k in range(51)
                      if round(0.5 + 0.02 * k, 2) != 1.0)


def _scale_objective(g, diffs, losses, xi_s):
    hinge = np.maximum(0.0, losses - diffs @ g)
    return xi_s * float(g @ g) + float(hinge.sum())


def train_scale_classifier(frame, box, w_hat, g, rng, ref_size, xi_s=0.01,
                           epochs=2, step=0.1):
    """Margin-train the scale classifier around ``box``.

    Negative samples rescale ``box`` about its center by the factors
    {0.50..1.50 step 0.02} excluding 1; the loss is 1 - IoU.  Training
    minimizes ``xi_s * ||g||^2 + sum_b max(0, loss_b - <g, x_box - x_b>)``
    with a variance-reduced stochastic gradient: per epoch one full
    gradient snapshot plus one seeded-shuffle pass over the samples.
    The best snapshot iterate is returned, so the objective never
    exceeds its initial value.
    """
    rw, rh = ref_size
    x_true = warp_descriptor(frame, box, w_hat, rw, rh)
    diffs = np.empty((len(SCALE_FACTORS), FEATURE_DIM))
    losses = np.empty(len(SCALE_FACTORS))
    for i, f in enumerate(SCALE_FACTORS):
        cand = box.resized_about_center(f * box.w, f * box.h)
        x = warp_descriptor(frame, cand, w_hat, rw, rh)
        diffs[i] = x_true - x
        losses[i] = 1.0 - iou(box, cand)
    m = len(SCALE_FACTORS)
    g = np.asarray(g, dtype=float).copy()
    best = (_scale_objective(g, diffs, losses, xi_s), g.copy())
    for _ in range(epochs):
        snap = g.copy()
        active = (losses - diffs @ snap) > 0
        full = 2.0 * xi_s * snap - diffs[active].sum(axis=0)
        for i in rng.permutation(m):
            gi = 2.0 * xi_s * g
            if losses[i] - float(diffs[i] @ g) > 0:
                gi = gi - m * diffs[i]
            si = 2.0 * xi_s * snap
            if losses[i] - float(diffs[i] @ snap) > 0:
                si = si - m * diffs[i]
            g -= step * (gi - si + full)
        obj = _scale_objective(g, diffs, losses, xi_s)
        if obj < best[0]:
            best = (obj, g.copy())
    return best[1]


@dataclasses.dataclass
class FrameRecord:
    """Per-frame tracking output in original frame coordinates."""

    frame: int
    box: BoundingBox
    confidence: float
    updated: bool


class PatchGraphTracker:
    """Single-sequence tracking state machine.

    Construct, then :meth:`start` on frame 0 with the initial box, then
    :meth:`step` once per subsequent frame.  All randomness flows from
    the seed, so a full run is bit-reproducible.
    """

    def __init__(self, params=None, variant="full", seed=0, omega=0.67,
                 theta=0.25, sigma=37.0, stride=2, budget=100, c=100.0,
                 reprocess=10, scale_interval=3, n_scale_samples=100,
                 scale_stds=(0.05, 0.01, 1.0, 1.0), xi_s=0.01,
                 svrg_epochs=2, svrg_step=0.1, displacement_trigger=5.0,
                 window_factor=0.8, window_factor_wide=1.0,
                 polar_radii=5, polar_angles=16, alg2_literal=False):
        from .graphlearn import GraphParams

        self.params = params if params is not None else GraphParams()
        self.variant = variant
        self.rng = np.random.default_rng(seed)
        self.omega = omega
        self.theta = theta
        self.sigma = sigma
        self.stride = stride
        self.scale_interval = scale_interval
        self.n_scale_samples = n_scale_samples
        self.scale_stds = tuple(scale_stds)
        self.xi_s = xi_s
        self.svrg_epochs = svrg_epochs
        self.svrg_step = svrg_step
        self.displacement_trigger = displacement_trigger
        self.window_factor = window_factor
        self.window_factor_wide = window_factor_wide
        self.polar_radii = polar_radii
        self.polar_angles = polar_angles
        self.alg2_literal = alg2_literal
        self.svm = StructuredSVM(c=c, budget=budget, reprocess=reprocess,
                                 rng=self.rng)
        self.h0 = None
        self.g = np.zeros(FEATURE_DIM)
        self.g0 = None
        self.w_hat_prev = None
        self.prev_box = None
        self.frame_index = 0
        self._last_disp = 0.0
        self._plan = None
        self._ref_size = None

    # -- helpers -----------------------------------------------------

    def _learn_weights(self, maps, box):
        if self.variant == "wpg_w":
            # ablation: patch weights removed, every node counts alike
            return np.ones(N_INTERIOR), None
        layout = partition(box)
        X = node_matrix(maps, layout)
        seeds = init_seeds(layout)
        sol = solve_variant(X, seeds, self.params, variant=self.variant)
        return sigmoid_weights(sol.w[INTERIOR_IDS], self.sigma), sol

    def _svm_step(self, maps, box, w_hat):
        side = self.window_factor * np.sqrt(box.w * box.h)
        offsets = _polar_offsets(side / 2.0, self.polar_radii,
                                 self.polar_angles)
        layout = partition(box)
        dxs = [o[0] for o in offsets]
        dys = [o[1] for o in offsets]
        H = _interior_batch(maps, layout, dxs, dys)
        phi = _weighted_rows(H, w_hat)
        loss = np.array([1.0 - iou(box, box.shifted(dx, dy))
                         for dx, dy in offsets])
        self.svm.update(phi, loss)

    def _gate(self, conf):
        if self.alg2_literal:
            return conf < self.theta
        return conf > self.theta

    # -- lifecycle ---------------------------------------------------

    def start(self, frame, box):
        """Initialize every model component from the first frame.

        The rescale plan derived from the initial box is reused for the
        whole sequence, so every frame shares one working resolution.
        """
        rframe, rbox, plan = rescale_for_min_side(frame, box)
        self._plan = plan
        self._ref_size = (max(8, int(round(rbox.w))),
                          max(8, int(round(rbox.h))))
        maps = FrameMaps(rframe)
        w_hat, _ = self._learn_weights(maps, rbox)
        self._svm_step(maps, rbox, w_hat)
        self.h0 = self.svm.h.copy()
        self.g = train_scale_classifier(
            rframe, rbox, w_hat, np.zeros(FEATURE_DIM), self.rng,
            self._ref_size, self.xi_s, self.svrg_epochs, self.svrg_step)
        self.g0 = self.g.copy()
        self.w_hat_prev = w_hat
        self.prev_box = box
        self.frame_index = 0
        self._last_disp = 0.0
        return FrameRecord(0, box, 1.0, True)

    def _track_once(self, frame):
        rframe, rbox, plan = apply_plan(frame, self.prev_box, self._plan)
        maps = FrameMaps(rframe)
        wide = self._last_disp > self.displacement_trigger
        factor = self.window_factor_wide if wide else self.window_factor
        b_hat = estimate_translation(
            maps, rbox, self.svm, self.h0, self.w_hat_prev,
            omega=self.omega, stride=self.stride, window_factor=factor)
        scale_frame = self.frame_index % self.scale_interval == 0
        if scale_frame:
            b_star = estimate_scale(
                rframe, b_hat, self.g, self.g0, self.w_hat_prev, self.rng,
                self._ref_size, omega=self.omega, n=self.n_scale_samples,
                stds=self.scale_stds)
        else:
            b_star = b_hat
        x_hat = interior_descriptor(maps, b_star, self.w_hat_prev)
        conf = confidence(x_hat, self.svm)
        updated = bool(self._gate(conf))
        if updated:
            w_hat, _ = self._learn_weights(maps, b_star)
            self._svm_step(maps, b_star, w_hat)
            if scale_frame:
                self.g = train_scale_classifier(
                    rframe, b_star, w_hat, self.g, self.rng,
                    self._ref_size, self.xi_s, self.svrg_epochs,
                    self.svrg_step)
            self.w_hat_prev = w_hat
        self._last_disp = center_distance(rbox, b_star)
        self.prev_box = plan.to_original(b_star)
        return conf, updated

    def step(self, frame):
        """Track one frame; errors keep the previous box and model."""
        self.frame_index += 1
        try:
            conf, updated = self._track_once(frame)
        except PatchGraphError as exc:
            warnings.warn(f"frame {self.frame_index}: {exc}; "
                          "keeping previous box")
            conf, updated = float("nan"), False
        return FrameRecord(self.frame_index, self.prev_box, conf, updated)

    def state_digest(self):
        """Hex digest of the full mutable model state (for tests)."""
        import hashlib

        parts = [self.svm.h, self.h0, self.g, self.g0, self.w_hat_prev,
                 np.asarray(self.prev_box.as_tuple()),
                 np.asarray([self._last_disp, self.frame_index])]
        for p in self.svm.patterns:
            parts.extend([p.beta, p.loss])
        hasher = hashlib.sha256()
        for arr in parts:
            hasher.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        return hasher.hexdigest()


def track_sequence(frames, init_box, **kwargs):
    """Run a tracker over an in-memory frame list.

    Returns the list of :class:`FrameRecord`; record 0 echoes the
    initial box.
    """
    it = iter(frames)
    first = next(it)
    tracker = PatchGraphTracker(**kwargs)
    records = [tracker.start(first, init_box)]
    for frame in it:
        records.append(tracker.step(frame))
    return records
