"""From pixels to the weighted box descriptor, one stage at a time.

A tracked box is cut into a 10x10 grid of patches: the 8x8 interior
carries the object, the 36-node ring samples surrounding background.
Each patch gets a 32-bin color + gradient histogram; learned per-patch
weights then emphasize the reliable patches inside the box descriptor.
"""

import numpy as np

from patchgraph import (GraphParams, sigmoid_weights, solve_variant,
                        weighted_descriptor)
from patchgraph.geometry import BoundingBox
from patchgraph.patches import (FrameMaps, INTERIOR_IDS, INTERIOR_MASK,
                                N_NODES, feature_matrix, init_seeds,
                                partition)
from patchgraph.synthetic import make_static_sequence
from patchgraph.tracker import interior_descriptor


def main():
    frames, boxes = make_static_sequence(n_frames=1)
    frame, box = frames[0], boxes[0]
    print(f"frame {frame.shape[1]}x{frame.shape[0]}, target box "
          f"{box.w:.0f}x{box.h:.0f} at ({box.lx:.0f}, {box.ly:.0f})")

    layout = partition(box)
    print(f"grid: {N_NODES} patches of {layout.cell_w}x{layout.cell_h} px, "
          f"interior {INTERIOR_MASK.sum()}, ring {(~INTERIOR_MASK).sum()}")

    X, _ = feature_matrix(frame, box)
    sums = X.sum(axis=0)
    print(f"feature matrix {X.shape[0]}x{X.shape[1]}, "
          f"column sums {sums.min():.3f}..{sums.max():.3f}")

    seeds = init_seeds(layout)
    print(f"seeds: {int((seeds.r > 0).sum())} foreground, "
          f"{int(((seeds.gamma > 0) & (seeds.r == 0)).sum())} background, "
          f"{int((seeds.gamma == 0).sum())} free")

    sol = solve_variant(X, seeds, GraphParams(), variant="full")
    w_int = sol.w[INTERIOR_MASK]
    w_hat = sigmoid_weights(w_int)
    print(f"interior weights {w_int.min():.3f}..{w_int.max():.3f} -> "
          f"sigmoid {w_hat.min():.3f}..{w_hat.max():.3f}")

    x_hat = weighted_descriptor(X[:, INTERIOR_IDS], w_hat)
    flat = weighted_descriptor(X[:, INTERIOR_IDS], np.ones_like(w_hat))
    print(f"box descriptor dim {x_hat.size}, norm {np.linalg.norm(x_hat):.3f}")
    print(f"cosine(weighted, unweighted) = {float(x_hat @ flat):.4f}")

    # shifting the box changes the descriptor; that contrast is what the
    # translation stage scores
    maps = FrameMaps(frame)
    shifted = interior_descriptor(
        maps, BoundingBox(box.lx + 8, box.ly, box.w, box.h), w_hat)
    print(f"cosine(weighted, shifted 8px) = {float(x_hat @ shifted):.4f}")


if __name__ == "__main__":
    main()
