"""Learn patch weights and an affinity graph on clustered toy data.

Builds a two-cluster feature matrix where a handful of columns carry
known labels (seeds) and the rest are free, runs the joint solver, and
prints what came out: the convergence trace, the affinity support, and
how far apart the learned weights of the two clusters land.
"""

import numpy as np

from patchgraph import GraphParams, solve_variant
from patchgraph.synthetic import two_cluster_instance


def main():
    X, seeds, fg_mask, free_mask = two_cluster_instance(
        seed=0, d=32, noise=0.05)
    n = X.shape[1]
    print(f"instance: {X.shape[0]} features x {n} patches, "
          f"{int(seeds.gamma.sum())} seeds, {int(free_mask.sum())} free")

    params = GraphParams()
    traces = []
    sol = solve_variant(X, seeds, params, variant="full",
                        callback=lambda s: traces.append(s.mu))
    print(f"solved in {sol.iterations} sweeps, converged={sol.converged}")
    print("trace tail:", " ".join(f"{v:.1e}" for v in sol.trace[-4:]))
    print(f"penalty grew {traces[0]:.3g} -> {traces[-1]:.3g}")

    # the affinity rows are sparse probability vectors
    support = np.count_nonzero(sol.A, axis=1)
    print(f"affinity row support: min {support.min()} max {support.max()} "
          f"(cap {params.xi}), row sums all "
          f"{np.allclose(sol.A.sum(axis=1), 1.0)}")

    fg_free = sol.w[free_mask & fg_mask]
    bg_free = sol.w[free_mask & ~fg_mask]
    print(f"free foreground weight {fg_free.mean():.4f} vs "
          f"background {bg_free.mean():.4f} "
          f"(margin {fg_free.mean() - bg_free.mean():+.4f})")

    # ablations drop one coupling each; same interface, same outputs
    for variant in ("wpg_a", "wpg_z", "wpg_e", "wpg_w"):
        alt = solve_variant(X, seeds, params, variant=variant)
        margin = (alt.w[free_mask & fg_mask].mean()
                  - alt.w[free_mask & ~fg_mask].mean())
        print(f"{variant}: {alt.iterations} sweeps, margin {margin:+.4f}")


if __name__ == "__main__":
    main()
