"""Tour of the diagnostics: stable rank, direction spread, subspace alignment.

Small synthetic matrices make each quantity easy to sanity-check by eye:
a planted rank-k matrix has stable rank near k when its spectrum is flat,
rank-collapsed updates have near-zero pairwise direction distances, and
the alignment cosines climb toward 1 along a converging run.

    python demos/diagnostics_tour.py
"""

import numpy as np

import polarlab as pl
from polarlab.factorization import init_polar_factors, rgd_step_asym
from polarlab.stiefel import (
    alignment,
    pairwise_direction_distances,
    sample_stiefel_uniform,
    stable_rank,
)


def main():
    rng = np.random.default_rng(7)

    print("== stable rank ==")
    for k in (1, 3, 8):
        U = sample_stiefel_uniform(40, k, rng)
        V = sample_stiefel_uniform(30, k, rng)
        flat = U @ V.T  # k equal singular values
        spiked = (U * np.r_[10.0, np.ones(k - 1)]) @ V.T if k > 1 else flat
        print(f"  planted rank {k}: flat spectrum -> {stable_rank(flat).stable_rank:.3f}, "
              f"one dominant direction -> {stable_rank(spiked).stable_rank:.3f}")

    print("\n== directional diversity ==")
    collapsed = np.outer(rng.standard_normal(40), rng.standard_normal(30))
    diverse = rng.standard_normal((40, 30))
    for name, W in (("rank-1 (collapsed rows)", collapsed), ("full-rank noise", diverse)):
        rep = pairwise_direction_distances(W)
        print(f"  {name:<24} mean pairwise distance {rep.mean_distance:.3f}")

    print("\n== subspace alignment along a run ==")
    target = pl.make_target(30, 24, 3, 5.0, np.random.default_rng(0))
    f = init_polar_factors(target, 9, np.random.default_rng(1))
    for it in range(1201):
        if it % 300 == 0:
            left = alignment(target.U, f.X)
            right = alignment(target.V, f.Y)
            print(f"  iter {it:>4}: smallest left cosine {left.sigma_min_phi:.4f}, "
                  f"smallest right cosine {right.sigma_min_phi:.4f}, "
                  f"left misalignment trace {left.misalignment_trace:.4f}")
        f = rgd_step_asym(target, f, eta=0.01)
    print("  (cosines increase monotonically; the target subspace is captured)")


if __name__ == "__main__":
    main()
