"""Dyadic measures: regular pieces, scale signatures, energy, projections.

A sparse quad-tree measure on the unit square stores mass on cells of side
2^(-T*j).  Decomposition prunes it into pieces whose parent-to-child mass
ratios sit in a single dyadic band at every level; the band ladder is the
piece's scale signature sigma (one number per level, in [-1, 1]), which is
exactly the kind of sequence the drop optimizer consumes.

Run:  python3 demos/03_measure_decomposition.py
"""

import numpy as np

from pindrop import (
    bourgain_decompose,
    energy,
    energy_pairwise,
    extract_sigma,
    four_corner_measure,
    l2_norm_sq,
    marstrand_fraction,
    product_cantor_measure,
    project,
    random_measure,
    uniform_measure,
)

print("=== structured measures are already regular ===")
for name, mu in (("uniform", uniform_measure(1, 8)),
                 ("four-corner", four_corner_measure(1, 8)),
                 ("product-Cantor s=1.2 u=2", product_cantor_measure(1, 10, 1.2, 2.0))):
    sigma = extract_sigma(mu)
    print(f"  {name:26s} leaves={mu.leaf_count:6d}  sigma={[round(v, 2) for v in sigma]}")

print()
print("=== a random measure needs pruning ===")
mu = random_measure(1, 8, seed=3)
pieces, residual = bourgain_decompose(mu, eps=0.1)
print(f"  leaves {mu.leaf_count}, decomposed into {len(pieces)} regular piece(s), "
      f"residual mass {residual:.4f} (budget {2.0 ** (-0.1 * 8):.4f})")
for k, piece in enumerate(pieces[:5]):
    print(f"    piece {k}: mass {piece.mass:.4f}, {len(piece)} cells, "
          f"sigma = {[round(v, 2) for v in piece.sigma]}")
rerun, _ = bourgain_decompose(mu, eps=0.1)
assert all(np.array_equal(a.support, b.support) for a, b in zip(pieces, rerun))
print("  rerun is byte-identical: decomposition is deterministic")

print()
print("=== energy: the level-sum tracks the pairwise kernel sum ===")
for name, mu2 in (("uniform", uniform_measure(1, 6)),
                  ("four-corner", four_corner_measure(1, 8))):
    dy = energy(mu2, 1.0)
    pw = energy_pairwise(mu2, 1.0)
    print(f"  {name:12s} dyadic {dy:8.4f}  pairwise {pw:8.4f}  "
          f"log2 ratio {np.log2(dy / pw):+.3f}  (comparable up to a constant)")

print()
print("=== projections: spread measures project to spread line measures ===")
mu = four_corner_measure(1, 8)
for label, theta in (("axis", 0.0), ("diagonal", np.pi / 4), ("generic", 0.37)):
    nu = project(mu, theta)
    print(f"  theta={label:8s} bins={nu.support_count:4d}  "
          f"normalized L2^2 = {l2_norm_sq(nu):8.3f}  (small = spread out)")
print(f"  directions with L2 norm >= 4 * energy: "
      f"{marstrand_fraction(mu, 4.0, n_theta=1024):.4f} of the grid")
