"""Julia sets of polynomial semigroups by backward iteration.

A point cloud on J(G) comes from running random inverse branches.  For
{z^2} the cloud must sit on the unit circle; for the two-map example the
cloud is a disconnected fractal whose two preimage pieces do not touch.
"""
from pathlib import Path

import numpy as np

from coliseum import io
from coliseum.core import GeneratorSystem
from coliseum.iteration import julia_backward_cloud, escape_radius

out = Path("out/demos")
out.mkdir(parents=True, exist_ok=True)

circle = GeneratorSystem.from_coeffs([[0, 0, 1]])
cloud = julia_backward_cloud(circle, 100_000, rng_seed=0)
print(f"{{z^2}}: {len(cloud)} points, max ||z|-1| = {np.max(np.abs(np.abs(cloud.points) - 1)):.1e}")

dc1 = GeneratorSystem.from_coeffs([[0, 0, -2, 0, 1], [0, 0, 0, 0, 1 / 64]])
cloud = julia_backward_cloud(dc1, 100_000, rng_seed=0)
print(f"dc1: escape radius {escape_radius(dc1):.4f}, |z| in "
      f"[{np.abs(cloud.points).min():.3f}, {np.abs(cloud.points).max():.3f}]")
for j in (1, 2):
    share = np.mean(cloud.provenance == j)
    print(f"  points last drawn through h{j}^-1: {share:.1%}")

io.write_pgm(out / "dc1_julia.pgm", io.cloud_density(cloud, (-4.5, 4.5, -4.5, 4.5), 512))
print(f"density image -> {out / 'dc1_julia.pgm'}")
