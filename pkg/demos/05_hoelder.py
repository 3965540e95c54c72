"""Pointwise Hoelder exponents of the escape probability.

The closed form u = entropy(p) / (mean log degree + integral of Omega)
predicts the exponent at typical points; the transfer operator on the
cloud gives the exponent for Hausdorff-typical points.  With very uneven
weights the two straddle 1.
"""
import numpy as np

from coliseum.core import GeneratorSystem, RandomModel
from coliseum.iteration import Disk, EscapeParams, julia_backward_cloud
from coliseum.thermo import hoelder_report, pointwise_hoelder_empirical
from coliseum.verify import t_evaluator

dc1 = GeneratorSystem.from_coeffs([[0, 0, -2, 0, 1], [0, 0, 0, 0, 1 / 64]])
cloud = julia_backward_cloud(dc1, 20_000, rng_seed=0)
for p in [(0.5, 0.5), (0.25, 0.75), (0.05, 0.95)]:
    rep = hoelder_report(RandomModel(dc1, p), cloud, samples=200)
    print(f"p={p}: u_entropy {rep.u_entropy:.4f}, u_hausdorff {rep.u_hausdorff:.4f}, "
          f"verdict {rep.verdict}")

model = RandomModel(dc1)
ev = t_evaluator(model, EscapeParams.for_system(dc1, [Disk(0, 0.4)]), depth=24, intervals=True)
sites = cloud.points[np.random.default_rng(1).choice(len(cloud), 30, replace=False)]
slopes = [pointwise_hoelder_empirical(ev, z, np.geomspace(1e-4, 1e-2, 6)).slope for z in sites]
print(f"empirical slopes at 30 cloud points: median {np.median(slopes):.3f} (prediction 0.5)")
