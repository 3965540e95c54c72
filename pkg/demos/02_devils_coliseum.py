"""The escape probability T of a random polynomial dynamical system.

T(z) is the probability that the i.i.d. random orbit of z tends to
infinity.  It is computed as a certified interval by unrolling
T(z) = sum_j p_j T(h_j(z)) into a weighted tree, and checked against Monte
Carlo.  On the dc1 example it is continuous but varies only on J(G).
"""
from pathlib import Path

import numpy as np

from coliseum import io
from coliseum.core import GeneratorSystem, RandomModel
from coliseum.iteration import Disk, EscapeParams
from coliseum.markov import m_tau_apply, t_infinity_exact, t_infinity_mc, t_raster

out = Path("out/demos")
out.mkdir(parents=True, exist_ok=True)

dc1 = GeneratorSystem.from_coeffs([[0, 0, -2, 0, 1], [0, 0, 0, 0, 1 / 64]])
model = RandomModel(dc1, (0.5, 0.5))
params = EscapeParams.for_system(dc1, [Disk(0, 0.4)], max_depth=24)

for z in (0.0, 1.2, 1.5 + 0.5j, 6.0):
    iv = t_infinity_exact(z, model, params)
    mc = t_infinity_mc(z, model, params, trials=20_000, rng_seed=1)
    print(f"T({z}) in [{iv.lo:.6f}, {iv.hi:.6f}]   MC {mc.estimate:.4f} +- {mc.stderr:.4f}")

T = t_raster(model, params, (-4.5, 4.5, -4.5, 4.5), 256)
res = m_tau_apply(T, model, params)
gap = np.maximum(T.lo - res.raster.hi, res.raster.lo - T.hi).max()
print(f"256x256 raster: max width {T.width.max():.1e}, |M T - T| <= {max(gap, 0):.2e}")
io.write_raster_pgm(out / "dc1_coliseum.pgm", T)
print(f"graymap -> {out / 'dc1_coliseum.pgm'}")
