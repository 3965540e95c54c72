"""Minimal sets and their periods.

Random forward orbits settle on the minimal sets of the semigroup.  The sum
of their periods is the dimension of the space of unitary eigenfunctions of
the transition operator.
"""
import numpy as np

from coliseum.core import GeneratorSystem, RandomModel
from coliseum.markov import contraction_rate, minimal_sets, t_minimal_mc

scenes = {
    "{z^2, z^2/4}": [[0, 0, 1], [0, 0, 0.25]],
    "{z^2 - 1}": [[-1, 0, 1]],
    "dc1": [[0, 0, -2, 0, 1], [0, 0, 0, 0, 1 / 64]],
}
for name, coeffs in scenes.items():
    model = RandomModel(GeneratorSystem.from_coeffs(coeffs))
    g = np.linspace(-1.2, 1.2, 5)
    rep = minimal_sets(model, (g[:, None] + 1j * g[None, :]).ravel())
    desc = []
    for L in rep.minimal:
        if L.is_infinity:
            desc.append("{inf}")
        else:
            pts = [rep.clusters[k].centroid for k in L.clusters]
            desc.append("{" + ", ".join(f"{p.real:+.3f}{p.imag:+.3f}i" for p in pts) + "}")
    print(f"{name}: {' '.join(desc)}  periods {rep.periods}, sum {rep.dimension}")
    r = t_minimal_mc(0.3, model, rep, trials=5000)
    print(f"   from z=0.3: probabilities {[round(p, 3) for p in r.probabilities]}")
    eta = contraction_rate(model, rep, [0.05, 0.05j], n=30).eta
    print(f"   contraction near the attractors: eta = {eta:.3g}")
