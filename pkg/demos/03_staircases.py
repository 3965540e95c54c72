"""Singular functions on the line as escape probabilities.

The random walk x -> 3x or 3x - 2 (each with probability 1/2) drifts to
+infinity with probability equal to the Cantor function; with the maps
2x and 2x - 1 and weights (a, 1 - a) one gets Lebesgue's singular function.
"""
from fractions import Fraction

from coliseum.interval import (StaircaseModel, devils_staircase, lebesgue_singular,
                               staircase_mc)

for x in (Fraction(1, 3), Fraction(1, 4), Fraction(2, 3), Fraction(7, 9)):
    v = devils_staircase(x)
    print(f"phi({x}) = {v.mid:.12f}  (width {v.width:.1e})")

for a in (0.2, 0.5, 0.8):
    vals = [lebesgue_singular(x, a).mid for x in (0.25, 0.5, 0.75)]
    print(f"psi_{a}(1/4, 1/2, 3/4) = " + ", ".join(f"{v:.4f}" for v in vals))

r = staircase_mc(1 / 3, StaircaseModel.cantor(), trials=100_000, rng_seed=0)
print(f"random walk from 1/3: {r.estimate:.4f} +- {r.stderr:.4f} (exact 1/2)")
