"""Hausdorff dimension from Bowen's equation, with box counting as a cross-check."""
from coliseum.core import GeneratorSystem
from coliseum.iteration import julia_backward_cloud
from coliseum.thermo import auto_box_scales, bowen_dimension, box_counting_dim

scenes = {
    "{z^2}": [[0, 0, 1]],
    "{z^2 - 2}": [[-2, 0, 1]],
    "{z^3, z^3/8}": [[0, 0, 0, 1], [0, 0, 0, 0.125]],
    "dc1": [[0, 0, -2, 0, 1], [0, 0, 0, 0, 1 / 64]],
}
for name, coeffs in scenes.items():
    s = GeneratorSystem.from_coeffs(coeffs)
    cloud = julia_backward_cloud(s, 20_000, rng_seed=0)
    big = julia_backward_cloud(s, 100_000, rng_seed=1)
    d = bowen_dimension(s, cloud).delta
    b = box_counting_dim(big, auto_box_scales(big)).estimate
    print(f"{name:14s} bowen {d:.4f}   box {b:.4f}")
print("(the Cantor set of circles has dimension 1 + log 2 / log 3 = 1.6309)")
