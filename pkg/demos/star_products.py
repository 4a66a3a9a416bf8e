"""Twisted products of Gaussians: closed form, grid engine, Moyal truncations."""
import numpy as np

from qstkernel.acceptance import locality_pair, moyal_pair
from qstkernel.star import GaussianSymbol, Grid, GridSymbol, locality_probe, star_product
from qstkernel.star.grid import moyal_order_fit

theta = np.array([[0.0, 1.0], [-1.0, 0.0]])
f = GaussianSymbol.isotropic(2, 1.0, center=[0.4, -0.3])
g = GaussianSymbol.isotropic(2, 1.0, center=[-0.2, 0.5], momentum=[0.3, 0.0])

grid = Grid.from_extent(64, 16.0, 2)
exact = star_product(f, g, theta)
num = star_product(GridSymbol.sample(f, grid), GridSymbol.sample(g, grid), theta)
ref = exact(grid.points())
print(f"closed form vs grid engine: {np.linalg.norm(num.values - ref) / np.linalg.norm(ref):.2e}")

a, b = moyal_pair()
for n in (1, 2, 3):
    slope, errs = moyal_order_fit(a, b, theta, n)
    print(f"Moyal order {n}: fitted error slope {slope:.2f}")

a, b = locality_pair()
sup_star, sup_moyal = locality_probe(a, b, 4 * theta, order=3)
print(f"disjoint bumps: |f*g| up to {sup_star:.2e}, truncated expansion up to {sup_moyal:.2e}")
