"""Commutators with the Neumann Riesz transform see the Neumann BMO norm.

For a symbol b, [b, R] f = b R f - R(b f). Its size on L2 is comparable to
the Neumann BMO norm of b, so the ratio below stays in a narrow band across
symbols of very different shape, including the step that is invisible to
Neumann BMO.
"""

import numpy as np

from neumann_hardy.functionals import bmo_norm
from neumann_hardy.grid import Grid, norm
from neumann_hardy.lab.experiments import commutator_symbols
from neumann_hardy.lab.testfunctions import gaussian_mixture
from neumann_hardy.operators import commutator

grid = Grid(1, 16.0, 2048)
rng = np.random.default_rng(0)
fs = [gaussian_mixture(grid, rng) for _ in range(20)]

for name, b in commutator_symbols(grid).items():
    bmo = bmo_norm(b, "neumann")
    ratio = max(norm(commutator(b, f), 2) / norm(f, 2) for f in fs)
    tag = f"{ratio / bmo:8.3f}" if bmo > 1e-4 else "   (bmo ~ 0)"
    print(f"{name:6s} bmo {bmo:.3e}  sup |[b,R]f| / |f| {ratio:.3e}  ratio {tag}")
