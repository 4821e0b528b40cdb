"""A function that is small in the Neumann BMO space but not in the classical one.

The step sign(x) is constant on each half-line and only jumps across the
origin. The Neumann mean oscillation never compares values on opposite
sides of the origin, so it vanishes.
The classical one does compare them, and the jump costs it a fixed amount.

The second half shows the flip side in the Hardy space: the atom
chi_[-1,0] - chi_[0,1] has mean zero, but each half does not, so its
Neumann H1 norm grows like log L with the box size.
"""

import numpy as np

from neumann_hardy.atoms import counterexample_function
from neumann_hardy.functionals import bmo_norm, h1_norm
from neumann_hardy.grid import Grid

grid = Grid(1, 16.0, 2048)
b = grid.sample(lambda x: np.sign(x))
print("step function sign(x):")
print(f"  neumann BMO   {bmo_norm(b, 'neumann'):.3e}")
print(f"  classical BMO {bmo_norm(b, 'classical'):.3f}")

print("\nthe atom chi_[-1,0] - chi_[0,1] in boxes of growing size:")
prev = None
for L in (4, 8, 16, 32):
    g = Grid(1, float(L), int(2 * L * 128))
    a = counterexample_function(g)
    nn = h1_norm(a, "max", "neumann")
    nc = h1_norm(a, "max", "classical")
    step = "" if prev is None else f"  increment {nn - prev:.4f}"
    print(f"  L = {L:2d}  neumann {nn:.4f}  classical {nc:.4f}{step}")
    prev = nn
print(f"expected increment per doubling ~ 4 e^(-1/2) / sqrt(4 pi) * log 2 = "
      f"{4 * np.exp(-0.5) / np.sqrt(4 * np.pi) * np.log(2):.4f}")
