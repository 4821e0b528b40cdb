"""Factoring an atom as a Riesz bilinear form.

Given an atom a on a ball B(x0, r), put g = indicator of a far ball B(y0, r)
with |x0 - y0| = M r on the same side of the origin, and h = a / R g(x0).
Then h R g - g R* h reproduces a up to a residual of size ~ 1/M, at a cost
|g| |h| ~ M. Iterating over the residual gives a weak factorization of any
function with mean zero on each half-line.
"""

import numpy as np

from neumann_hardy.factorization import approx_factor_atom, residual_envelope_constant, weak_factorize
from neumann_hardy.functionals import h1_norm
from neumann_hardy.grid import Grid, norm
from neumann_hardy.lab.experiments import unit_haar_atom
from neumann_hardy.lab.testfunctions import factorization_suite

grid = Grid(1, 16.0, 4096)
a = unit_haar_atom(grid, 10.125, 0.125)
print("one atom on B(10.125, 0.125):")
for eps in (0.5, 0.1):
    pair, W = approx_factor_atom(a, eps)
    print(
        f"  eps {eps:4.2f}  M {pair.M:3d}  y0 {pair.y0[0]:7.3f}  cost |g||h| {pair.cost:8.2f}"
        f"  |W|_H1 {h1_norm(W):.4f}  envelope C {residual_envelope_constant(pair, W):.3f}"
    )

print("\nthe iterative scheme on a wave packet:")
f = factorization_suite(grid, np.random.default_rng(0))["packet"]
ledger = weak_factorize(f, epsilon=0.1, K_max=3)
print(f"  initial H1 norm {ledger.initial_h1:.4f}")
for k, lv in enumerate(ledger.levels, 1):
    print(f"  level {k}: {len(lv.terms):4d} pairs  residual {lv.residual_h1:.3e}  ratio {lv.ratio:.4f}")
rebuilt = ledger.approximation(grid)
print(f"  sum of pairs + residual - f: {norm(rebuilt + ledger.residual - f, 2):.1e}")
print(f"  total cost / |f|_H1: {ledger.total_l1_cost / ledger.initial_h1:.2f}")
