"""Seeded families of input functions used by the experiments."""

from __future__ import annotations

import numpy as np

from ..atoms import half_space_means
from ..grid import Grid, GridFunction


def gaussian_mixture(grid: Grid, rng: np.random.Generator, terms: int = 4) -> GridFunction:
    """Random sum of Gaussians and Gaussian derivatives well inside the box."""
    L = grid.half_width
    X = grid.coordinates()
    out = np.zeros(grid.shape)
    for _ in range(terms):
        c = rng.uniform(-L / 2, L / 2, grid.dimension)
        w = rng.uniform(0.2, 1.5)
        amp = rng.standard_normal()
        d2 = sum((x - ci) ** 2 for x, ci in zip(X, c))
        bump = np.exp(-d2 / (2 * w * w))
        if rng.random() < 0.5:
            bump = bump * (X[-1] - c[-1]) / w
        out += amp * bump
    return GridFunction(grid, out)


def half_mean_free(f: GridFunction) -> GridFunction:
    """Remove the mean of f on each half-space using a smooth bump inside that half."""
    grid = f.grid
    xn = grid.normal_coordinate()
    L = grid.half_width
    out = np.array(f.values)
    for tag, m, sgn in zip(("plus", "minus"), half_space_means(f), (1, -1)):
        bump = np.exp(-((xn - sgn * L / 4) ** 2) / (L / 16) ** 2) * grid.half_mask(tag)
        if grid.dimension == 2:
            bump = bump * np.exp(-(grid.coordinates()[0] ** 2) / (L / 8) ** 2)
        out -= m * bump / (grid.cell_volume * bump.sum())
    return GridFunction(grid, out)


def random_field(grid: Grid, rng: np.random.Generator) -> GridFunction:
    """White noise plus a smoothed copy (O(1) in L^2 per unit length)."""
    white = rng.standard_normal(grid.shape) * (rng.random() < 0.5)
    smooth = np.convolve(rng.standard_normal(grid.size), np.ones(64) / 8, "same").reshape(grid.shape)
    return GridFunction(grid, white + smooth)


def bounded_field(grid: Grid, rng: np.random.Generator, kind: str) -> np.ndarray:
    """Values in [-1, 1]: i.i.d. uniform ("white") or random piecewise constant ("blocks")."""
    if kind == "white":
        return rng.uniform(-1, 1, grid.shape)
    if kind == "blocks":
        w = int(2 ** rng.integers(2, 9))
        n = grid.points_per_axis
        v = rng.uniform(-1, 1, (n // w + 1,) * grid.dimension)
        for ax in range(grid.dimension):
            v = np.repeat(v, w, axis=ax)
        return v[tuple(slice(0, n) for _ in range(grid.dimension))]
    raise ValueError(f"unknown field kind {kind!r}")


def factorization_suite(grid: Grid, rng: np.random.Generator) -> dict[str, GridFunction]:
    """Five compactly supported 1-d inputs with mean zero on each half-line.

    Supports have width <= 1 and sit between 4 and 12.5 in absolute value, so
    the coarsest atoms fit in a box with L = 16 and separation M r, M >= 16.
    """
    if grid.dimension != 1 or grid.half_width < 16:
        raise ValueError("the factorization suite needs a 1-d grid with L >= 16")
    x = grid.axis

    def box(a, b):
        return ((x > a) & (x < b)).astype(float)

    suite = {}
    suite["haar"] = 4 * box(10, 10.125) - 4 * box(10.125, 10.25)
    suite["dgauss"] = -(x - 12) * np.exp(-(((x - 12) / 0.1) ** 2)) * (np.abs(x - 12) < 0.5)
    suite["pm"] = (
        2 * box(6, 6.25) - 2 * box(6.25, 6.5) - 2 * box(-9, -8.75) + 2 * box(-8.75, -8.5)
    )
    m = box(4, 4.5) > 0
    v = np.where(m, rng.standard_normal(grid.size), 0.0)
    v[m] -= v[m].mean()
    suite["rand"] = v
    m = np.abs(x - 9) < 0.125
    w = np.exp(-(((x - 9) / 0.05) ** 2)) * np.sin(80 * x) * m
    w[m] -= w[m].mean()
    suite["packet"] = w
    return {k: GridFunction(grid, v) for k, v in suite.items()}
