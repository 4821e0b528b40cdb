"""Maximal functions, area functions and the H^1 / BMO norm estimators.

Scales ``t`` are spatial: the semigroup is evaluated at heat time t^2 and
Q at Q_{t^2}. The sup over t > 0 and the integral dt/t are replaced by a
log-spaced :class:`ScaleGrid`. Sups over scales and balls are therefore
under-estimated, never over-estimated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.ndimage import maximum_filter1d

from .grid import Grid, GridFunction, even_extension, norm
from .operators import DEFAULT_CONFIG, OperatorConfig, apply_Q, apply_riesz, apply_semigroup

logger = logging.getLogger(__name__)

Flavor = Literal["classical", "neumann"]


@dataclass(frozen=True)
class ScaleGrid:
    """Log-spaced spatial scales t_min, ..., t_max (heat times t^2)."""

    t_min: float
    t_max: float
    count: int = 48

    def __post_init__(self):
        if not 0 < self.t_min <= self.t_max:
            raise ValueError("need 0 < t_min <= t_max")
        if self.count < 1 or (self.count == 1 and self.t_min != self.t_max):
            raise ValueError("count must be >= 2 for a non-degenerate range")

    @classmethod
    def for_grid(cls, grid: Grid, count: int = 48) -> ScaleGrid:
        """Default range: heat times from h^2/4 up to (2L)^2."""
        return cls(grid.spacing / 2, 2 * grid.half_width, count)

    def check(self, grid: Grid) -> None:
        if self.t_min < grid.spacing / 2 * (1 - 1e-12):
            raise ValueError("t_min below grid resolution (heat time < h^2/4)")
        if self.t_max > 2 * grid.half_width * (1 + 1e-12):
            raise ValueError("t_max exceeds the box diameter")

    @property
    def values(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.count)

    @property
    def log_step(self) -> float:
        """Weight d(log t) of each sample in the dt/t integral."""
        if self.count == 1:
            return 1.0
        return math.log(self.t_max / self.t_min) / (self.count - 1)

    def refined(self) -> ScaleGrid:
        """Same range with one extra sample between each pair (old samples kept)."""
        return ScaleGrid(self.t_min, self.t_max, 2 * self.count - 1)

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "count": self.count}


def _scales(f: GridFunction, scales: ScaleGrid | None) -> ScaleGrid:
    if scales is None:
        return ScaleGrid.for_grid(f.grid)
    scales.check(f.grid)
    return scales


def _chords(radius_cells: float, dim: int):
    """Row offsets j and half-widths m_j of the lattice disc |k|^2 + j^2 < R^2."""
    R2 = radius_cells**2
    jmax = math.ceil(radius_cells) - 1
    if dim == 1:
        return [(0, jmax)]
    out = []
    for j in range(-jmax, jmax + 1):
        rem = R2 - j * j
        m = math.ceil(math.sqrt(rem)) - 1
        if m * m >= rem:
            m -= 1
        out.append((j, m))
    return out


def _shift_rows(a: np.ndarray, j: int, fill: float) -> np.ndarray:
    """out[i] = a[i + j] along axis 0, ``fill`` outside."""
    out = np.full_like(a, fill)
    n = a.shape[0]
    if j >= 0:
        out[: n - j] = a[j:]
    else:
        out[-j:] = a[: n + j]
    return out


def _disc_max(u: np.ndarray, radius_cells: float) -> np.ndarray:
    """max of u (>= 0) over samples at distance < radius_cells * h."""
    if u.ndim == 1:
        m = math.ceil(radius_cells) - 1
        return maximum_filter1d(u, 2 * m + 1, mode="constant", cval=0.0)
    if radius_cells >= math.hypot(*u.shape):
        return np.full_like(u, u.max())
    out = np.zeros_like(u)
    for j, m in _chords(radius_cells, 2):
        row = maximum_filter1d(u, 2 * m + 1, axis=1, mode="constant", cval=0.0)
        np.maximum(out, _shift_rows(row, j, 0.0), out=out)
    return out


def _window_sum(u: np.ndarray, m: int, axis: int) -> np.ndarray:
    """sum of u over index windows [i - m, i + m] along ``axis`` (zero outside)."""
    u = np.moveaxis(u, axis, 0)
    n = u.shape[0]
    c = np.zeros((n + 1,) + u.shape[1:])
    np.cumsum(u, axis=0, out=c[1:])
    hi = np.minimum(np.arange(n) + m + 1, n)
    lo = np.maximum(np.arange(n) - m, 0)
    return np.moveaxis(c[hi] - c[lo], 0, axis)


def _disc_sum(u: np.ndarray, radius_cells: float) -> np.ndarray:
    if u.ndim == 1:
        return _window_sum(u, math.ceil(radius_cells) - 1, 0)
    out = np.zeros_like(u)
    for j, m in _chords(radius_cells, 2):
        out += _shift_rows(_window_sum(u, m, 1), j, 0.0)
    return out


def radial_maximal(
    f: GridFunction,
    flavor: Flavor = "neumann",
    scales: ScaleGrid | None = None,
    config: OperatorConfig = DEFAULT_CONFIG,
) -> GridFunction:
    """f^+(x) = max over t of |e^{-t^2 L} f(x)|."""
    out = np.zeros(f.grid.shape)
    for t in _scales(f, scales).values:
        np.maximum(out, np.abs(apply_semigroup(f, t * t, flavor, config).values), out=out)
    return GridFunction(f.grid, out)


def nontangential_maximal(
    f: GridFunction,
    flavor: Flavor = "neumann",
    scales: ScaleGrid | None = None,
    config: OperatorConfig = DEFAULT_CONFIG,
) -> GridFunction:
    """f^*(x) = max over t and samples y with |x - y| < t of |e^{-t^2 L} f(y)|."""
    h = f.grid.spacing
    out = np.zeros(f.grid.shape)
    for t in _scales(f, scales).values:
        u = np.abs(apply_semigroup(f, t * t, flavor, config).values)
        np.maximum(out, _disc_max(u, t / h), out=out)
    return GridFunction(f.grid, out)


def area_function(
    f: GridFunction,
    flavor: Flavor = "neumann",
    scales: ScaleGrid | None = None,
    config: OperatorConfig = DEFAULT_CONFIG,
) -> GridFunction:
    """S f(x) = ( sum_t dlog t * t^{-n} * sum_{|y - x| < t} |Q_{t^2} f(y)|^2 h^n )^{1/2}."""
    grid = f.grid
    sc = _scales(f, scales)
    h, n = grid.spacing, grid.dimension
    acc = np.zeros(grid.shape)
    for t in sc.values:
        q2 = apply_Q(f, t, flavor, config).values ** 2
        acc += sc.log_step * grid.cell_volume / t**n * _disc_sum(q2, t / h)
    return GridFunction(grid, np.sqrt(np.maximum(acc, 0.0)))


def h1_norm(
    f: GridFunction,
    characterization: Literal["area", "max", "nontangential", "riesz"] = "max",
    flavor: Flavor = "neumann",
    scales: ScaleGrid | None = None,
    config: OperatorConfig = DEFAULT_CONFIG,
) -> float:
    """H^1 norm of f in one of the equivalent characterizations."""
    if characterization == "area":
        return norm(area_function(f, flavor, scales, config), 1)
    if characterization == "max":
        return norm(radial_maximal(f, flavor, scales, config), 1)
    if characterization == "nontangential":
        return norm(nontangential_maximal(f, flavor, scales, config), 1)
    if characterization == "riesz":
        total = norm(f, 1)
        for l in range(1, f.grid.dimension + 1):
            total += norm(apply_riesz(f, l, False, flavor, config), 1)
        return total
    raise ValueError(f"unknown characterization {characterization!r}")


# ---------------------------------------------------------------- BMO


def _ball_offsets(m: int, dim: int) -> np.ndarray:
    """Index offsets a of samples inside the ball of radius m cells centred at a cell corner.

    Sample i is at (i + 1/2) h relative to corner c = 0, so |a + 1/2| < m per the disc.
    """
    a = np.arange(-m, m)
    if dim == 1:
        return a[:, None]
    A = np.stack(np.meshgrid(a, a, indexing="ij"), axis=-1).reshape(-1, 2)
    keep = np.sum((A + 0.5) ** 2, axis=1) < m * m
    return A[keep]


def bmo_balls(grid: Grid, margin: float = 0.0):
    """Yield (radius, corner indices array (k, n), sample offsets (s, n)).

    Radii are 2^j h (j >= 1); centres lie on a lattice of spacing r/2 through
    the origin; only balls with |c_i| + (1 + margin) r <= L on every axis are kept.
    """
    N, h, L = grid.points_per_axis, grid.spacing, grid.half_width
    j = 1
    while True:
        m = 2**j
        r = m * h
        if (1 + margin) * r > L + 1e-12:
            break
        step = m // 2
        # corner index c <-> position c h - L; origin is corner N/2
        lim = int(math.floor((L - (1 + margin) * r) / h + 1e-9))
        k = np.arange(-(lim // step), lim // step + 1) * step + N // 2
        if grid.dimension == 1:
            corners = k[:, None]
        else:
            corners = np.stack(np.meshgrid(k, k, indexing="ij"), axis=-1).reshape(-1, 2)
        yield r, corners, _ball_offsets(m, grid.dimension)
        j += 1


def _ball_values(w: np.ndarray, corners: np.ndarray, offsets: np.ndarray, chunk=4096):
    for s in range(0, len(corners), chunk):
        idx = corners[s : s + chunk, None, :] + offsets[None, :, :]
        yield w[tuple(idx[..., d] for d in range(idx.shape[-1]))]


def bmo_norm(
    b: GridFunction,
    flavor: Literal["neumann", "classical", "even_plus", "even_minus"] = "neumann",
    semigroup_margin: float = 8.0,
    config: OperatorConfig = DEFAULT_CONFIG,
) -> float:
    """Sup over a dyadic ball family of the mean oscillation of b.

    ``neumann``: |B|^{-1} int_B |b - e^{-r^2 Delta_N} b|; balls keep a distance
    ``semigroup_margin * r`` from the box edge so the truncated semigroup is
    accurate there. ``classical``: |B|^{-1} int_B |b - b_B|. ``even_plus`` /
    ``even_minus``: classical norm of the even extension of b from that half.
    """
    grid = b.grid
    if flavor in ("even_plus", "even_minus"):
        return bmo_norm(even_extension(b, flavor.split("_")[1]), "classical", config=config)
    best = 0.0
    if flavor == "neumann":
        for r, corners, offs in bmo_balls(grid, semigroup_margin):
            w = np.abs(b.values - apply_semigroup(b, r * r, "neumann", config).values)
            for vals in _ball_values(w, corners, offs):
                best = max(best, float(vals.mean(axis=1).max()))
    elif flavor == "classical":
        for r, corners, offs in bmo_balls(grid, 0.0):
            for vals in _ball_values(b.values, corners, offs):
                mean = vals.mean(axis=1, keepdims=True)
                best = max(best, float(np.abs(vals - mean).mean(axis=1).max()))
    else:
        raise ValueError(f"unknown BMO flavor {flavor!r}")
    return best
