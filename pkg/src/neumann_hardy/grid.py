"""Uniform cell-centred grids on the box [-L, L]^n and functions sampled on them.

The last axis plays the role of the normal coordinate x_n; the hyperplane
{x_n = 0} separates the upper half-space (x_n > 0) from the lower one.
Samples sit at (k + 1/2) h - L, so with an even number of points per axis no
sample lies on that hyperplane and the reflection x -> (x', -x_n) maps grid
points onto grid points (index k -> N - 1 - k).
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

logger = logging.getLogger(__name__)

Half = Literal["plus", "minus"]


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid covering [-L, L]^dimension."""

    dimension: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.points_per_axis <= 0 or self.points_per_axis % 2:
            raise ValueError(
                f"points_per_axis must be a positive even integer, got {self.points_per_axis}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    h = spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def axis(self) -> np.ndarray:
        """Sample coordinates along one axis."""
        N, h, L = self.points_per_axis, self.spacing, self.half_width
        return (np.arange(N) + 0.5) * h - L

    def coordinates(self) -> list[np.ndarray]:
        """Coordinate arrays (``indexing="ij"``), one per axis."""
        ax = self.axis
        if self.dimension == 1:
            return [ax.copy()]
        return list(np.meshgrid(ax, ax, indexing="ij"))

    def points(self) -> np.ndarray:
        """All sample points as an array of shape (size, dimension), row-major."""
        return np.stack([c.ravel() for c in self.coordinates()], axis=-1)

    def normal_coordinate(self) -> np.ndarray:
        """x_n at every sample (broadcast to the grid shape)."""
        return self.coordinates()[-1]

    def half_mask(self, tag: Half) -> np.ndarray:
        xn = self.normal_coordinate()
        if tag == "plus":
            return xn > 0
        if tag == "minus":
            return xn < 0
        raise ValueError(f"unknown half-space tag {tag!r}")

    def reflect_values(self, values: np.ndarray) -> np.ndarray:
        """Values composed with the reflection, i.e. v(x~) on the sample grid."""
        return np.flip(values, axis=self.dimension - 1)

    def contains_ball(self, ball: Ball) -> bool:
        c = np.atleast_1d(ball.center)
        return bool(np.all(np.abs(c) + ball.radius <= self.half_width + 1e-12))

    def function(self, values) -> GridFunction:
        return GridFunction(self, values)

    def sample(self, func) -> GridFunction:
        """Evaluate ``func(*coords)`` on the grid."""
        return GridFunction(self, func(*self.coordinates()))

    def zeros(self) -> GridFunction:
        return GridFunction(self, np.zeros(self.shape))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "L": self.half_width,
            "N": self.points_per_axis,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Grid:
        return cls(int(d["dimension"]), float(d["L"]), int(d["N"]))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of a function on a :class:`Grid` (array of shape ``grid.shape``)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFunction values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check(self, other: GridFunction):
        if other.grid != self.grid:
            raise ValueError("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values - other.values)
        return GridFunction(self.grid, self.values - other)

    def __rsub__(self, other):
        return GridFunction(self.grid, other - self.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values * other.values)
        return GridFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return GridFunction(self.grid, self.values / scalar)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def abs(self) -> GridFunction:
        return GridFunction(self.grid, np.abs(self.values))

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def to_csv(self, path) -> None:
        """Write ``x1[,x2],value`` rows plus a JSON sidecar with the grid metadata."""
        path = Path(path)
        pts = self.grid.points()
        header = ",".join([f"x{i + 1}" for i in range(self.grid.dimension)] + ["value"])
        data = np.column_stack([pts, self.flat()])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(json.dumps(self.grid.to_dict(), indent=2))

    @classmethod
    def from_csv(cls, path) -> GridFunction:
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        grid = Grid.from_dict(meta)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(grid, data[:, -1])


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dimension(self) -> int:
        return len(self.center)

    def volume(self) -> float:
        n, r = self.dimension, self.radius
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n

    def straddles_hyperplane(self) -> bool:
        return abs(self.center[-1]) < self.radius

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}


def reflect_point(x) -> np.ndarray:
    """(x', x_n) -> (x', -x_n)."""
    y = np.array(x, dtype=float, copy=True)
    y[..., -1] = -y[..., -1]
    return y


def restrict(f: GridFunction, tag: Half) -> GridFunction:
    """Zero ``f`` outside the open half-space selected by ``tag``."""
    mask = f.grid.half_mask(tag)
    return GridFunction(f.grid, np.where(mask, f.values, 0.0))


def even_extension(f: GridFunction, tag: Half) -> GridFunction:
    """Even extension across {x_n = 0} of the restriction of ``f`` to the tagged half."""
    kept = restrict(f, tag).values
    return GridFunction(f.grid, kept + f.grid.reflect_values(kept))


def integrate(f: GridFunction) -> float:
    """Midpoint rule h^n * sum(values)."""
    return float(f.grid.cell_volume * math.fsum(f.flat()))


def norm(f: GridFunction, p=2) -> float:
    v = np.abs(f.flat())
    if p in (np.inf, "inf", float("inf")):
        return float(v.max()) if v.size else 0.0
    if p == 1:
        return float(f.grid.cell_volume * math.fsum(v))
    if p == 2:
        return float(math.sqrt(f.grid.cell_volume * math.fsum(v * v)))
    raise ValueError(f"unsupported norm order {p!r}")


def inner(f: GridFunction, g: GridFunction) -> float:
    """Discrete L^2 pairing <f, g> = h^n sum f g."""
    f._check(g)
    return float(f.grid.cell_volume * math.fsum((f.values * g.values).ravel()))


def ball_mask(grid: Grid, ball: Ball) -> np.ndarray:
    if ball.dimension != grid.dimension:
        raise ValueError("ball and grid dimensions differ")
    dist2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coordinates(), ball.center))
    return dist2 < ball.radius**2


def ball_indicator(grid: Grid, ball: Ball) -> GridFunction:
    """1 at samples strictly inside ``ball``, 0 elsewhere."""
    if not grid.contains_ball(ball):
        warnings.warn(
            f"ball {ball} is not contained in the box [-{grid.half_width}, {grid.half_width}]^n",
            stacklevel=2,
        )
    mask = ball_mask(grid, ball)
    if not mask.any():
        raise ValueError(f"ball {ball} contains no grid samples")
    return GridFunction(grid, mask.astype(float))
