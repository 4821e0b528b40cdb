"""Grid quadrature for the heat semigroup, Q_{t^2}, the Riesz transforms and the bilinear forms built on them.

Every operator here is a quadrature sum  (T f)(x_i) = sum_j k(x_i, y_j) f(y_j) h^n
over the sample grid. On a uniform grid the classical kernels depend on
x - y only, so the sum is a discrete convolution with a fixed stencil. The
Neumann kernels add the mirror-image term k(x, y~) and gate by H(x_n y_n);
for a source g supported in one half-space, the image term is the same
stencil applied to g(x~). Both sums are evaluated exactly (up to rounding)
with FFT convolution. ``mode="matrix"`` instead assembles the dense kernel
matrix from the closed forms in :mod:`kernels`; it is the independent route
used in tests and can be dumped to CSV.

Principal values: the singular sample set {y : |x - y| < rho h} is dropped
from the classical part of the Riesz kernel (rho = ``pv_exclusion_radius``,
default 1, i.e. only y = x). The image part is singular only at y~ = x and
gets the same treatment in the reflected variable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from .grid import Grid, GridFunction

logger = logging.getLogger(__name__)

Flavor = Literal["classical", "neumann"]


@dataclass(frozen=True)
class OperatorConfig:
    """Quadrature policy.

    ``pv_exclusion_radius`` is measured in cells and must be >= 1.
    ``mode`` selects FFT stencils (default) or dense kernel matrices.
    """

    pv_exclusion_radius: float = 1.0
    mode: Literal["fft", "matrix"] = "fft"
    max_matrix_size: int = 8192

    def __post_init__(self):
        if self.pv_exclusion_radius < 1:
            raise ValueError("pv_exclusion_radius must be at least one cell")
        if self.mode not in ("fft", "matrix"):
            raise ValueError(f"unknown mode {self.mode!r}")


DEFAULT_CONFIG = OperatorConfig()


# ---------------------------------------------------------------- stencils


def _offsets(grid: Grid) -> np.ndarray:
    """Offsets x - y for all index differences, shape (2N-1,)*n + (n,)."""
    N, h = grid.points_per_axis, grid.spacing
    ax = np.arange(-(N - 1), N) * h
    if grid.dimension == 1:
        return ax[:, None]
    return np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)


def _convolve(stencil: np.ndarray, g: np.ndarray) -> np.ndarray:
    """out[..., i] = sum_j stencil[i - j] g[..., j] with stencil centred at index N-1.

    Leading axes of ``g`` beyond the stencil's rank are a batch (one stencil FFT).
    """
    k = stencil.ndim
    N = g.shape[-1]
    if g.ndim > k:
        stencil = stencil.reshape((1,) * (g.ndim - k) + stencil.shape)
    axes = tuple(range(g.ndim - k, g.ndim))
    full = fftconvolve(g, stencil, mode="full", axes=axes)
    sl = (Ellipsis,) + tuple(slice(N - 1, 2 * N - 1) for _ in range(k))
    return full[sl]


def _heat_stencil(grid: Grid, t: float) -> np.ndarray:
    d = _offsets(grid)
    return kernels.classical_heat_kernel(t, d, np.zeros(grid.dimension)) * grid.cell_volume


def _q_stencil(grid: Grid, s: float) -> np.ndarray:
    # Q_s = -s d/ds e^{-s L}, kernel evaluated at heat time s
    d = _offsets(grid)
    dt = kernels.heat_kernel_time_derivative(s, d, np.zeros(grid.dimension), "classical")
    return -s * dt * grid.cell_volume


def _riesz_stencil(grid: Grid, l: int, rho: float) -> np.ndarray:
    d = _offsets(grid)
    dist = np.sqrt(np.sum(d**2, axis=-1))
    keep = dist >= rho * grid.spacing * (1 - 1e-12)
    out = np.zeros(dist.shape)
    out[keep] = kernels.classical_riesz_kernel(l, d[keep], np.zeros(grid.dimension))
    return out * grid.cell_volume


def _apply_stencil(grid: Grid, stencil, values, flavor: Flavor, adjoint: bool):
    if adjoint:
        stencil = np.flip(stencil)  # s(-d)
    if flavor == "classical":
        return _convolve(stencil, values)
    if flavor != "neumann":
        raise ValueError(f"unknown flavor {flavor!r}")
    masks = [grid.half_mask(tag) for tag in ("plus", "minus")]
    parts = np.stack([np.where(m, values, 0.0) for m in masks])
    if adjoint:
        # R^* f = sum over halves of mask (D + D~), D = s(-.) * f_half
        direct = _convolve(stencil, parts)
        images = np.flip(direct, axis=-1)
        conv = direct + images
    else:
        # on each half the Neumann operator is the free one applied to the even extension
        conv = _convolve(stencil, parts + np.flip(parts, axis=-1))
    return np.where(masks[0], conv[0], 0.0) + np.where(masks[1], conv[1], 0.0)


# ---------------------------------------------------------------- dense route


def _pairs(grid: Grid):
    P = grid.points()
    return P[:, None, :], P[None, :, :]


def _check_matrix_size(grid: Grid, config: OperatorConfig):
    if grid.size > config.max_matrix_size:
        raise ValueError(
            f"explicit-matrix mode limited to {config.max_matrix_size} samples, grid has {grid.size}"
        )


def operator_matrix(
    grid: Grid,
    kind: Literal["semigroup", "Q", "riesz"],
    *,
    t: float | None = None,
    l: int = 1,
    flavor: Flavor = "neumann",
    config: OperatorConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Dense quadrature matrix A with (T f)(x_i) = sum_j A[i, j] f(y_j).

    Assembled from the pointwise kernels, not from the stencils. ``t`` is the
    heat time for ``semigroup`` and the spatial scale for ``Q`` (Q_{t^2}).
    """
    _check_matrix_size(grid, config)
    X, Y = _pairs(grid)
    hv = grid.cell_volume
    if kind == "semigroup":
        if t is None or t <= 0:
            raise ValueError("heat time t must be positive")
        if t < grid.spacing**2 / 4:
            return np.eye(grid.size)
        if flavor == "neumann":
            return kernels.neumann_heat_kernel(t, X, Y) * hv
        return kernels.classical_heat_kernel(t, X, Y) * hv
    if kind == "Q":
        if t is None or t <= 0:
            raise ValueError("scale t must be positive")
        s = t * t
        if s < grid.spacing**2 / 4:
            return np.zeros((grid.size, grid.size))
        return -s * kernels.heat_kernel_time_derivative(s, X, Y, flavor) * hv
    if kind == "riesz":
        rho_h = config.pv_exclusion_radius * grid.spacing * (1 - 1e-12)
        X, Y = np.broadcast_arrays(X, Y)
        A = np.zeros(X.shape[:2])
        near = np.sqrt(np.sum((X - Y) ** 2, axis=-1)) < rho_h
        A[~near] = kernels.classical_riesz_kernel(l, X[~near], Y[~near])
        if flavor == "neumann":
            Yr = Y.copy()
            Yr[..., -1] *= -1
            near_img = np.sqrt(np.sum((X - Yr) ** 2, axis=-1)) < rho_h
            A[~near_img] += kernels.neumann_correction_kernel(l, X[~near_img], Y[~near_img])
            A *= kernels.heaviside(X[..., -1] * Y[..., -1])
        return A * hv
    raise ValueError(f"unknown operator kind {kind!r}")


def dump_operator_csv(path, matrix: np.ndarray) -> None:
    """Write a dense operator as CSV (row i = output sample i)."""
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g")


def _matvec(f: GridFunction, A: np.ndarray, adjoint: bool) -> GridFunction:
    v = (A.T if adjoint else A) @ f.flat()
    return GridFunction(f.grid, v)


# ---------------------------------------------------------------- operators


def apply_semigroup(
    f: GridFunction, t: float, flavor: Flavor = "neumann", config: OperatorConfig = DEFAULT_CONFIG
) -> GridFunction:
    """e^{-t L} f at heat time t, L = Laplacian (classical) or Neumann Laplacian.

    Below the grid resolution (t < h^2/4) the identity is returned.
    """
    if t <= 0:
        raise ValueError("heat time t must be positive")
    grid = f.grid
    if t < grid.spacing**2 / 4:
        return GridFunction(grid, f.values)
    if config.mode == "matrix":
        return _matvec(f, operator_matrix(grid, "semigroup", t=t, flavor=flavor, config=config), False)
    st = _heat_stencil(grid, t)
    return GridFunction(grid, _apply_stencil(grid, st, f.values, flavor, False))


def apply_Q(
    f: GridFunction, t: float, flavor: Flavor = "neumann", config: OperatorConfig = DEFAULT_CONFIG
) -> GridFunction:
    """Q_{t^2} f = t^2 L e^{-t^2 L} f, via the analytic time derivative of the kernel."""
    if t <= 0:
        raise ValueError("scale t must be positive")
    grid = f.grid
    s = t * t
    if s < grid.spacing**2 / 4:
        return grid.zeros()
    if config.mode == "matrix":
        return _matvec(f, operator_matrix(grid, "Q", t=t, flavor=flavor, config=config), False)
    st = _q_stencil(grid, s)
    return GridFunction(grid, _apply_stencil(grid, st, f.values, flavor, False))


def apply_riesz(
    f: GridFunction,
    l: int = 1,
    adjoint: bool = False,
    flavor: Flavor = "neumann",
    config: OperatorConfig = DEFAULT_CONFIG,
) -> GridFunction:
    """Principal-value quadrature of the l-th Riesz transform (or its adjoint)."""
    grid = f.grid
    if not 1 <= l <= grid.dimension:
        raise ValueError(f"axis index l must be in 1..{grid.dimension}")
    if config.mode == "matrix":
        A = operator_matrix(grid, "riesz", l=l, flavor=flavor, config=config)
        return _matvec(f, A, adjoint)
    st = _riesz_stencil(grid, l, config.pv_exclusion_radius)
    return GridFunction(grid, _apply_stencil(grid, st, f.values, flavor, adjoint))


def riesz_at_point(
    f: GridFunction, x, l: int = 1, flavor: Flavor = "neumann", config: OperatorConfig = DEFAULT_CONFIG
) -> float:
    """R_l f at an arbitrary point x (not necessarily a sample), same p.v. rule."""
    grid = f.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Y = grid.points()
    vals = f.flat()
    rho_h = config.pv_exclusion_radius * grid.spacing * (1 - 1e-12)
    X = np.broadcast_to(x, Y.shape)
    far = np.sqrt(np.sum((Y - x) ** 2, axis=-1)) >= rho_h
    weights = np.zeros(len(Y))
    weights[far] = kernels.classical_riesz_kernel(l, X[far], Y[far])
    if flavor == "neumann":
        Yr = Y.copy()
        Yr[:, -1] *= -1
        far_img = np.sqrt(np.sum((Yr - x) ** 2, axis=-1)) >= rho_h
        weights[far_img] += kernels.neumann_correction_kernel(l, X[far_img], Y[far_img])
        weights *= kernels.heaviside(x[-1] * Y[:, -1])
    elif flavor != "classical":
        raise ValueError(f"unknown flavor {flavor!r}")
    total = np.dot(weights, vals)
    return float(total * grid.cell_volume)


def commutator(
    b: GridFunction, f: GridFunction, l: int = 1, flavor: Flavor = "neumann",
    config: OperatorConfig = DEFAULT_CONFIG,
) -> GridFunction:
    """[b, R_l] f = b R_l f - R_l(b f)."""
    b._check(f)
    return b * apply_riesz(f, l, False, flavor, config) - apply_riesz(b * f, l, False, flavor, config)


def pi_form(
    h: GridFunction, g: GridFunction, l: int = 1, flavor: Flavor = "neumann",
    config: OperatorConfig = DEFAULT_CONFIG,
) -> GridFunction:
    """Pi_l(h, g) = h R_l g - g R_l^* h."""
    h._check(g)
    return h * apply_riesz(g, l, False, flavor, config) - g * apply_riesz(h, l, True, flavor, config)


def fs_synthesize(
    bs: Sequence[GridFunction], flavor: Flavor = "neumann", config: OperatorConfig = DEFAULT_CONFIG
) -> GridFunction:
    """b_0 + sum_j R_j^* b_j for a list (b_0, ..., b_n)."""
    bs = list(bs)
    if not bs:
        raise ValueError("need at least b_0")
    grid = bs[0].grid
    if len(bs) != grid.dimension + 1:
        raise ValueError(f"expected {grid.dimension + 1} functions, got {len(bs)}")
    out = bs[0]
    for j, bj in enumerate(bs[1:], start=1):
        out = out + apply_riesz(bj, j, True, flavor, config)
    return out
