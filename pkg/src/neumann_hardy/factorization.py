"""Weak factorization through the bilinear forms Pi_l(h, g) = h R_l g - g R_l^* h.

A weak atom a on B(x0, r) is approximately factored with g the indicator of a
far ball B(y0, r), |x0 - y0| = M r, and h = a / R_l g(x0). The residual
a - Pi_l(h, g) lives on the two balls and is O(1 / (M r^n)) there. The
Uchiyama loop re-decomposes the residual into atoms and repeats.

Since h and g have disjoint compact supports far apart, Pi_l(h, g) only needs
the kernel block between the two supports: the p.v. exclusion never applies
there, so the local evaluation coincides with the global grid quadrature.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import integrate

from . import kernels
from .atoms import WeakAtom, haar_atomic_decomposition, support_anchor
from .functionals import ScaleGrid, h1_norm
from .grid import Ball, Grid, GridFunction

logger = logging.getLogger(__name__)


class PlacementError(ValueError):
    """B(y0, r) does not fit in the box on the same side of the hyperplane as x0."""


def choose_M(epsilon: float) -> int:
    """Smallest power of two M > 10 with log(M) / M < epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    M = 16
    while math.log(M) / M >= epsilon:
        M *= 2
    return M


# ---------------------------------------------------------------- local patches


class Patch(NamedTuple):
    """Values on the index box starting at ``offset``."""

    offset: tuple[int, ...]
    values: np.ndarray

    @property
    def slices(self):
        return tuple(slice(o, o + s) for o, s in zip(self.offset, self.values.shape))

    def expand(self, grid: Grid) -> GridFunction:
        out = np.zeros(grid.shape)
        out[self.slices] = self.values
        return GridFunction(grid, out)


def _patch_points(grid: Grid, patch: Patch) -> np.ndarray:
    axes = [grid.axis[sl] for sl in patch.slices]
    if grid.dimension == 1:
        return axes[0][:, None]
    X = np.meshgrid(*axes, indexing="ij")
    return np.stack([c.ravel() for c in X], axis=-1)


def ball_patch(grid: Grid, ball: Ball) -> Patch:
    """Indicator of the samples strictly inside ``ball``, on its bounding index box."""
    h, L, N = grid.spacing, grid.half_width, grid.points_per_axis
    lo, hi = [], []
    for c in ball.center:
        lo.append(max(0, int(math.floor((c - ball.radius + L) / h - 0.5))))
        hi.append(min(N, int(math.ceil((c + ball.radius + L) / h + 0.5))))
    offset = tuple(lo)
    axes = [grid.axis[a:b] for a, b in zip(lo, hi)]
    if grid.dimension == 1:
        d2 = (axes[0] - ball.center[0]) ** 2
    else:
        X = np.meshgrid(*axes, indexing="ij")
        d2 = sum((x - c) ** 2 for x, c in zip(X, ball.center))
    return Patch(offset, (d2 < ball.radius**2).astype(float))


def _riesz_block(grid: Grid, l: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """K[i, j] = R_{N,l}(x_i, y_j) for disjoint, well separated point sets."""
    return kernels.neumann_riesz_kernel(l, xs[:, None, :], ys[None, :, :])


# ---------------------------------------------------------------- single atom


@dataclass
class FactorPair:
    grid: Grid
    g_patch: Patch
    h_patch: Patch
    l: int
    M: int
    x0: tuple[float, ...]
    y0: tuple[float, ...]
    r: float
    riesz_at_x0: float

    @property
    def g(self) -> GridFunction:
        return self.g_patch.expand(self.grid)

    @property
    def h(self) -> GridFunction:
        return self.h_patch.expand(self.grid)

    def norms(self) -> tuple[float, float]:
        hv = self.grid.cell_volume
        return (
            math.sqrt(hv * float(np.sum(self.g_patch.values**2))),
            math.sqrt(hv * float(np.sum(self.h_patch.values**2))),
        )

    @property
    def cost(self) -> float:
        """|g|_2 |h|_2."""
        a, b = self.norms()
        return a * b

    def to_dict(self) -> dict:
        ng, nh = self.norms()
        return {
            "l": self.l,
            "M": self.M,
            "x0": list(self.x0),
            "y0": list(self.y0),
            "r": self.r,
            "riesz_g_at_x0": self.riesz_at_x0,
            "g_norm": ng,
            "h_norm": nh,
        }


def _place_y0(grid: Grid, x0: np.ndarray, r: float, M: int) -> np.ndarray:
    """y0 with |x0_i - y0_i| = M r / sqrt(n) on every axis, B(y0, r) inside the box and x0's half.

    Offsets default to y0 = x0 - M r / sqrt(n) (towards the hyperplane in the
    normal direction when x0 is in the upper half); offending signs are flipped.
    """
    n = grid.dimension
    L = grid.half_width
    step = M * r / math.sqrt(n)
    side = 1.0 if x0[-1] > 0 else -1.0
    y0 = np.empty(n)
    for i in range(n):
        # first choice moves towards the hyperplane along the normal axis
        pref = -side if i == n - 1 else -1.0
        for s in (pref, -pref):
            c = x0[i] + s * step
            ok = abs(c) + r <= L + 1e-12
            if i == n - 1:
                ok = ok and side * c >= r - 1e-12
            if ok:
                y0[i] = c
                break
        else:
            raise PlacementError(
                f"cannot place B(y0, {r:g}) at distance {M * r:g} from x0 = {tuple(x0)} "
                f"inside [-{L:g}, {L:g}]^{n}; increase L"
            )
    return y0


class _Factored(NamedTuple):
    pair: FactorPair
    pi_h: Patch  # Pi on supp h  (= h R g)
    pi_g: Patch  # Pi on supp g  (= -g R^* h)


def _factor_local(atom: WeakAtom, M: int, l: int, balance: bool) -> _Factored:
    grid = atom.grid
    hv = grid.cell_volume
    x0 = np.array(atom.ball.center, dtype=float)
    r = atom.ball.radius
    if x0[-1] == 0.0:
        x0[-1] += r / 100
    y0 = _place_y0(grid, x0, r, M)

    g = ball_patch(grid, Ball(tuple(y0), r))
    gpts = _patch_points(grid, g)
    gsel = g.values.ravel() > 0
    gpts = gpts[gsel]
    if not len(gpts):
        raise PlacementError(f"B(y0, {r:g}) contains no samples")

    r_at_x0 = float(np.sum(kernels.neumann_riesz_kernel(l, x0[None, :], gpts)) * hv)

    apts = _patch_points(grid, Patch(atom.offset, atom.patch))
    inside = np.sum((apts - np.asarray(atom.ball.center)) ** 2, axis=1) < r * r
    a_all = atom.patch.ravel()
    a = a_all[inside]
    K = _riesz_block(grid, l, apts[inside], gpts)  # rows: B(x0, r), cols: supp g
    Rg = K.sum(axis=1) * hv  # R g on B(x0, r) (g = 1 on its samples)

    hin = a / r_at_x0
    if balance:
        # add beta * chi_B(x0) to h so that a - h R g has zero mean on B(x0, r)
        beta = (r_at_x0 * a.sum() - np.dot(a, Rg)) / Rg.sum()
        hin = (a + beta) / r_at_x0

    hvals = np.zeros_like(a_all)
    hvals[inside] = hin
    pi_h = np.zeros_like(a_all)
    pi_h[inside] = hin * Rg
    Rstar_h = (K.T @ hin) * hv  # R^* h on supp g
    pi_g_vals = np.zeros(g.values.size)
    pi_g_vals[gsel] = -Rstar_h  # -g R^* h with g = 1

    h_patch = Patch(atom.offset, hvals.reshape(atom.patch.shape))
    pair = FactorPair(grid, g, h_patch, l, M, tuple(x0), tuple(y0), r, r_at_x0)
    return _Factored(
        pair,
        Patch(atom.offset, pi_h.reshape(atom.patch.shape)),
        Patch(g.offset, pi_g_vals.reshape(g.values.shape)),
    )


def approx_factor_atom(
    a: WeakAtom, epsilon: float, l: int = 1, M: int | None = None, balance: bool = False
) -> tuple[FactorPair, GridFunction]:
    """Approximate factorization a ~ Pi_l(h, g); returns the pair and W = a - Pi_l(h, g).

    ``M`` defaults to :func:`choose_M` of ``epsilon``. With ``balance`` the
    factor h gets a constant correction on B(x0, r) so that the residual has
    mean zero on each of the two balls separately (same size bounds).
    """
    grid = a.grid
    if M is None:
        M = choose_M(epsilon)
    fac = _factor_local(a, M, l, balance)
    W = np.zeros(grid.shape)
    W[a.slices] += a.patch - fac.pi_h.values
    W[fac.pi_g.slices] -= fac.pi_g.values
    W = GridFunction(grid, W)
    total = grid.cell_volume * math.fsum(W.flat())
    if abs(total) > 1e-8:
        raise ArithmeticError(f"residual integral {total:.3e} is not zero")
    return fac.pair, W


def residual_envelope_constant(pair: FactorPair, W: GridFunction) -> float:
    """Smallest C with |W| <= C / (M r^n) (chi_B(x0,r) + chi_B(y0,r)) on the grid (inf if W leaks)."""
    grid = W.grid
    env = np.zeros(grid.shape)
    for c in (pair.x0, pair.y0):
        p = ball_patch(grid, Ball(c, pair.r))
        env[p.slices] += p.values
    w = np.abs(W.values)
    if np.any((env == 0) & (w > 0)):
        return math.inf
    scale = pair.M * pair.r**grid.dimension
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.max(np.where(env > 0, w * scale / np.maximum(env, 1), 0.0)))


# ---------------------------------------------------------------- mass bound


class RieszMass(NamedTuple):
    value: float
    exponent: float


def _mass_geometry(M: float, r: float, n: int, height: float):
    x0 = np.zeros(n)
    x0[-1] = height * M * r
    y0 = x0 - M * r / math.sqrt(n)
    return x0, y0


def _riesz_ball_integral(l: int, x0, y0, r: float) -> float:
    """int_{B(y0, r)} R_{N,l}(x0, y) dy by adaptive quadrature."""
    n = len(x0)

    def kern(*y):
        return float(kernels.neumann_riesz_kernel(l, x0, np.array(y)))

    if n == 1:
        val, _ = integrate.quad(kern, y0[0] - r, y0[0] + r, epsabs=0, epsrel=1e-11, limit=200)
        return val

    def polar(rho, th):
        return kern(y0[0] + rho * math.cos(th), y0[1] + rho * math.sin(th)) * rho

    val, _ = integrate.dblquad(lambda rho, th: polar(rho, th), 0, 2 * math.pi, 0, r, epsabs=0, epsrel=1e-10)
    return val


def riesz_mass_lower_bound(M: float, r: float = 1.0, l: int = 1, n: int = 1, height: float = 8.0) -> RieszMass:
    """|R_{N,l} chi_B(y0, r)(x0)| by grid-free quadrature, plus its local M-scaling exponent.

    x0 sits on the normal axis at height ``height * M * r`` and
    y0 = x0 - M r / sqrt(n) on every axis, so B(y0, r) stays in the upper half.
    The exponent is the log-log slope between M/2 and 2M.
    """
    if M <= 10:
        raise ValueError("need M > 10")

    def val(m):
        x0, y0 = _mass_geometry(m, r, n, height)
        return abs(_riesz_ball_integral(l, x0, y0, r))

    v = val(M)
    slope = (math.log(val(2 * M)) - math.log(val(M / 2))) / math.log(4)
    return RieszMass(v, slope)


def fit_mass_exponent(Ms, r: float = 1.0, l: int = 1, n: int = 1, height: float = 8.0) -> tuple[float, list[float]]:
    """Least-squares slope of log |R g(x0)| against log M."""
    vals = [riesz_mass_lower_bound(M, r, l, n, height).value for M in Ms]
    slope = float(np.polyfit(np.log(Ms), np.log(vals), 1)[0])
    return slope, vals


# ---------------------------------------------------------------- two bumps


def two_bump_function(M: float, r: float, grid: Grid) -> GridFunction:
    """r^{-n} (chi_B(x0, r) - chi_B(y0, r)) with x0 = 1.5 M r e_n, y0 = x0 - M r / sqrt(n) (1, ..., 1).

    The box must keep both balls at distance >= M r from its boundary.
    """
    n = grid.dimension
    x0 = np.zeros(n)
    x0[-1] = 1.5 * M * r
    y0 = x0 - M * r / math.sqrt(n)
    L = grid.half_width
    for c in (x0, y0):
        if np.any(np.abs(c) + r + M * r > L + 1e-12):
            raise ValueError(f"box [-{L}, {L}]^{n} too small for two bumps with M = {M}, r = {r}")
    bx = ball_patch(grid, Ball(tuple(x0), r)).expand(grid)
    by = ball_patch(grid, Ball(tuple(y0), r)).expand(grid)
    return (bx - by) / r**n


def two_bump_h1_norm(M: float, r: float, grid: Grid, scales: ScaleGrid | None = None) -> float:
    """H^1 norm (radial maximal characterization) of the two-bump function."""
    return h1_norm(two_bump_function(M, r, grid), "max", "neumann", scales)


# ---------------------------------------------------------------- Uchiyama loop


class NonContractingError(RuntimeError):
    def __init__(self, msg, ledger):
        super().__init__(msg)
        self.ledger = ledger


@dataclass
class Level:
    terms: list[tuple[float, FactorPair]]
    residual_h1: float
    ratio: float
    carried: int = 0
    carried_l1: float = 0.0
    reduced_M: int = 0

    @property
    def cost(self) -> float:
        return math.fsum(abs(lam) * p.cost for lam, p in self.terms)


@dataclass
class FactorizationLedger:
    epsilon: float
    l: int
    initial_h1: float
    levels: list[Level] = field(default_factory=list)
    residual: GridFunction | None = None
    aborted: str | None = None

    @property
    def total_l1_cost(self) -> float:
        return math.fsum(lv.cost for lv in self.levels)

    @property
    def residual_norms(self) -> list[float]:
        return [lv.residual_h1 for lv in self.levels]

    @property
    def ratios(self) -> list[float]:
        return [lv.ratio for lv in self.levels]

    def approximation(self, grid: Grid) -> GridFunction:
        """sum_k sum_j lambda_j^k Pi_l(h_j^k, g_j^k), recomputed from the stored pairs."""
        out = np.zeros(grid.shape)
        hv = grid.cell_volume
        for lv in self.levels:
            for lam, p in lv.terms:
                gpts = _patch_points(grid, p.g_patch)
                gsel = p.g_patch.values.ravel() > 0
                hpts = _patch_points(grid, p.h_patch)
                K = _riesz_block(grid, p.l, hpts, gpts[gsel])
                hv_ = p.h_patch.values.ravel()
                Rg = K.sum(axis=1) * hv
                out[p.h_patch.slices] += lam * (hv_ * Rg).reshape(p.h_patch.values.shape)
                pg = np.zeros(p.g_patch.values.size)
                pg[gsel] = (K.T @ hv_) * hv
                out[p.g_patch.slices] -= lam * pg.reshape(p.g_patch.values.shape)
        return GridFunction(grid, out)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "l": self.l,
            "initial_h1": self.initial_h1,
            "total_l1_cost": self.total_l1_cost,
            "aborted": self.aborted,
            "levels": [
                {
                    "level": k + 1,
                    "residual_h1": lv.residual_h1,
                    "ratio": lv.ratio,
                    "cost": lv.cost,
                    "pairs": len(lv.terms),
                    "carried": lv.carried,
                    "carried_l1": lv.carried_l1,
                    "reduced_M": lv.reduced_M,
                }
                for k, lv in enumerate(self.levels)
            ],
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "residual_h1", "ratio", "cost"])
            for k, lv in enumerate(self.levels):
                w.writerow([k + 1, repr(lv.residual_h1), repr(lv.ratio), repr(lv.cost)])


def weak_factorize(
    f: GridFunction,
    epsilon: float = 0.1,
    l: int = 1,
    K_max: int = 6,
    *,
    balance: bool = True,
    anchor: dict | str | None = "support",
    min_M: int = 16,
    tol: float = 1e-6,
    scales: ScaleGrid | None = None,
    abort_on_stall: bool = True,
) -> FactorizationLedger:
    """Iterate: decompose E_{k-1} into weak atoms, factor each, E_k = E_{k-1} - sum lambda Pi_l(h, g).

    Atoms whose partner ball does not fit in the box with M(epsilon) are
    retried with smaller powers of two down to ``min_M``; if none fits they
    stay in the residual unfactored (counted in ``carried``).

    ``balance=True`` makes each residual bump mean zero (see
    :func:`approx_factor_atom`); with ``balance=False`` the residual cascades to
    ever coarser scales and the loop typically stalls once those atoms no longer
    fit. ``anchor`` is computed once from f and reused at every level, so the
    dyadic cuts follow the data (see :func:`haar_atomic_decomposition`).
    """
    grid = f.grid
    M0 = choose_M(epsilon)
    norm0 = h1_norm(f, "max", "neumann", scales)
    ledger = FactorizationLedger(epsilon, l, norm0)
    E = np.array(f.values, dtype=float)
    prev = norm0
    if norm0 == 0.0:
        ledger.residual = GridFunction(grid, E)
        return ledger
    if isinstance(anchor, str):
        anchor = support_anchor(f)
    stalls = 0
    for k in range(1, K_max + 1):
        dec = haar_atomic_decomposition(GridFunction(grid, E), mean_tol=1e-8, anchor=anchor)
        terms = []
        carried, carried_l1, reduced = 0, 0.0, 0
        for lam, atom in dec.terms:
            fac = None
            M = M0
            while M >= min_M:
                try:
                    fac = _factor_local(atom, M, l, balance)
                    break
                except PlacementError:
                    M //= 2
            if fac is None:
                carried += 1
                carried_l1 += abs(lam)
                continue
            if M != M0:
                reduced += 1
            E[fac.pi_h.slices] -= lam * fac.pi_h.values
            E[fac.pi_g.slices] -= lam * fac.pi_g.values
            terms.append((lam, fac.pair))
        res = h1_norm(GridFunction(grid, E), "max", "neumann", scales)
        ratio = res / prev if prev > 0 else math.inf
        ledger.levels.append(Level(terms, res, ratio, carried, carried_l1, reduced))
        logger.info("level %d: residual %.4g ratio %.3f pairs %d carried %d", k, res, ratio, len(terms), carried)
        prev = res
        if res < tol:
            break
        stalls = stalls + 1 if ratio >= 1 else 0
        if stalls >= 2:
            ledger.aborted = f"residual ratio >= 1 at two consecutive levels (level {k})"
            ledger.residual = GridFunction(grid, E)
            if abort_on_stall:
                raise NonContractingError(ledger.aborted, ledger)
            break
    ledger.residual = GridFunction(grid, E)
    return ledger
