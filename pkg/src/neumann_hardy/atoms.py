"""Atoms: validators for Neumann atoms, cancellation checks, and a Haar-type atomic decomposition.

The factorization loop works with *weak atoms*: bounded, ball-supported,
mean-zero functions which, if the ball meets both half-spaces, also have mean
zero on each half. The decomposition here produces them from any function
with mean zero on each half-space by running a dyadic Haar cascade separately
on the two halves.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .grid import Ball, Grid, GridFunction, ball_mask, norm

logger = logging.getLogger(__name__)

CANCELLATION_TOL = 1e-10


# ---------------------------------------------------------------- Neumann atoms


def discrete_neumann_laplacian(u: GridFunction) -> GridFunction:
    """-(second differences)/h^2 with even-reflection ghost cells across {x_n = 0}.

    Each half-space is treated separately: the ghost value across the
    hyperplane is the sample's own value (zero normal derivative). Outside the
    box the function is taken to be zero.
    """
    grid = u.grid
    v = u.values
    h2 = grid.spacing**2
    N = grid.points_per_axis
    out = np.zeros(grid.shape)
    for axis in range(grid.dimension):
        p = np.pad(v, [(1, 1) if a == axis else (0, 0) for a in range(grid.dimension)])
        lo = np.take(p, np.arange(0, N), axis=axis)
        hi = np.take(p, np.arange(2, N + 2), axis=axis)
        if axis == grid.dimension - 1:
            # sample N/2 - 1 is just below the hyperplane, N/2 just above
            lo = lo.copy()
            hi = hi.copy()
            below = [slice(None)] * grid.dimension
            above = [slice(None)] * grid.dimension
            below[axis] = N // 2 - 1
            above[axis] = N // 2
            hi[tuple(below)] = v[tuple(below)]
            lo[tuple(above)] = v[tuple(above)]
        out += (2 * v - lo - hi) / h2
    return GridFunction(grid, out)


@dataclass(frozen=True, eq=False)
class NeumannAtomWitness:
    """Claimed atom a = Delta_N^M b with b attached to a ball."""

    order: int
    b: GridFunction
    ball: Ball
    a: GridFunction


@dataclass
class AtomValidationReport:
    laplacian_ok: bool
    laplacian_error: float
    support_ok: bool
    support_leak: list[float]
    size_ok: bool
    size_slack: list[float]

    @property
    def passed(self) -> bool:
        return self.laplacian_ok and self.support_ok and self.size_ok

    def to_dict(self) -> dict:
        return {
            "laplacian_ok": self.laplacian_ok,
            "laplacian_error": self.laplacian_error,
            "support_ok": self.support_ok,
            "support_leak": self.support_leak,
            "size_ok": self.size_ok,
            "size_slack": self.size_slack,
            "passed": self.passed,
        }


def validate_neumann_atom(w: NeumannAtomWitness, rtol: float = 1e-8) -> AtomValidationReport:
    """Check (i) a = Delta_N^M b, (ii) supports of Delta_N^k b, (iii) size bounds, k = 0..M."""
    grid = w.b.grid
    r = w.ball.radius
    vol = w.ball.volume()
    outside = ~ball_mask(grid, w.ball)
    bound = r ** (2 * w.order) / vol

    iterates = [w.b]
    for _ in range(w.order):
        iterates.append(discrete_neumann_laplacian(iterates[-1]))

    scale = max(norm(w.a, np.inf), norm(iterates[-1], np.inf))
    lap_err = float(np.max(np.abs(w.a.values - iterates[-1].values))) if grid.size else 0.0
    lap_ok = lap_err <= rtol * scale if scale > 0 else lap_err == 0.0

    leaks, slacks = [], []
    for k, u in enumerate(iterates):
        leak = float(np.max(np.abs(u.values[outside]), initial=0.0))
        leaks.append(leak)
        size = r ** (2 * k) * norm(u, np.inf)
        slacks.append(bound - size)
    tiny = 1e-12 * max(1.0, max(norm(u, np.inf) for u in iterates))
    return AtomValidationReport(
        laplacian_ok=bool(lap_ok),
        laplacian_error=lap_err,
        support_ok=all(v <= tiny for v in leaks),
        support_leak=leaks,
        size_ok=all(s >= -1e-12 * bound for s in slacks),
        size_slack=slacks,
    )


# ---------------------------------------------------------------- cancellation


class Cancellation(NamedTuple):
    full: float
    plus: float
    minus: float
    support_leak: float

    def passes(self, straddles: bool, tol: float = CANCELLATION_TOL) -> bool:
        ok = abs(self.full) <= tol and self.support_leak == 0.0
        if straddles:
            ok = ok and abs(self.plus) <= tol and abs(self.minus) <= tol
        return ok


def check_cancellation(a: GridFunction, ball: Ball) -> Cancellation:
    """Integrals of a over the whole space and over each half-space.

    ``support_leak`` is max |a| at samples outside the ball (0 when supported).
    """
    grid = a.grid
    hv = grid.cell_volume
    v = a.values
    plus = hv * math.fsum(v[grid.half_mask("plus")])
    minus = hv * math.fsum(v[grid.half_mask("minus")])
    full = hv * math.fsum(v.ravel())
    leak = float(np.max(np.abs(v[~ball_mask(grid, ball)]), initial=0.0))
    return Cancellation(full, plus, minus, leak)


# ---------------------------------------------------------------- weak atoms


class WeakAtom:
    """Mean-zero function supported in ``ball``, bounded by ``linf_bound``.

    Values are kept as a patch of the grid (``offset`` = index of its first
    sample) and expanded to a full :class:`GridFunction` on demand.
    """

    def __init__(self, grid: Grid, ball: Ball, patch: np.ndarray, offset, linf_bound: float | None = None):
        self.grid = grid
        self.ball = ball
        self.patch = np.asarray(patch, dtype=float)
        self.offset = tuple(int(o) for o in np.atleast_1d(offset))
        if len(self.offset) != grid.dimension or self.patch.ndim != grid.dimension:
            raise ValueError("patch and offset must match the grid dimension")
        self.linf_bound = 1.0 / ball.volume() if linf_bound is None else float(linf_bound)

    @classmethod
    def from_function(cls, ball: Ball, f: GridFunction, linf_bound: float | None = None) -> WeakAtom:
        return cls(f.grid, ball, f.values, (0,) * f.grid.dimension, linf_bound)

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(o, o + s) for o, s in zip(self.offset, self.patch.shape))

    @property
    def values(self) -> GridFunction:
        full = np.zeros(self.grid.shape)
        full[self.slices] = self.patch
        return GridFunction(self.grid, full)

    def patch_coordinates(self) -> list[np.ndarray]:
        ax = self.grid.axis
        axes = [ax[sl] for sl in self.slices]
        if self.grid.dimension == 1:
            return axes
        return list(np.meshgrid(*axes, indexing="ij"))

    def cancellation(self) -> Cancellation:
        """Same numbers as :func:`check_cancellation` on the expanded values, computed on the patch."""
        coords = self.patch_coordinates()
        hv = self.grid.cell_volume
        v = self.patch
        xn = coords[-1]
        inside = sum((c - c0) ** 2 for c, c0 in zip(coords, self.ball.center)) < self.ball.radius**2
        return Cancellation(
            hv * math.fsum(v.ravel()),
            hv * math.fsum(v[xn > 0]),
            hv * math.fsum(v[xn < 0]),
            float(np.max(np.abs(v[~inside]), initial=0.0)),
        )

    def violations(self, tol: float = CANCELLATION_TOL) -> list[str]:
        """Invariant failures (empty list when the atom is valid)."""
        out = []
        c = self.cancellation()
        if c.support_leak > 0:
            out.append(f"support leaves the ball (max {c.support_leak:.3g})")
        sup = float(np.max(np.abs(self.patch), initial=0.0))
        if sup > self.linf_bound * (1 + 1e-12):
            out.append(f"sup {sup:.6g} exceeds bound {self.linf_bound:.6g}")
        if abs(c.full) > tol:
            out.append(f"integral {c.full:.3g} not zero")
        if self.ball.straddles_hyperplane() and (abs(c.plus) > tol or abs(c.minus) > tol):
            out.append(f"half-space integrals {c.plus:.3g}, {c.minus:.3g} not zero")
        return out

    def __repr__(self):
        return f"WeakAtom(ball={self.ball}, patch_shape={self.patch.shape})"


@dataclass
class AtomicDecomposition:
    grid: Grid
    terms: list[tuple[float, WeakAtom]] = field(default_factory=list)

    @property
    def l1_cost(self) -> float:
        return math.fsum(abs(lam) for lam, _ in self.terms)

    def __len__(self):
        return len(self.terms)

    def reconstruct(self) -> GridFunction:
        out = np.zeros(self.grid.shape)
        for lam, atom in self.terms:
            out[atom.slices] += lam * atom.patch
        return GridFunction(self.grid, out)

    def to_json(self, path, atom_dir=None) -> None:
        """Write {lambda, ball, atom_csv_ref} per term; atom CSVs go to ``atom_dir`` if given."""
        rows = []
        for k, (lam, atom) in enumerate(self.terms):
            ref = None
            if atom_dir is not None:
                atom_dir = Path(atom_dir)
                atom_dir.mkdir(parents=True, exist_ok=True)
                ref = str(atom_dir / f"atom_{k:05d}.csv")
                atom.values.to_csv(ref)
            rows.append({"lambda": lam, "ball": atom.ball.to_dict(), "atom_csv_ref": ref})
        doc = {"grid": self.grid.to_dict(), "l1_cost": self.l1_cost, "terms": rows}
        Path(path).write_text(json.dumps(doc, indent=2))


def _is_pow2(k: int) -> bool:
    return k > 0 and k & (k - 1) == 0


def half_space_means(f: GridFunction) -> tuple[float, float]:
    g = f.grid
    hv = g.cell_volume
    return (
        hv * math.fsum(f.values[g.half_mask("plus")]),
        hv * math.fsum(f.values[g.half_mask("minus")]),
    )


def support_anchor(f: GridFunction) -> dict[str, tuple[int, ...]]:
    """Per half-space, the first sample index of the support of f on each axis.

    Used to anchor the dyadic hierarchy so that compactly supported data sits
    inside blocks of its own size.
    """
    grid = f.grid
    out = {}
    for tag in ("plus", "minus"):
        mask = grid.half_mask(tag) & (f.values != 0)
        idx = np.argwhere(mask)
        if len(idx):
            out[tag] = tuple(int(i) for i in idx.min(axis=0))
        else:
            out[tag] = (0,) * grid.dimension
    return out


def haar_atomic_decomposition(
    f: GridFunction,
    depth: int | None = None,
    mean_tol: float = 1e-8,
    drop_tol: float = 0.0,
    anchor: dict | str | None = None,
) -> AtomicDecomposition:
    """Decompose f into L^inf-normalized weak atoms via a dyadic Haar cascade per half-space.

    Each half-space is covered by a tree of index boxes: a node of level j is
    the part of one anchored dyadic block (side 2^j cells, cut points at
    ``anchor + k 2^j`` on every axis) lying in that half. For each node Q the
    piece sum_children (mean_child - mean_Q) chi_child is emitted; at level
    ``depth`` below the root the remainder (f minus the coarser means) is
    emitted instead. A piece p gives lambda = |p|_inf |B| with atom p / lambda,
    B the smallest ball containing Q. Pieces with |p|_inf <= drop_tol |f|_inf
    are skipped.

    ``anchor``: None (cuts aligned with the hyperplane), ``"support"`` (see
    :func:`support_anchor`) or a dict {"plus": idx, "minus": idx}.
    """
    grid = f.grid
    n, N, h, L = grid.dimension, grid.points_per_axis, grid.spacing, grid.half_width
    half = N // 2
    for tag, m in zip(("plus", "minus"), half_space_means(f)):
        if abs(m) > mean_tol:
            raise ValueError(f"f has mean {m:.3e} on the {tag} half-space; need mean zero on each half")
    if anchor is None:
        anchor = {"plus": (0,) * (n - 1) + (half,), "minus": (0,) * (n - 1) + (half,)}
    elif anchor == "support":
        anchor = support_anchor(f)
    cut = drop_tol * norm(f, np.inf)
    dec = AtomicDecomposition(grid)
    v = np.array(f.values, dtype=float)

    def emit(piece, lo, hi):
        # exact mean zero up to rounding; the removed mean is rounding noise
        piece = piece - piece.mean()
        sup = float(np.max(np.abs(piece)))
        if sup == 0.0 or sup <= cut:
            return
        a = np.asarray(lo) * h - L
        b = np.asarray(hi) * h - L
        center = (a + b) / 2
        radius = float(np.sqrt(np.sum(((b - a) / 2) ** 2)))
        ball = Ball(tuple(center), radius)
        lam = sup * ball.volume()
        dec.terms.append((lam, WeakAtom(grid, ball, piece / lam, lo)))

    for tag in ("plus", "minus"):  # upper half first
        lo = [0] * n
        hi = [N] * n
        if tag == "plus":
            lo[-1] = half
        else:
            hi[-1] = half
        anc = tuple(int(a) for a in anchor[tag])
        j = max(int(math.ceil(math.log2(b - a))) for a, b in zip(lo, hi))
        block = v[tuple(slice(a, b) for a, b in zip(lo, hi))]
        _cascade(block - block.mean(), tuple(lo), j, anc, 0, depth, emit)
    return dec


def _cascade(block, lo, j, anchor, level, depth, emit):
    """Emit the detail piece of a mean-zero ``block`` (node at ``lo``, level ``j``) and recurse."""
    if block.size == 1 or j == 0:
        return
    hi = tuple(l_ + s for l_, s in zip(lo, block.shape))
    if depth is not None and level >= depth:
        emit(block, lo, hi)
        return
    s = 2 ** (j - 1)
    parts = []
    for l_, h_, a in zip(lo, hi, anchor):
        cuts = [l_]
        c = a + ((l_ - a) // s + 1) * s  # first cut strictly above l_
        while c < h_:
            cuts.append(c)
            c += s
        cuts.append(h_)
        parts.append(list(zip(cuts[:-1], cuts[1:])))
    kids = []
    for combo in np.ndindex(*(len(p) for p in parts)):
        ranges = [parts[ax][k] for ax, k in enumerate(combo)]
        sl = tuple(slice(a - l_, b - l_) for (a, b), l_ in zip(ranges, lo))
        kids.append((sl, tuple(a for a, _ in ranges)))
    if len(kids) == 1:
        _cascade(block, lo, j - 1, anchor, level, depth, emit)
        return
    piece = np.empty_like(block)
    means = []
    for sl, _ in kids:
        m = block[sl].mean()
        piece[sl] = m
        means.append(m)
    emit(piece, lo, hi)
    for (sl, klo), m in zip(kids, means):
        _cascade(block[sl] - m, klo, j - 1, anchor, level + 1, depth, emit)


def counterexample_function(grid: Grid) -> GridFunction:
    """chi_[0,1] / sqrt 2 - chi_[-1,0) / sqrt 2 on a 1-d grid."""
    if grid.dimension != 1:
        raise ValueError("the counterexample is one-dimensional")
    if grid.half_width < 2:
        raise ValueError("need L >= 2")
    x = grid.axis
    s = 1 / math.sqrt(2)
    return GridFunction(grid, np.where((x >= 0) & (x <= 1), s, 0.0) - np.where((x >= -1) & (x < 0), s, 0.0))
