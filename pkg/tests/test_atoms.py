import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_hardy.atoms import (
    AtomicDecomposition,
    NeumannAtomWitness,
    WeakAtom,
    check_cancellation,
    counterexample_function,
    discrete_neumann_laplacian,
    haar_atomic_decomposition,
    half_space_means,
    support_anchor,
    validate_neumann_atom,
)
from neumann_hardy.functionals import h1_norm
from neumann_hardy.grid import Ball, Grid, GridFunction, integrate, norm
from neumann_hardy.lab.testfunctions import gaussian_mixture, half_mean_free


def _bump(grid, ball, scale=1.0):
    X = grid.coordinates()
    d2 = sum((x - c) ** 2 for x, c in zip(X, ball.center)) / ball.radius**2
    with np.errstate(divide="ignore", over="ignore"):
        v = np.where(d2 < 1, np.exp(-1 / np.maximum(1 - d2, 1e-300)) * math.e, 0.0)
    return GridFunction(grid, scale * v)


def test_discrete_laplacian_of_quadratic():
    g = Grid(1, 4.0, 64)
    u = g.sample(lambda x: (x - 2.0) ** 2 * (np.abs(x - 2) < 1.5))
    lap = discrete_neumann_laplacian(u).values
    inside = np.abs(g.axis - 2) < 1.3
    assert np.allclose(lap[inside], -2.0)


def test_discrete_laplacian_respects_the_hyperplane():
    # a function constant on each half is annihilated away from the box edge
    g = Grid(2, 2.0, 16)
    u = g.function(np.where(g.half_mask("plus"), 3.0, -1.0))
    lap = discrete_neumann_laplacian(u).values
    assert np.allclose(lap[2:-2, 2:-2], 0.0)


def test_validate_neumann_atom_accepts_scaled_bump():
    g = Grid(1, 4.0, 512)
    ball = Ball((2.0,), 1.0)
    # second differences of the bump reach ~ 20 / r^2, so a 1/40 scale keeps every size bound
    b = _bump(g, ball, ball.radius**2 / ball.volume() / 40)
    a = discrete_neumann_laplacian(b)
    rep = validate_neumann_atom(NeumannAtomWitness(1, b, ball, a))
    assert rep.passed, rep.to_dict()


def test_validate_neumann_atom_reports_violations():
    g = Grid(1, 4.0, 512)
    ball = Ball((2.0,), 1.0)
    b = _bump(g, Ball((2.5,), 1.0), 1 / 40)
    a = discrete_neumann_laplacian(b)
    rep = validate_neumann_atom(NeumannAtomWitness(1, b, ball, a))
    assert not rep.support_ok
    rep = validate_neumann_atom(NeumannAtomWitness(1, _bump(g, ball, 1 / 40), ball, a))
    assert not rep.laplacian_ok
    zero = g.zeros()
    assert validate_neumann_atom(NeumannAtomWitness(1, zero, ball, zero)).passed


def test_cancellation_of_counterexample():
    g = Grid(1, 4.0, 1024)
    c = check_cancellation(counterexample_function(g), Ball((0.0,), 1.0 + 1e-9))
    assert abs(c.full) < 1e-12
    assert c.plus == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert not c.passes(straddles=True)
    assert c.passes(straddles=False)
    with pytest.raises(ValueError):
        counterexample_function(Grid(2, 4.0, 16))


def test_cancellation_inside_upper_half():
    g = Grid(1, 4.0, 256)
    a = g.sample(lambda x: np.where((x > 1) & (x < 2), 1.0, 0.0))
    c = check_cancellation(a, Ball((1.5,), 0.6))
    assert c.plus == c.full and c.minus == 0.0


def test_weak_atom_violations():
    g = Grid(1, 4.0, 256)
    ball = Ball((1.5,), 0.5)
    good = g.sample(lambda x: np.where(np.abs(x - 1.5) < 0.5, np.sign(x - 1.5), 0.0))
    assert WeakAtom.from_function(ball, good).violations() == []
    bad = g.sample(lambda x: np.where(np.abs(x - 1.5) < 0.5, 2.0, 0.0))
    msgs = WeakAtom.from_function(ball, bad).violations()
    assert any("integral" in m for m in msgs) and any("sup" in m for m in msgs)


def test_haar_rejects_nonzero_half_means():
    g = Grid(1, 4.0, 64)
    with pytest.raises(ValueError, match="mean"):
        haar_atomic_decomposition(g.function(np.ones(g.shape)))


def test_haar_of_zero_and_of_single_atom():
    g = Grid(1, 16.0, 4096)
    assert len(haar_atomic_decomposition(g.zeros())) == 0
    a = g.sample(lambda x: np.where((x > 2) & (x < 3), 0.5, 0.0) - np.where((x > 3) & (x < 4), 0.5, 0.0))
    d = haar_atomic_decomposition(a)
    assert d.l1_cost <= 4 * h1_norm(a, "max")
    assert norm(d.reconstruct() - a, 2) < 1e-12


@pytest.mark.parametrize("anchor", [None, "support"])
def test_haar_atoms_are_valid_and_reconstruct(anchor):
    g = Grid(1, 16.0, 2048)
    f = half_mean_free(gaussian_mixture(g, np.random.default_rng(7)))
    d = haar_atomic_decomposition(f, anchor=anchor)
    assert norm(d.reconstruct() - f, 2) < 1e-8
    for lam, atom in d.terms:
        assert atom.violations() == []


def test_haar_two_dimensional():
    g = Grid(2, 4.0, 32)
    f = half_mean_free(gaussian_mixture(g, np.random.default_rng(3)))
    d = haar_atomic_decomposition(f)
    assert norm(d.reconstruct() - f, 2) < 1e-8
    assert all(not atom.violations() for _, atom in d.terms)


def test_haar_depth_limit_keeps_reconstruction():
    g = Grid(1, 16.0, 1024)
    f = half_mean_free(gaussian_mixture(g, np.random.default_rng(9)))
    full = haar_atomic_decomposition(f)
    short = haar_atomic_decomposition(f, depth=2)
    assert len(short) < len(full)
    assert norm(short.reconstruct() - f, 2) < 1e-8


def test_support_anchor_and_cost_stability():
    costs = []
    for N in (2048, 4096):
        g = Grid(1, 16.0, N)
        f = g.sample(lambda x: np.where((x > 5) & (x < 6), np.sin(2 * np.pi * (x - 5)), 0.0))
        anc = support_anchor(f)
        assert g.axis[anc["plus"][0]] > 5
        costs.append(haar_atomic_decomposition(f, anchor="support").l1_cost)
    assert abs(costs[1] / costs[0] - 1) < 0.10


def test_decomposition_json(tmp_path):
    g = Grid(1, 4.0, 64)
    f = g.sample(lambda x: np.where((x > 1) & (x < 2), np.sign(x - 1.5), 0.0))
    d = haar_atomic_decomposition(f)
    d.to_json(tmp_path / "dec.json", tmp_path / "atoms")
    doc = json.loads((tmp_path / "dec.json").read_text())
    rows = doc["terms"]
    assert len(rows) == len(d) and doc["l1_cost"] == pytest.approx(d.l1_cost)
    assert {"lambda", "ball", "atom_csv_ref"} <= set(rows[0])
    back = GridFunction.from_csv(rows[0]["atom_csv_ref"])
    assert np.allclose(back.values * rows[0]["lambda"], d.terms[0][0] * d.terms[0][1].values.values)


@given(st.integers(0, 2**32 - 1))
def test_cancellation_is_additive_and_atoms_valid(seed):
    g = Grid(1, 4.0, 128)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape)
    f = g.function(v)
    c = check_cancellation(f, Ball((0.0,), 5.0))
    assert c.full == pytest.approx(c.plus + c.minus, abs=1e-12)
    mp, mm = half_space_means(f)
    # half_space_means returns integrals; each half has length L
    f = g.function(np.where(g.half_mask("plus"), v - mp / 4.0, v - mm / 4.0))
    d = haar_atomic_decomposition(f, anchor="support" if seed % 2 else None)
    assert norm(d.reconstruct() - f, 2) < 1e-10
    assert all(not atom.violations() for _, atom in d.terms)
