import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_hardy.atoms import counterexample_function
from neumann_hardy.grid import (
    Ball,
    Grid,
    GridFunction,
    ball_indicator,
    even_extension,
    inner,
    integrate,
    norm,
    reflect_point,
    restrict,
)


def test_cell_centred_samples_avoid_the_hyperplane():
    g = Grid(1, 4.0, 8)
    assert np.allclose(g.axis, [-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5])
    assert g.spacing == 1.0
    assert not np.any(g.axis == 0)


@pytest.mark.parametrize("bad", [dict(dimension=3), dict(points_per_axis=7), dict(half_width=0.0)])
def test_grid_validation(bad):
    kw = dict(dimension=1, half_width=1.0, points_per_axis=8) | bad
    with pytest.raises(ValueError):
        Grid(**kw)


def test_reflection_is_a_flip_of_the_last_axis(grid2, rng):
    f = grid2.function(rng.standard_normal(grid2.shape))
    X, Y = grid2.coordinates()
    refl = grid2.reflect_values(f.values)
    # value at (x, -y) equals the value stored at the mirrored index
    assert np.array_equal(refl[:, ::-1], f.values)
    assert np.allclose(grid2.reflect_values(Y), -Y)
    assert np.allclose(reflect_point([1.0, 2.0]), [1.0, -2.0])


def test_even_extension_of_counterexample():
    g = Grid(1, 4.0, 1024)
    f = counterexample_function(g)
    fe = even_extension(f, "plus")
    x = g.axis
    want = np.where(np.abs(x) <= 1, 1 / math.sqrt(2), 0.0)
    assert np.allclose(fe.values, want, atol=1e-15)
    assert abs(integrate(f)) < 1e-12
    assert abs(norm(f, 2) - 1.0) < 1e-10


def test_norms_and_inner(grid1):
    f = grid1.sample(lambda x: np.exp(-(x**2)))
    assert norm(f, 1) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert norm(f, 2) ** 2 == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)
    assert norm(f, np.inf) <= 1.0
    assert inner(f, f) == pytest.approx(norm(f, 2) ** 2)
    with pytest.raises(ValueError):
        norm(f, 3)


def test_gridfunction_is_immutable_and_checked(grid1, grid2):
    f = grid1.zeros()
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        GridFunction(grid1, np.ones(3))
    with pytest.raises(ValueError):
        GridFunction(grid1, np.full(grid1.shape, np.nan))
    with pytest.raises(ValueError):
        f + Grid(1, 8.0, 256).zeros()


def test_csv_roundtrip(tmp_path, grid2, rng):
    f = grid2.function(rng.standard_normal(grid2.shape))
    f.to_csv(tmp_path / "f.csv")
    g = GridFunction.from_csv(tmp_path / "f.csv")
    assert g.grid == grid2
    assert np.array_equal(g.values, f.values)


def test_ball_helpers(grid2):
    b = Ball((0.0, 0.0), 1.0)
    assert b.volume() == pytest.approx(math.pi)
    assert b.straddles_hyperplane()
    assert not Ball((0.0, 2.0), 1.0).straddles_hyperplane()
    ind = ball_indicator(grid2, b)
    # cell-centred count of the unit disc at h = 1/4
    assert integrate(ind) == pytest.approx(math.pi, rel=0.05)
    with pytest.raises(ValueError):
        Ball((0.0,), 0.0)
    with pytest.warns(UserWarning):
        ball_indicator(grid2, Ball((3.9, 0.0), 0.5))


@given(st.integers(0, 2**32 - 1))
def test_restrictions_split_f(seed):
    g = Grid(2, 2.0, 16)
    f = g.function(np.random.default_rng(seed).standard_normal(g.shape))
    parts = restrict(f, "plus") + restrict(f, "minus")
    assert np.array_equal(parts.values, f.values)
    # even extensions are reflection invariant and agree with f on their half
    for tag in ("plus", "minus"):
        fe = even_extension(f, tag)
        assert np.array_equal(g.reflect_values(fe.values), fe.values)
        m = g.half_mask(tag)
        assert np.array_equal(fe.values[m], f.values[m])
