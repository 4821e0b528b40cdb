import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neumann_hardy.atoms import WeakAtom
from neumann_hardy.factorization import (
    NonContractingError,
    PlacementError,
    approx_factor_atom,
    ball_patch,
    choose_M,
    fit_mass_exponent,
    residual_envelope_constant,
    riesz_mass_lower_bound,
    two_bump_h1_norm,
    weak_factorize,
)
from neumann_hardy.grid import Ball, Grid, GridFunction, integrate, norm
from neumann_hardy.lab.experiments import unit_haar_atom
from neumann_hardy.lab.testfunctions import factorization_suite


@pytest.fixture(scope="module")
def grid16():
    return Grid(1, 16.0, 2048)


def test_choose_M():
    assert choose_M(0.5) == 16
    assert choose_M(0.25) == 16
    assert choose_M(0.1) == 64
    for eps in (0.5, 0.1, 0.01):
        M = choose_M(eps)
        assert M > 10 and math.log(M) / M < eps and (M == 16 or math.log(M / 2) / (M / 2) >= eps)
    with pytest.raises(ValueError):
        choose_M(0.0)


def test_placement_error_when_box_too_small():
    g = Grid(1, 4.0, 256)
    with pytest.raises(PlacementError):
        approx_factor_atom(unit_haar_atom(g, 2.0, 0.25), 0.1)


@pytest.mark.parametrize("balance", [False, True])
def test_residual_identity_and_envelope(grid16, balance):
    a = unit_haar_atom(grid16, 10.125, 0.125)
    pair, W = approx_factor_atom(a, 0.1, balance=balance)
    assert pair.M == 64
    assert abs(integrate(W)) < 1e-10
    # x0 and y0 on the same side, at distance M r
    assert pair.x0[0] * pair.y0[0] > 0
    assert abs(pair.x0[0] - pair.y0[0]) == pytest.approx(pair.M * pair.r)
    assert abs(pair.riesz_at_x0) > 0
    # W is supported on the two balls and bounded by C / (M r)
    C = residual_envelope_constant(pair, W)
    assert math.isfinite(C) and C < 2 * math.log(pair.M)
    # g >= 0 is a normalized indicator
    assert np.all(pair.g.values >= 0)
    if balance:
        for c in (pair.x0, pair.y0):
            p = ball_patch(grid16, Ball(c, pair.r))
            m = np.zeros(grid16.shape)
            m[p.slices] = p.values > 0
            assert abs(grid16.cell_volume * np.sum(W.values * m)) < 1e-10


def test_factor_cost_is_bounded_in_M(grid16):
    a = unit_haar_atom(grid16, 12.0, 0.0625)
    costs = [approx_factor_atom(a, eps)[0].cost for eps in (0.5, 0.1)]
    for M, c in zip((16, 64), costs):
        assert c < 4 * M  # |g||h| ~ M^n / |Rg| scale with a modest constant


def test_riesz_mass_value_and_exponent():
    for M in (16, 64, 256):
        rm = riesz_mass_lower_bound(M)
        assert rm.value > 0
        # direct ball at distance M r plus its mirror image at distance (2 * 8 - 1) M r
        assert rm.value == pytest.approx(2 / (math.pi * M) * (1 + 1 / 15), rel=1.5 / M)
    slope, _ = fit_mass_exponent([16, 32, 64, 128])
    assert slope == pytest.approx(-1.0, abs=0.02)
    slope2, _ = fit_mass_exponent([16, 32, 64], n=2)
    assert slope2 == pytest.approx(-2.0, abs=0.05)
    with pytest.raises(ValueError):
        riesz_mass_lower_bound(8)


def test_two_bump_growth_and_dilation():
    norms = {}
    for M in (16, 32):
        L = 4 * M
        norms[M] = two_bump_h1_norm(M, 1.0, Grid(1, L, int(2 * L * 8)))
    assert norms[32] > norms[16]
    dil = two_bump_h1_norm(16, 0.5, Grid(1, 32.0, 1024))
    assert dil == pytest.approx(norms[16], rel=0.03)
    with pytest.raises(ValueError):
        two_bump_h1_norm(16, 1.0, Grid(1, 16.0, 256))


def test_weak_factorize_zero_and_single_atom(grid16):
    led = weak_factorize(grid16.zeros())
    assert led.levels == [] and led.total_l1_cost == 0.0
    a = unit_haar_atom(grid16, 10.125, 0.125).values
    led = weak_factorize(a, K_max=2)
    assert led.ratios[0] < 0.1
    approx = led.approximation(grid16)
    assert norm(a - approx - led.residual, 2) < 1e-12


def test_weak_factorize_suite_reconstructs(grid16):
    suite = factorization_suite(grid16, np.random.default_rng(0))
    f = suite["pm"]
    led = weak_factorize(f, K_max=2)
    assert all(r < 0.5 for r in led.ratios)
    assert norm(f - led.approximation(grid16) - led.residual, 2) < 1e-10
    assert led.total_l1_cost / led.initial_h1 < 100


def test_faithful_loop_stalls(grid16):
    f = factorization_suite(grid16, np.random.default_rng(0))["haar"]
    with pytest.raises(NonContractingError) as exc:
        weak_factorize(f, balance=False, anchor=None)
    led = exc.value.ledger
    assert led.aborted and led.ratios[-1] >= 0.95


def test_ledger_outputs(grid16, tmp_path):
    a = unit_haar_atom(grid16, 10.125, 0.125).values
    led = weak_factorize(a, K_max=1)
    led.to_json(tmp_path / "ledger.json")
    led.to_csv(tmp_path / "ledger.csv")
    doc = json.loads((tmp_path / "ledger.json").read_text())
    assert doc["levels"][0]["pairs"] == len(led.levels[0].terms)
    lines = (tmp_path / "ledger.csv").read_text().splitlines()
    assert lines[0] == "level,residual_h1,ratio,cost" and len(lines) == 2


@settings(max_examples=15)
@given(st.floats(4.5, 12.0), st.sampled_from([1 / 8, 1 / 16, 1 / 32]), st.booleans())
def test_factorization_residual_properties(x0, r, balance):
    g = Grid(1, 16.0, 1024)
    x0 = round(x0 * 64) / 64 * (1 if x0 > 8 else -1)
    a = unit_haar_atom(g, x0, r)
    try:
        pair, W = approx_factor_atom(a, 0.25, balance=balance)
    except PlacementError:
        return
    assert abs(integrate(W)) < 1e-10
    assert math.isfinite(residual_envelope_constant(pair, W))
    outside = np.ones(g.shape, bool)
    for c in (pair.x0, pair.y0):
        outside &= np.abs(g.axis - c[0]) > pair.r + g.spacing
    assert np.all(W.values[outside] == 0)
