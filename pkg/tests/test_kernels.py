import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_hardy import kernels as K

coord = st.floats(-6, 6, allow_nan=False)
times = st.floats(1e-3, 50.0)


def test_riesz_constants():
    c1 = K.KernelConstants.for_dimension(1)
    c2 = K.KernelConstants.for_dimension(2)
    assert c1.riesz_constant == pytest.approx(-1 / math.pi, rel=1e-15)
    assert c2.riesz_constant == pytest.approx(-1 / (2 * math.pi), rel=1e-15)
    assert c1.neumann_correction_constant == c1.riesz_constant
    assert c1.riesz_normalization == pytest.approx(1 / math.sqrt(math.pi))
    # the closed form printed with the kernel decomposition, kept for comparison
    assert c1.product_formula_value == pytest.approx(-1.0)
    assert math.isnan(c2.product_formula_value)
    assert c2.to_dict()["product_formula_value"] is None


def test_neumann_heat_kernel_value():
    # (4 pi)^{-1/2} (e^{-1/4} + e^{-4/4}) at t = 1, x = 0.5, y = 1.5
    want = (math.exp(-0.25) + math.exp(-1.0)) / math.sqrt(4 * math.pi)
    assert K.neumann_heat_kernel(1.0, [0.5], [1.5]) == pytest.approx(want, rel=1e-14)
    assert K.neumann_heat_kernel(1.0, [0.5], [-1.5]) == 0.0
    assert K.classical_heat_kernel(1.0, [0.5], [1.5]) == pytest.approx(math.exp(-0.25) / math.sqrt(4 * math.pi))


def test_heaviside_convention():
    assert K.heaviside(0.0) == 1.0
    assert K.heaviside(-1e-300) == 0.0
    assert np.array_equal(K.heaviside([-1, 0, 2]), [0, 1, 1])


def test_bad_inputs():
    with pytest.raises(ValueError):
        K.neumann_heat_kernel(0.0, [1.0], [1.0])
    with pytest.raises(ValueError):
        K.classical_riesz_kernel(1, [1.0], [1.0])
    with pytest.raises(ValueError):
        K.neumann_correction_kernel(3, [1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        K.heat_kernel_gradient(1.0, [1.0], [1.0], "dirichlet")


def test_correction_kernel_finite_on_diagonal():
    v = K.neumann_correction_kernel(1, [0.5], [0.5])
    assert v == pytest.approx(-1 / (math.pi * 1.0))


def test_hilbert_form_in_one_dimension():
    x, y = 0.7, 2.3
    want = -(1 / (x - y) + 1 / (x + y)) / math.pi
    assert K.neumann_riesz_kernel(1, [x], [y]) == pytest.approx(want, rel=1e-14)
    assert K.neumann_riesz_kernel(1, [x], [-y]) == 0.0


@pytest.mark.parametrize(
    "l,x,y",
    [(1, [0.3], [1.7]), (1, [-2.0], [-0.4]), (1, [0.5, 1.0], [-0.7, 2.5]), (2, [0.5, 1.0], [-0.7, 2.5]), (2, [3.0, -0.2], [2.0, -1.1])],
)
def test_riesz_closed_form_matches_time_integral(l, x, y):
    quad = K.riesz_kernel_by_time_integral(l, x, y, "neumann")
    assert quad == pytest.approx(K.neumann_riesz_kernel(l, x, y), rel=1e-9)
    quad_c = K.riesz_kernel_by_time_integral(l, x, y, "classical")
    assert quad_c == pytest.approx(K.classical_riesz_kernel(l, x, y), rel=1e-9)


def test_time_derivative_matches_finite_difference():
    t, x, y = 0.7, np.array([0.4, 1.1]), np.array([-0.3, 0.6])
    dt = 1e-6
    fd = (K.neumann_heat_kernel(t + dt, x, y) - K.neumann_heat_kernel(t - dt, x, y)) / (2 * dt)
    assert K.heat_kernel_time_derivative(t, x, y) == pytest.approx(fd, rel=1e-8)


def test_gradient_zero_across_halves():
    g = K.heat_kernel_gradient(1.0, [0.2, 0.5], [0.1, -0.5])
    assert np.array_equal(g, [0.0, 0.0])


@given(times, coord, coord, coord, coord)
def test_heat_kernel_symmetries(t, x1, x2, y1, y2):
    x, y = np.array([x1, x2]), np.array([y1, y2])
    p = K.neumann_heat_kernel(t, x, y)
    assert p == pytest.approx(K.neumann_heat_kernel(t, y, x), rel=1e-12, abs=1e-300)
    xr, yr = x * [1, -1], y * [1, -1]
    assert p == pytest.approx(K.neumann_heat_kernel(t, xr, yr), rel=1e-12, abs=1e-300)
    assert p <= 2 * K.classical_heat_kernel(t, x, y) * (1 + 1e-12) + 1e-300


@given(times, coord, coord)
def test_gradient_matches_finite_difference(t, x, y):
    # keep both points away from the hyperplane so the step stays in one half
    x = math.copysign(max(abs(x), 0.1), x)
    y = math.copysign(max(abs(y), 0.1), x)
    g = K.heat_kernel_gradient(t, [x], [y])[0]
    d = 1e-5 * min(math.sqrt(t), 0.05)
    fd = (K.neumann_heat_kernel(t, [x + d], [y]) - K.neumann_heat_kernel(t, [x - d], [y])) / (2 * d)
    scale = K.neumann_heat_kernel(t, [x], [y]) / math.sqrt(t)
    assert abs(fd - g) <= 1e-5 * scale + 1e-300


@given(coord, coord, coord, coord)
def test_riesz_kernel_antisymmetry_and_reflection(x1, x2, y1, y2):
    x, y = np.array([x1, x2]), np.array([y1, y2])
    if x2 * y2 <= 0 or np.linalg.norm(x - y) < 1e-3:
        return
    for l in (1, 2):
        r, k = K.riesz_kernel_components(l, x, y)
        assert r == pytest.approx(-K.classical_riesz_kernel(l, y, x), rel=1e-12)
        # K_N(x, y) = R(x, y~): the reflected-source classical kernel
        assert k == pytest.approx(K.classical_riesz_kernel(l, x, y * [1, -1]), rel=1e-12)
