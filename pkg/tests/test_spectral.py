import numpy as np
import pytest
from hypothesis import given, strategies as st

from gevrey_mhd.spectral import (Grid, SpectralField, d_x, d_y, from_function, from_spectral,
                                 integrate_down, integrate_up, multiply, random_field, to_spectral, zeros)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(15, 32, 8.0)
    with pytest.raises(ValueError):
        Grid(16, 8, 8.0)
    with pytest.raises(ValueError):
        Grid(16, 32, -1.0)


def test_roundtrip(grid, rng):
    samples = rng.standard_normal(grid.shape)
    f = to_spectral(samples, grid)
    assert np.allclose(from_spectral(f), samples, atol=1e-14)


def test_dx_exact_on_trig(grid):
    f = from_function(grid, lambda x, y: np.sin(3 * x) * np.exp(-y))
    ref = from_function(grid, lambda x, y: 3 * np.cos(3 * x) * np.exp(-y))
    assert np.max(np.abs(d_x(f).coeffs - ref.coeffs)) < 1e-13


def test_dy_second_order():
    errs = []
    for ny in (64, 128, 256):
        g = Grid(8, ny, 4.0)
        f = from_function(g, lambda x, y: np.sin(y) + 0 * x)
        ref = np.cos(g.y)
        errs.append(np.max(np.abs(d_y(f).coeffs[0].real - ref)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.9)


def test_dy_exact_on_quadratics():
    g = Grid(8, 32, 3.0)
    f = from_function(g, lambda x, y: y**2 + 0 * x)
    assert np.max(np.abs(d_y(f, 2).coeffs[0] - 2.0)) < 1e-10
    assert np.max(np.abs(d_y(f, 3).coeffs[0])) < 1e-8


def test_integrals_of_constant():
    g = Grid(8, 32, 4.0)
    one = from_function(g, lambda x, y: 1.0 + 0 * x * y)
    assert np.allclose(integrate_up(one).coeffs[0].real, 4.0 - g.y)
    assert np.allclose(integrate_down(one).coeffs[0].real, g.y)


def test_multiply_matches_pointwise_for_band_limited(grid, rng):
    f = random_field(grid, rng, band=5)
    h = random_field(grid, rng, band=5)
    prod = multiply(f, h)
    assert np.allclose(from_spectral(prod), from_spectral(f) * from_spectral(h), atol=1e-12)


def test_dirichlet_parity_validated(grid):
    c = np.ones(grid.shape, dtype=complex)
    with pytest.raises(ValueError):
        SpectralField(grid, c, "dirichlet0")
    assert zeros(grid, "dirichlet0").parity == "dirichlet0"


def test_coefficients_read_only(grid):
    f = zeros(grid)
    with pytest.raises(ValueError):
        f.coeffs[0, 0] = 1.0


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_linearity(seed, c):
    g = Grid(16, 16, 2.0)
    r = np.random.default_rng(seed)
    f, h = random_field(g, r), random_field(g, r)
    lhs = d_y(f * c + h)
    rhs = d_y(f) * c + d_y(h)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-10 * (1 + abs(c)) * max(f.max_abs(), h.max_abs()) * g.n_y**1)
