import numpy as np
import pytest
from hypothesis import given, strategies as st

from gevrey_mhd.clock import (GevreyClock, GevreyRangeError, apply_gevrey, check_convexity, convexity_sweep,
                              gevrey_damping_factor, gevrey_multiply, q_symbol, theta_at, theta_quadrature)
from gevrey_mhd.spectral import Grid, random_field


def test_theta_zero_at_start(clock):
    assert theta_at(clock, 0.0) == 0.0


def test_theta_closed_form_vs_quadrature(clock):
    times = np.linspace(0.0, 100.0, 201)
    closed = np.array([theta_at(clock, t) for t in times])
    assert np.max(np.abs(closed - theta_quadrature(clock, times))) < 1e-10


def test_theta_limit_value(clock):
    # eps^(1/2) / (alpha - 1) with eps = 1e-8, alpha = 1.2
    assert clock.theta_infinity == pytest.approx(5e-4, rel=1e-12)
    assert theta_at(clock, 1e12) == pytest.approx(clock.theta_infinity, rel=1e-2)


def test_saturation_examples():
    bad = GevreyClock(epsilon=1e-3, lam=20, delta0=0.5, alpha=1.175)
    good = GevreyClock(epsilon=1e-8, lam=20, delta0=0.5, alpha=1.2)
    assert bad.theta_infinity == pytest.approx(0.18070158, rel=1e-6)
    assert not bad.saturation_ok()
    assert good.saturation_ok()


def test_clock_derived_scalars(clock):
    assert clock.l_kappa == 0.25
    assert clock.gamma0 == pytest.approx(1.2)
    c = clock.at(3.0)
    assert c.theta_dot == pytest.approx(1e-4 * 4 ** -1.2)
    assert c.delta == pytest.approx(0.5 - 20 * c.theta)


def test_clock_validation():
    with pytest.raises(ValueError):
        GevreyClock(1e-8, 20, 0.5, 1.0)
    with pytest.raises(ValueError):
        GevreyClock(1e-8, 20, 0.5, 1.2, kappa=2.0)
    with pytest.raises(ValueError):
        GevreyClock(1e-8, 20, 0.5, 1.2, eta=0.3)


def test_multiplier_inverse(grid, rng):
    f = random_field(grid, rng)
    back = gevrey_multiply(gevrey_multiply(f, 0.4), 0.4, sign=-1)
    assert np.allclose(back.coeffs, f.coeffs, atol=1e-13)


def test_multiplier_identity_at_zero_radius(grid, rng):
    f = random_field(grid, rng)
    assert np.array_equal(gevrey_multiply(f, 0.0).coeffs, f.coeffs)


def test_overflow_guard():
    g = Grid(1024, 16, 1.0)
    f = random_field(g, np.random.default_rng(0))
    with pytest.raises(GevreyRangeError):
        gevrey_multiply(f, 10.0)


def test_apply_gevrey_needs_positive_radius(grid, rng):
    c = GevreyClock(1e-2, 1e4, 0.5, 1.2).at(5.0)
    assert c.delta < 0
    with pytest.raises(GevreyRangeError):
        apply_gevrey(random_field(grid, rng), c)


def test_damping_factor_matches_theta_increment(clock):
    xi = np.arange(5.0)
    fac = gevrey_damping_factor(clock.at(1.0), 0.5, xi)
    dtheta = theta_at(clock, 1.5) - theta_at(clock, 1.0)
    assert np.allclose(fac, np.exp(-20 * dtheta * (1 + xi**2) ** (1 / 3)))


def test_q_symbol_odd():
    xi = np.linspace(-10, 10, 41)
    assert np.allclose(q_symbol(xi), -q_symbol(-xi))
    assert q_symbol(1.0) == pytest.approx(2 ** (-2 / 3))


def test_convexity_exhaustive():
    pairs, violations = convexity_sweep(256)
    assert pairs == 513**2
    assert violations == 0


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_convexity_property(a, b):
    assert bool(check_convexity(a, b))
