"""Gaussian-weighted anisotropic Sobolev norms.

Plancherel convention: the horizontal L^2 norm of a field with coefficients c is
``sqrt(2*pi * sum_xi |c_xi|^2)``, i.e. the L^2 norm over one period.  Vertical
integrals use the trapezoid rule on the y nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .spectral import Grid, SpectralField, d_y, integrate_up

PLANCHEREL = 2.0 * np.pi
# Weighted integrals stop where Psi exceeds ln(1e8): the same tail tolerance that fixes
# y_max through Psi(t_end, y_max) = ln(1e8).  Gaussian-decaying fields lose a relative
# e^{-2 PSI_CAP} there, while the geometric tail of the discrete heat kernel is not
# amplified by an astronomically large weight at early times.
PSI_CAP = float(np.log(1e8))


def psi_weight(t, y):
    """Psi(t, y) = y^2 / (8 <t>)."""
    return np.asarray(y, dtype=float) ** 2 / (8.0 * (1.0 + np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class NormSpec:
    """Parameters of the H_Psi^{s,k} norm with weight exp(gamma Psi)."""

    s: float
    k: int = 0
    weight_scale: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        if not 0 <= self.s <= 8:
            raise ValueError("s must lie in [0, 8]")
        if self.k not in (0, 1, 2, 3, 4):
            raise ValueError("k must be an integer in 0..4")
        if not 0 <= self.weight_scale <= 1:
            raise ValueError("weight_scale must lie in [0, 1]")
        if self.t < 0:
            raise ValueError("t must be nonnegative")


def weight_profile(grid: Grid, gamma: float, t: float, power: float = 2.0) -> np.ndarray:
    """exp(power * gamma * Psi) at the nodes, zero where Psi > PSI_CAP."""
    psi = psi_weight(t, grid.y)
    inside = psi <= PSI_CAP
    return np.where(inside, np.exp(power * gamma * np.where(inside, psi, 0.0)), 0.0)


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.n_y + 1, grid.dy)
    w[0] = w[-1] = 0.5 * grid.dy
    return w


def slice_energy(f: SpectralField, s: float) -> np.ndarray:
    """Squared H^s_h norm of f(., y_j) at every node."""
    sym = (1.0 + f.grid.xi**2) ** s
    return PLANCHEREL * np.einsum("i,ij->j", sym, np.abs(f.coeffs) ** 2)


def _check_finite(f: SpectralField):
    if not np.all(np.isfinite(f.coeffs)):
        raise FloatingPointError("field contains non-finite values")


def weighted_l2(f: SpectralField, s: float, gamma: float, t: float) -> float:
    """(int e^{2 gamma Psi} ||f(., y)||_{H^s}^2 dy)^(1/2)."""
    _check_finite(f)
    weight = weight_profile(f.grid, gamma, t) * trapezoid_weights(f.grid)
    return float(np.sqrt(max(np.dot(weight, slice_energy(f, s)), 0.0)))


def weighted_norm(f: SpectralField, spec: NormSpec) -> float:
    """sum_{l<=k} of the weighted L^2 norms of d_y^l f in H^s_h."""
    total = weighted_l2(f, spec.s, spec.weight_scale, spec.t)
    for order in range(1, spec.k + 1):
        total += weighted_l2(d_y(f, order), spec.s, spec.weight_scale, spec.t)
    return total


def hnorm(f: SpectralField, s: float, t: float, gamma: float = 1.0) -> float:
    """Shorthand for the H_Psi^{s,0} norm."""
    return weighted_l2(f, s, gamma, t)


def weighted_sup_norm(f: SpectralField, s: float, gamma: float, t: float) -> float:
    """max over nodes of the H^s_h norm of e^{gamma Psi} f(., y)."""
    _check_finite(f)
    weight = weight_profile(f.grid, gamma, t, power=1.0)
    return float(np.max(weight * np.sqrt(slice_energy(f, s))))


def l2_pairing(f: SpectralField, g: SpectralField) -> float:
    """Re int int f conj(g) dx dy."""
    prod = np.einsum("ij,ij->j", f.coeffs, np.conj(g.coeffs))
    return float(PLANCHEREL * np.dot(trapezoid_weights(f.grid), prod).real)


def weighted_inner(f: SpectralField, g: SpectralField, s: float, t: float) -> float:
    """Re int int e^{2 Psi} [D_x]^s f conj([D_x]^s g) dx dy."""
    sym = (1.0 + f.grid.xi**2) ** s
    prod = np.einsum("i,ij,ij->j", sym, f.coeffs, np.conj(g.coeffs))
    weight = weight_profile(f.grid, 1.0, t) * trapezoid_weights(f.grid)
    return float(PLANCHEREL * np.dot(weight, prod).real)


def tail_sup_bound_check(f: SpectralField, s: float, t: float) -> tuple[float, float]:
    """Both sides of ||int_y^inf f||_{L^inf_{v,Psi}(H^s)} <~ <t>^(1/4) ||f||_{H_Psi^{s,0}}."""
    lhs = weighted_sup_norm(integrate_up(f), s, 1.0, t)
    rhs = (1.0 + t) ** 0.25 * weighted_l2(f, s, 1.0, t)
    return lhs, rhs


def poincare_sides(u: SpectralField, t: float, s: float | None = None) -> tuple[float, float]:
    """Grid evaluation of both sides of the weighted Poincare inequality.

    ``s=None`` selects the first form, otherwise the second form with parameter s.
    """
    grid = u.grid
    weight = weight_profile(grid, 1.0, t) * trapezoid_weights(grid)
    energy = slice_energy(u, 0.0)
    lhs = float(np.dot(weight, slice_energy(d_y(u), 0.0)))
    tt = 1.0 + t
    if s is None:
        return lhs, float(np.dot(weight, energy)) / (2.0 * tt)
    rhs = s / (2.0 * tt) * np.dot(weight, energy) + s * (1.0 - s) / 4.0 * np.dot(weight, (grid.y / tt) ** 2 * energy)
    return lhs, float(rhs)


def poincare_profile_sides(profile, derivative, t: float, s: float | None = None,
                           upper: float = np.inf) -> tuple[float, float]:
    """Adaptive-quadrature evaluation for a y-profile with known derivative.

    By Parseval the inequality for a field a(x) p(y) reduces to this 1D statement.
    """
    tt = 1.0 + t

    def weighted_square(fn):
        # |fn|^2 e^{2 Psi} combined in log form so that large y neither overflows nor gives inf * 0
        def integrand(y):
            value = abs(fn(y))
            return 0.0 if value == 0.0 else float(np.exp(y * y / (4.0 * tt) + 2.0 * np.log(value)))
        return integrand

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    lhs = quad(weighted_square(derivative), 0.0, upper, **opts)[0]
    base = quad(weighted_square(profile), 0.0, upper, **opts)[0]
    if s is None:
        return lhs, base / (2.0 * tt)
    moment = quad(weighted_square(lambda y: y / tt * profile(y)), 0.0, upper, **opts)[0]
    return lhs, s / (2.0 * tt) * base + s * (1.0 - s) / 4.0 * moment
