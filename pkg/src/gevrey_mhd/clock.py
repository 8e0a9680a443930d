"""Radius dynamics theta(t), delta(t) and the Fourier symbols built on them."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .spectral import SpectralField

EXPONENT_LIMIT = 500.0


class GevreyRangeError(ValueError):
    """Raised when the multiplier exponent would leave double-precision range."""


def bracket(xi):
    """Japanese bracket (1 + xi^2)^(1/2)."""
    return np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)


def q_symbol(xi):
    """Symbol xi (1 + xi^2)^(-2/3) of the first-order correction in the multiplier commutator."""
    xi = np.asarray(xi, dtype=float)
    return xi * (1.0 + xi**2) ** (-2.0 / 3.0)


def bracket_power(f: SpectralField, s: float) -> SpectralField:
    """Apply [D_x]^s, the multiplier (1 + xi^2)^(s/2)."""
    return f.multiplier((1.0 + f.grid.xi**2) ** (s / 2.0))


@dataclass(frozen=True)
class GevreyClock:
    """Model scalars plus the current time and accumulated radius loss."""

    epsilon: float
    lam: float
    delta0: float
    alpha: float
    eta: float = 0.05
    kappa: float = 1.0
    t: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1; the radius integral diverges otherwise")
        if not 0 < self.kappa < 2:
            raise ValueError("kappa must lie in (0, 2)")
        if not 0 < self.eta < self.l_kappa:
            raise ValueError(f"eta must lie in (0, l_kappa={self.l_kappa})")
        if self.t < 0:
            raise ValueError("time must be nonnegative")

    @property
    def l_kappa(self) -> float:
        return self.kappa * (2.0 - self.kappa) / 4.0

    @property
    def gamma0(self) -> float:
        return 1.0 + self.l_kappa - self.eta

    @property
    def theta_dot(self) -> float:
        return np.sqrt(self.epsilon) * (1.0 + self.t) ** (-self.alpha)

    @property
    def theta_ddot(self) -> float:
        return -self.alpha * np.sqrt(self.epsilon) * (1.0 + self.t) ** (-self.alpha - 1.0)

    @property
    def delta(self) -> float:
        return self.delta0 - self.lam * self.theta

    @property
    def theta_infinity(self) -> float:
        return np.sqrt(self.epsilon) / (self.alpha - 1.0)

    @property
    def theta_limit(self) -> float:
        """Radius loss at which delta(t) falls to delta0 / 2."""
        return np.inf if self.lam == 0 else self.delta0 / (2.0 * self.lam)

    def saturation_ok(self) -> bool:
        """Whether the total radius loss stays below delta0 / (4 lambda)."""
        return self.lam == 0 or self.theta_infinity <= self.delta0 / (4.0 * self.lam)

    def alpha_admissible(self) -> bool:
        """Whether alpha respects alpha <= 9/8 + l_kappa/2 - eta/2."""
        return self.alpha <= 9.0 / 8.0 + 0.5 * self.l_kappa - 0.5 * self.eta + 1e-15

    def at(self, t: float) -> "GevreyClock":
        return replace(self, t=float(t), theta=theta_at(self, t))


def theta_at(clock: GevreyClock, t: float) -> float:
    """Closed-form radius loss eps^(1/2) (1 - <t>^(1-alpha)) / (alpha - 1)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    a = clock.alpha
    return float(np.sqrt(clock.epsilon) * -np.expm1((1.0 - a) * np.log1p(t)) / (a - 1.0))


def theta_quadrature(clock: GevreyClock, times) -> np.ndarray:
    """Independent route: accumulate theta_dot with adaptive quadrature between times."""
    from scipy.integrate import quad

    times = np.asarray(times, dtype=float)
    rate = lambda s: np.sqrt(clock.epsilon) * (1.0 + s) ** (-clock.alpha)
    out = np.zeros_like(times)
    acc, prev = 0.0, 0.0
    for i, t in enumerate(times):
        acc += quad(rate, prev, t, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        out[i], prev = acc, t
    return out


def multiplier_symbol(xi, delta: float, sign: int = 1) -> np.ndarray:
    return np.exp(sign * delta * (1.0 + np.asarray(xi, dtype=float) ** 2) ** (1.0 / 3.0))


def gevrey_multiply(f: SpectralField, delta: float, sign: int = 1) -> SpectralField:
    """Multiply by exp(sign * delta * [xi]^(2/3)) with an overflow guard."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    peak = abs(delta) * (1.0 + f.grid.xi_max**2) ** (1.0 / 3.0)
    if peak > EXPONENT_LIMIT:
        raise GevreyRangeError(
            f"multiplier exponent {peak:.1f} exceeds {EXPONENT_LIMIT}; reduce delta or n_x")
    return f.multiplier(multiplier_symbol(f.grid.xi, delta, sign))


def apply_gevrey(f: SpectralField, clock: GevreyClock, sign: int = 1) -> SpectralField:
    """Return f_Phi (sign=+1) or its inverse image (sign=-1) at the clock's radius."""
    if sign == 1 and clock.delta <= 0:
        raise GevreyRangeError("radius delta(t) is not positive")
    return gevrey_multiply(f, clock.delta, sign)


def gevrey_damping_factor(clock: GevreyClock, dt: float, xi) -> np.ndarray:
    """Integrating factor exp(-lambda (theta(t+dt) - theta(t)) [xi]^(2/3)) over one step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    dtheta = theta_at(clock, clock.t + dt) - theta_at(clock, clock.t)
    return np.exp(-clock.lam * dtheta * (1.0 + np.asarray(xi, dtype=float) ** 2) ** (1.0 / 3.0))


def check_convexity(xi, eta_freq) -> np.ndarray:
    """Subadditivity [xi]^(2/3) <= [xi - eta]^(2/3) + [eta]^(2/3) of the exponent."""
    xi = np.asarray(xi, dtype=float)
    eta_freq = np.asarray(eta_freq, dtype=float)
    lhs = (1.0 + xi**2) ** (1.0 / 3.0)
    rhs = (1.0 + (xi - eta_freq) ** 2) ** (1.0 / 3.0) + (1.0 + eta_freq**2) ** (1.0 / 3.0)
    return lhs <= rhs


def convexity_sweep(limit: int = 256) -> tuple[int, int]:
    """Exhaustive check over |xi|, |eta| <= limit; returns (pairs checked, violations)."""
    modes = np.arange(-limit, limit + 1, dtype=float)
    ok = check_convexity(modes[:, None], modes[None, :])
    return int(ok.size), int(ok.size - np.count_nonzero(ok))
