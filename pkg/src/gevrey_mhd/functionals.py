"""Energy E(t), dissipation D(t), the higher-order functional H(t), and their monitors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import AuxiliaryState
from .norms import weighted_l2
from .spectral import SpectralField, d_y
from .state import MhdState

BUDGET_COEFFICIENT = 0.79

# (family, time-weight offset, vertical derivative order, horizontal regularity)
ENERGY_FAMILIES = (
    ("ub", 0.0, 0, 7.0),
    ("U", 0.0, 0, 7.0),
    ("zeta", 0.0, 0, 22.0 / 3.0),
    ("PN", 0.0, 0, 20.0 / 3.0),
    ("G", 1.0, 0, 4.0),
    ("dyG", 1.5, 1, 3.0),
    ("dy2G", 2.0, 2, 3.0),
    ("dy3G", 2.5, 3, 2.0),
)
HIGHER_REGULARITY = (22.0 / 3.0, 22.0 / 3.0, 23.0 / 3.0, 7.0, 13.0 / 3.0, 10.0 / 3.0, 10.0 / 3.0, 7.0 / 3.0)


def _family_fields(family: str, state: MhdState, aux: AuxiliaryState) -> tuple[SpectralField, ...]:
    if family == "ub":
        return state.u_phi, state.b_phi
    if family == "U":
        return (aux.U,)
    if family == "zeta":
        return aux.zeta, aux.zeta_tilde
    if family == "PN":
        return state.phi(state.P), state.phi(state.N)
    return state.G_phi, state.G_tilde_phi


def paired_norm(fields, s: float, t: float, order: int = 0, gamma: float = 1.0) -> float:
    """||d_y^order (f, g)||_{H^{s,0}} with the convention ||(f, g)|| = ||f|| + ||g||."""
    total = 0.0
    for f in fields:
        total += weighted_l2(d_y(f, order) if order else f, s, gamma, t)
    return total


def _functional(prefix: str, state: MhdState, aux: AuxiliaryState, extra_order: int,
                regularity) -> tuple[float, dict[str, float]]:
    if aux.t != state.t:
        raise ValueError("auxiliary state is not synchronized with the main state")
    clock = state.clock
    tt = 1.0 + state.t
    base = clock.l_kappa - clock.eta
    components = {}
    for (family, offset, order, _), s in zip(ENERGY_FAMILIES, regularity):
        weight = tt ** (offset + base)
        norm = paired_norm(_family_fields(family, state, aux), s, state.t, order + extra_order)
        components[f"{prefix}_{family}"] = weight * norm
    return float(sum(components.values())), components


def energy_E(state: MhdState, aux: AuxiliaryState) -> tuple[float, dict[str, float]]:
    """E(t) as the sum of its eight weighted families, with the components."""
    return _functional("E", state, aux, 0, [fam[3] for fam in ENERGY_FAMILIES])


def dissipation_D(state: MhdState, aux: AuxiliaryState) -> tuple[float, dict[str, float]]:
    """D(t): the same families with one more vertical derivative on every field."""
    return _functional("D", state, aux, 1, [fam[3] for fam in ENERGY_FAMILIES])


def energy_H(state: MhdState, aux: AuxiliaryState) -> tuple[float, dict[str, float]]:
    """H(t): the E families at one third higher horizontal regularity."""
    return _functional("H", state, aux, 0, HIGHER_REGULARITY)


def tstar_lhs(state: MhdState, gamma: float = 1.0) -> tuple[float, dict[str, float]]:
    """Four-term good-function quantity bounded by C eps <t>^{-gamma0} up to the stopping time."""
    tt = 1.0 + state.t
    pair = (state.G_phi, state.G_tilde_phi)
    parts = {
        "tstar_G": paired_norm(pair, 4.0, state.t, 0, gamma),
        "tstar_dyG": tt**0.5 * paired_norm(pair, 3.0, state.t, 1, gamma),
        "tstar_dy2G": tt * paired_norm(pair, 3.0, state.t, 2, gamma),
        "tstar_dy3G": tt**1.5 * paired_norm(pair, 2.0, state.t, 3, gamma),
    }
    return float(sum(parts.values())), parts


@dataclass(frozen=True)
class TstarStatus:
    ratio: float
    passed: bool
    lhs: float


def tstar_monitor(state: MhdState, epsilon: float, gamma0: float | None = None,
                  C_threshold: float = np.inf) -> TstarStatus:
    """Ratio of the four-term quantity to eps <t>^{-gamma0}, and whether it stays below C_threshold."""
    clock = state.clock
    gamma0 = clock.gamma0 if gamma0 is None else gamma0
    if not 1.0 < gamma0 < 1.0 + clock.l_kappa:
        raise ValueError(f"gamma0 must lie in (1, 1 + l_kappa) = (1, {1 + clock.l_kappa})")
    lhs, _ = tstar_lhs(state)
    ratio = lhs / (epsilon * (1.0 + state.t) ** (-gamma0))
    return TstarStatus(ratio=float(ratio), passed=bool(ratio <= C_threshold), lhs=lhs)


def lemma41_monitor(state: MhdState, gamma: float = 0.5, gamma0: float | None = None) -> dict[str, float]:
    """Time-weighted (u_Phi, b_Phi) norms with weight e^{gamma Psi} whose boundedness is asserted."""
    gamma0 = state.clock.gamma0 if gamma0 is None else gamma0
    tt = 1.0 + state.t
    pair = (state.u_phi, state.b_phi)
    return {
        "ub_s4": tt**gamma0 * paired_norm(pair, 4.0, state.t, 0, gamma),
        "dyub_s3": tt ** (gamma0 + 0.5) * paired_norm(pair, 3.0, state.t, 1, gamma),
        "dy2ub_s3": tt ** (gamma0 + 1.0) * paired_norm(pair, 3.0, state.t, 2, gamma),
        "dy3ub_s2": tt ** (gamma0 + 1.5) * paired_norm(pair, 2.0, state.t, 3, gamma),
    }


def initial_smallness(state: MhdState, aux: AuxiliaryState, epsilon: float) -> tuple[float, bool]:
    """Left side ||(u_Phi, b_Phi)||_{H^{22/3,0}} + E and whether it is at most eps^2."""
    value = paired_norm((state.u_phi, state.b_phi), 22.0 / 3.0, state.t) + energy_E(state, aux)[0]
    return value, bool(value <= epsilon**2)


@dataclass(frozen=True)
class EnergyRecord:
    """One row of a run's time series."""

    t: float
    theta: float
    delta: float
    E: float
    D: float
    H: float
    components: dict = field(default_factory=dict)
    guards: dict = field(default_factory=dict)

    def __post_init__(self):
        values = [self.E, self.D, self.H, *self.components.values()]
        if not all(np.isfinite(v) and v >= 0 for v in values):
            raise ValueError("energy record entries must be finite and nonnegative")


def make_record(state: MhdState, aux: AuxiliaryState, epsilon: float | None = None,
                gamma0: float | None = None, tstar_threshold: float = np.inf) -> EnergyRecord:
    E, ce = energy_E(state, aux)
    D, cd = dissipation_D(state, aux)
    H, ch = energy_H(state, aux)
    lhs, parts = tstar_lhs(state)
    eps = state.clock.epsilon if epsilon is None else epsilon
    status = tstar_monitor(state, eps, gamma0, tstar_threshold)
    clock = state.clock
    components = {**ce, **cd, **ch, **parts, "tstar_lhs": lhs}
    guards = {"tstar_ratio": status.ratio, "tstar_ok": status.passed,
              "theta_ok": bool(clock.theta < clock.theta_limit)}
    return EnergyRecord(state.t, clock.theta, clock.delta, E, D, H, components, guards)


@dataclass(frozen=True)
class BudgetSeries:
    t: np.ndarray
    values: np.ndarray
    threshold: float
    flagged: bool


def budget_monitor(records, eta: float, fit_margin: float = 10.0) -> BudgetSeries:
    """B(t) = E(t) + 0.79 eta int_0^t D, with the integral by trapezoid over the records."""
    records = list(records)
    if len(records) < 2:
        raise ValueError("budget monitor needs at least two records")
    t = np.array([r.t for r in records])
    if np.any(np.diff(t) <= 0):
        raise ValueError("records must be strictly increasing in time")
    E = np.array([r.E for r in records])
    D = np.array([r.D for r in records])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (D[1:] + D[:-1]))])
    values = E + BUDGET_COEFFICIENT * eta * integral
    threshold = fit_margin * values[0]
    return BudgetSeries(t, values, float(threshold), bool(np.any(values > threshold)))


def fit_decay(t, values, window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of log(value) against log <t> over the window."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, values = t[keep], values[keep]
    if t.size < 5:
        raise ValueError("need at least 5 points in the fit window")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("decay fit requires positive finite values")
    slope, _ = np.polyfit(np.log1p(t), np.log(values), 1)
    return float(slope)
