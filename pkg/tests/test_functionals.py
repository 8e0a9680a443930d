import numpy as np
import pytest
from hypothesis import given, strategies as st

from gevrey_mhd.clock import GevreyClock
from gevrey_mhd.evolution import AuxiliaryState
from gevrey_mhd.functionals import (BUDGET_COEFFICIENT, EnergyRecord, budget_monitor, dissipation_D, energy_E,
                                    energy_H, fit_decay, initial_smallness, lemma41_monitor, make_record,
                                    paired_norm, tstar_lhs, tstar_monitor)
from gevrey_mhd.norms import weighted_l2
from gevrey_mhd.spectral import zeros
from gevrey_mhd.state import MhdState, initial_state

CLOCK = GevreyClock(1e-8, 20.0, 0.5, 1.2)


def _record(t, E, D):
    return EnergyRecord(t, 0.0, 0.5, E, D, 0.0)


def test_zero_state_functionals(small_grid):
    s = initial_state(small_grid, CLOCK, "zero")
    aux = AuxiliaryState.zero(s)
    for fn in (energy_E, dissipation_D, energy_H):
        total, comps = fn(s, aux)
        assert total == 0.0 and len(comps) == 8
    assert tstar_monitor(s, 1e-8).ratio == 0.0


def test_component_names(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    aux = AuxiliaryState.zero(s)
    _, comps = energy_E(s, aux)
    assert set(comps) == {f"E_{k}" for k in ("ub", "U", "zeta", "PN", "G", "dyG", "dy2G", "dy3G")}
    _, parts = tstar_lhs(s)
    assert set(parts) == {"tstar_G", "tstar_dyG", "tstar_dy2G", "tstar_dy3G"}


def test_time_weight(small_grid):
    s0 = initial_state(small_grid, CLOCK, amplitude=1e-3)
    s = MhdState(s0.u, s0.b, CLOCK.at(3.0))
    _, comps = energy_E(s, AuxiliaryState.zero(s))
    direct = weighted_l2(s.u_phi, 7.0, 1.0, 3.0) + weighted_l2(s.b_phi, 7.0, 1.0, 3.0)
    # <t>^{l_kappa - eta} = 4^{0.2}
    assert comps["E_ub"] == pytest.approx(4**0.2 * direct, rel=1e-12)


@given(st.floats(0.1, 10.0))
def test_linear_families_scale(c):
    from gevrey_mhd.spectral import Grid

    g = Grid(16, 32, 8.0)
    s0 = initial_state(g, CLOCK, amplitude=1e-3)
    base = MhdState(s0.u, zeros(g, "dirichlet0"), s0.clock)
    scaled = MhdState(s0.u * c, zeros(g, "dirichlet0"), s0.clock)
    e0 = energy_E(base, AuxiliaryState.zero(base))[0]
    e1 = energy_E(scaled, AuxiliaryState.zero(scaled))[0]
    assert e1 == pytest.approx(c * e0, rel=1e-10)


def test_dissipation_adds_derivative(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    aux = AuxiliaryState.zero(s)
    _, comps = dissipation_D(s, aux)
    ref = paired_norm((s.u_phi, s.b_phi), 7.0, 0.0, 1)
    assert comps["D_ub"] == pytest.approx(ref, rel=1e-12)


def test_desynchronized_aux_rejected(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    aux = AuxiliaryState.zero(s)
    later = s.evolve(s.u, s.b, 0.1)
    with pytest.raises(ValueError):
        energy_E(later, aux)


def test_tstar_gamma_range(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    with pytest.raises(ValueError):
        tstar_monitor(s, 1e-8, gamma0=1.3)
    status = tstar_monitor(s, 1e-8, C_threshold=1e-30)
    assert not status.passed and status.ratio > 0


def test_lemma41_and_smallness(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    mon = lemma41_monitor(s)
    assert set(mon) == {"ub_s4", "dyub_s3", "dy2ub_s3", "dy3ub_s2"}
    value, holds = initial_smallness(s, AuxiliaryState.zero(s), 1e-8)
    assert value > 0 and holds == (value <= 1e-16)


def test_record_validation(small_grid):
    with pytest.raises(ValueError):
        _record(0.0, -1.0, 0.0)
    with pytest.raises(ValueError):
        _record(0.0, np.nan, 0.0)
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    rec = make_record(s, AuxiliaryState.zero(s))
    assert rec.guards["theta_ok"] and rec.components["tstar_lhs"] > 0


def test_budget_linear_growth():
    t = np.linspace(0, 10, 11)
    recs = [_record(x, 1.0, 2.0) for x in t]
    budget = budget_monitor(recs, 0.05)
    assert np.allclose(budget.values, 1.0 + BUDGET_COEFFICIENT * 0.05 * 2.0 * t)
    assert not budget.flagged
    flagged = budget_monitor([_record(0.0, 1.0, 0.0), _record(1.0, 20.0, 0.0)], 0.05)
    assert flagged.flagged and flagged.threshold == 10.0


def test_budget_errors():
    with pytest.raises(ValueError):
        budget_monitor([_record(0.0, 1.0, 0.0)], 0.05)
    with pytest.raises(ValueError):
        budget_monitor([_record(1.0, 1.0, 0.0), _record(1.0, 1.0, 0.0)], 0.05)


@given(st.floats(-3.0, 1.0), st.floats(0.1, 100.0))
def test_fit_decay_exact_power(p, c):
    t = np.linspace(0, 50, 101)
    values = c * (1 + t) ** p
    assert fit_decay(t, values, (10, 50)) == pytest.approx(p, abs=1e-9)


def test_fit_decay_errors():
    t = np.linspace(0, 50, 101)
    with pytest.raises(ValueError):
        fit_decay(t, np.ones_like(t), (10, 11))
    with pytest.raises(ValueError):
        fit_decay(t, -np.ones_like(t))
