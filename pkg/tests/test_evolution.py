import numpy as np
import pytest

from gevrey_mhd.clock import GevreyClock
from gevrey_mhd.cli import build_config, residual_level
from gevrey_mhd.evolution import (AuxiliaryState, GuardTrip, ImexStepper, StepperConfig, Tendencies,
                                  cn_amplification, gevrey_good_function_residual, higher_order_diagnostics,
                                  interior_norm, reformulation_residual, rhs_main, step, step_auxiliary)
from gevrey_mhd.spectral import Grid, random_field, zeros
from gevrey_mhd.state import MhdState, divergence_residual, good_function_residual, initial_state

CLOCK = GevreyClock(1e-8, 20.0, 0.5, 1.2)


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(0.0, 1.0)
    with pytest.raises(ValueError):
        StepperConfig(0.1, 1.0, scheme="rk4")
    with pytest.raises(ValueError):
        StepperConfig(0.1, 1.0, stop_guards={"bogus"})


def test_cn_single_step_amplification():
    g = Grid(8, 64, 8.0)
    s = initial_state(g, CLOCK, "heat-mode", amplitude=1.0)
    out = step(s, StepperConfig(0.1, 0.1))
    factor = cn_amplification(g, 0.1, 1.0)
    assert np.allclose(out.u.coeffs[0].real, factor * s.u.coeffs[0].real, atol=1e-13)


def test_cn_amplification_bounded():
    g = Grid(8, 64, 8.0)
    for dt in (1e-3, 0.1, 10.0, 1e4):
        for mode in (1, 7, 63):
            assert abs(cn_amplification(g, dt, 0.5, mode)) < 1.0


def test_heat_oracle_second_order():
    errors = []
    for level in range(3):
        g = Grid(8, 32 * 2**level, 8.0)
        s = initial_state(g, CLOCK, "heat-mode", amplitude=1.0)
        stepper = ImexStepper(s, StepperConfig(0.1 / 2**level, 1.0), auxiliary=False)
        stepper.run_until(1.0)
        exact = np.exp(-(np.pi / 8.0) ** 2) * np.sin(np.pi * g.y / 8.0)
        errors.append(np.max(np.abs(stepper.state.u.coeffs[0].real - exact)))
    orders = np.log2(np.array(errors[:-1]) / errors[1:])
    assert np.all(np.abs(orders - 2.0) < 0.2)


def test_zero_state_preserved(small_grid):
    s = initial_state(small_grid, CLOCK, "zero")
    stepper = ImexStepper(s, StepperConfig(0.05, 0.5))
    stepper.run_until(0.5)
    assert stepper.state.u.max_abs() == 0.0 and stepper.state.b.max_abs() == 0.0
    assert stepper.W.max_abs() == 0.0


def test_run_until_lands_on_end(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=1e-3)
    stepper = ImexStepper(s, StepperConfig(0.03, 0.1))
    stepper.run_until(0.1)
    assert stepper.t == pytest.approx(0.1, abs=1e-14)
    assert stepper.steps == 4


def test_invariants_after_steps(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=0.2, seed=1)
    stepper = ImexStepper(s, StepperConfig(0.02, 0.2))
    stepper.run_until(0.2)
    div = divergence_residual(stepper.state)
    assert div["box_u"] < 1e-10 and div["box_b"] < 1e-10
    assert np.max(np.abs(stepper.W.coeffs[:, 0])) == 0.0
    assert stepper.W.max_abs() > 0.0


def test_deterministic(small_grid):
    runs = []
    for _ in range(2):
        s = initial_state(small_grid, CLOCK, amplitude=0.2, seed=1)
        stepper = ImexStepper(s, StepperConfig(0.02, 0.1))
        stepper.run_until(0.1)
        runs.append((stepper.state.u.coeffs.copy(), stepper.W.coeffs.copy()))
    assert np.array_equal(runs[0][0], runs[1][0]) and np.array_equal(runs[0][1], runs[1][1])


def test_theta_guard(small_grid):
    clock = GevreyClock(1e-2, 1e3, 0.5, 1.2)
    stepper = ImexStepper(initial_state(small_grid, clock, amplitude=1e-3), StepperConfig(0.01, 1.0))
    with pytest.raises(GuardTrip) as info:
        stepper.step()
    assert info.value.reason == "theta"
    with pytest.raises(GuardTrip):
        stepper.step()
    assert stepper.steps == 0


def test_theta_guard_can_be_disabled(small_grid):
    clock = GevreyClock(1e-2, 1e3, 0.5, 1.2)
    cfg = StepperConfig(0.01, 1.0, stop_guards={"overflow_guard"})
    stepper = ImexStepper(initial_state(small_grid, clock, amplitude=1e-3), cfg, auxiliary=False)
    stepper.step()
    assert stepper.steps == 1


def test_non_finite_trips(small_grid):
    stepper = ImexStepper(initial_state(small_grid, CLOCK, amplitude=np.nan), StepperConfig(0.01, 1.0))
    with pytest.raises(GuardTrip) as info:
        stepper.step()
    assert info.value.reason == "overflow"


def test_cfl_halving_and_floor(small_grid):
    stepper = ImexStepper(initial_state(small_grid, CLOCK, amplitude=50.0), StepperConfig(0.05, 1.0))
    stepper.step()
    assert stepper.dt_history[0] < 0.05
    stepper = ImexStepper(initial_state(small_grid, CLOCK, amplitude=1e4), StepperConfig(0.05, 1.0))
    with pytest.raises(GuardTrip) as info:
        stepper.step()
    assert info.value.reason == "cfl_floor"


def test_auxiliary_helpers(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=0.1)
    aux = AuxiliaryState.zero(s)
    assert np.array_equal(aux.zeta.coeffs, s.u_phi.coeffs)
    new_aux = step_auxiliary(s, aux, StepperConfig(0.01, 0.01))
    assert new_aux.t == pytest.approx(0.01)
    stepper = ImexStepper(s, StepperConfig(0.01, 0.01), auxiliary=False)
    with pytest.raises(RuntimeError):
        stepper.aux_state()


def test_rhs_of_heat_mode_is_diffusion(small_grid):
    s = initial_state(small_grid, CLOCK, "heat-mode", amplitude=1.0)
    du, db = rhs_main(s)
    assert db.max_abs() == 0.0
    assert du.coeffs[0, small_grid.n_y // 2].real == pytest.approx(-(np.pi / 8.0) ** 2, rel=1e-2)


def test_gevrey_good_function_matches_physical(small_grid):
    s0 = initial_state(small_grid, CLOCK, amplitude=0.5, seed=2)
    s = MhdState(s0.u, s0.b, CLOCK.at(0.4))
    dtG = random_field(small_grid, np.random.default_rng(0), profile=np.exp(-small_grid.y))
    gevrey = gevrey_good_function_residual(s, dtG)
    physical = s.phi(good_function_residual(s, dtG))
    assert (gevrey - physical).max_abs() < 1e-12 * physical.max_abs()


def test_diagnostics_vanish_without_magnetic_field(small_grid):
    s0 = initial_state(small_grid, CLOCK, amplitude=0.3)
    s = MhdState(s0.u, zeros(small_grid, "dirichlet0"), s0.clock)
    diag = higher_order_diagnostics(s)
    for key in ("H", "H_tilde", "S", "S_tilde"):
        assert diag[key].max_abs() == 0.0


def test_reformulation_residual_keys_and_zero_state(small_grid):
    s = initial_state(small_grid, CLOCK, "zero")
    aux = AuxiliaryState.zero(s)
    z = zeros(small_grid)
    res = reformulation_residual(s, aux, Tendencies(z, z, z))
    assert set(res) == {"u", "b", "U", "h"}
    assert all(f.max_abs() == 0.0 for f in res.values())


def test_reformulation_residual_decreases():
    cfg = build_config(converge_t=0.1)
    _, coarse = residual_level(cfg, 0)
    _, fine = residual_level(cfg, 1)
    for key, value in coarse.items():
        assert fine[key] < value / 2.5, key


def test_centered_tendencies(small_grid):
    s = initial_state(small_grid, CLOCK, amplitude=0.1)
    later = s.evolve(s.u * 2.0, s.b, 0.5)
    tend = Tendencies.centered(s, later)
    assert np.allclose(tend.du.coeffs, 2.0 * s.u.coeffs)
    assert tend.dW is None
    assert interior_norm(tend.db) == 0.0
