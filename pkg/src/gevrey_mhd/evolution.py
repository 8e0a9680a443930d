"""Time stepping of (u, b) and of the auxiliary field W = int_y^inf U dz.

Diffusion is treated by Crank-Nicolson with a three-point Laplacian on the
interior nodes and homogeneous Dirichlet walls; transport and sources use a
variable-step second-order Adams-Bashforth extrapolation.  The very first step
(no history yet) is a trapezoidal predictor-corrector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .clock import GevreyRangeError, bracket_power, gevrey_damping_factor, q_symbol, theta_at
from .paraproduct import dx_symbol_field, paraproduct, q_dx, remainder
from .spectral import SpectralField, d_x, d_y, integrate_up, multiply, zeros
from .state import MhdState

GUARDS = ("theta_guard", "tstar_guard", "overflow_guard")
OVERFLOW_LIMIT = 1e100


class GuardTrip(RuntimeError):
    """A stop guard fired; the stepper refuses to advance afterwards."""

    def __init__(self, reason: str, t: float, detail: str = ""):
        super().__init__(f"guard '{reason}' tripped at t={t:.6g}" + (f": {detail}" if detail else ""))
        self.reason = reason
        self.t = t
        self.detail = detail


@dataclass(frozen=True)
class StepperConfig:
    """Discretization and guard settings.

    ``diffusion_kappa`` defaults to the clock's kappa.  ``cfl`` is the advective
    Courant factor; dt is halved while it is violated, down to
    ``dt * min_dt_fraction``.
    """

    dt: float
    t_end: float
    scheme: str = "imex_cn_ab2"
    diffusion_kappa: float | None = None
    stop_guards: frozenset = field(default_factory=lambda: frozenset(GUARDS))
    cfl: float = 0.5
    min_dt_fraction: float = 1.0 / 64.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme != "imex_cn_ab2":
            raise ValueError(f"unknown scheme {self.scheme!r}; only 'imex_cn_ab2' is available")
        unknown = set(self.stop_guards) - set(GUARDS)
        if unknown:
            raise ValueError(f"unknown guards {sorted(unknown)}; valid: {', '.join(GUARDS)}")
        object.__setattr__(self, "stop_guards", frozenset(self.stop_guards))


def nonlinear_terms(state: MhdState) -> tuple[SpectralField, SpectralField]:
    """Explicit part: -(u d_x + v d_y)(u, b) + theta_dot (P, N)."""
    u, b, v = state.u, state.b, state.v
    nu = state.lorentz_u - multiply(u, d_x(u)) - multiply(v, state.dy_u)
    nb = state.lorentz_b - multiply(u, d_x(b)) - multiply(v, state.dy_b)
    return nu, nb


def rhs_main(state: MhdState, kappa: float | None = None) -> tuple[SpectralField, SpectralField]:
    """Full tendencies (du/dt, db/dt) of the reduced system."""
    kappa = state.kappa if kappa is None else kappa
    nu, nb = nonlinear_terms(state)
    return nu + d_y(state.u, 2), nb + d_y(state.b, 2) * kappa


def _laplacian_interior(c: np.ndarray, dy: float) -> np.ndarray:
    return (c[:, :-2] - 2.0 * c[:, 1:-1] + c[:, 2:]) / dy**2


def cn_amplification(grid, dt: float, kappa: float, mode: int = 1) -> float:
    """Exact amplification of the discrete CN step on the sine mode sin(mode pi y / y_max)."""
    mu = -4.0 / grid.dy**2 * np.sin(mode * np.pi * grid.dy / (2.0 * grid.y_max)) ** 2
    r = -0.5 * dt * kappa * mu
    return (1.0 - r) / (1.0 + r)


class CrankNicolson:
    """(I - dt/2 kappa D2) x = rhs on the interior nodes, shared by every mode."""

    def __init__(self, grid, dt: float, kappa: float):
        self.grid, self.dt, self.kappa = grid, dt, kappa
        m = grid.n_y - 1
        r = 0.5 * dt * kappa / grid.dy**2
        ab = np.empty((3, m))
        ab[0, :] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[2, :] = -r
        self._ab = ab

    def explicit_half(self, c: np.ndarray) -> np.ndarray:
        """(I + dt/2 kappa D2) c on the interior nodes."""
        return c[:, 1:-1] + 0.5 * self.dt * self.kappa * _laplacian_interior(c, self.grid.dy)

    def solve(self, interior_rhs: np.ndarray) -> np.ndarray:
        sol = solve_banded((1, 1), self._ab, interior_rhs.T, check_finite=False)
        out = np.zeros(self.grid.shape, dtype=complex)
        out[:, 1:-1] = sol.T
        return out


def auxiliary_forcing(state: MhdState, W: SpectralField) -> SpectralField:
    """Explicit part of the W equation: paraproduct transport, Q-correction and -theta_dot v_Phi."""
    clock = state.clock
    transport = (paraproduct(state.u, d_x(W)) + paraproduct(state.v, d_y(W))
                 + paraproduct(dx_symbol_field(state.u), q_dx(W)) * (2.0 / 3.0 * clock.delta))
    return -transport - state.v_phi * clock.theta_dot


@dataclass(frozen=True)
class AuxiliaryState:
    """W = int_y^inf U dz together with U = -d_y W and the corrected unknowns (zeta, zeta_tilde)."""

    t: float
    W: SpectralField
    U: SpectralField
    zeta: SpectralField
    zeta_tilde: SpectralField

    @classmethod
    def assemble(cls, state: MhdState, W: SpectralField) -> "AuxiliaryState":
        clock = state.clock
        qW = W.multiplier(q_symbol(state.grid.xi))
        coef = 2.0 * clock.delta / (3.0 * clock.theta_dot)

        def corrected(f_phi, dyf):
            return (f_phi - paraproduct(dyf, W) / clock.theta_dot
                    - paraproduct(dx_symbol_field(dyf), qW) * coef)

        return cls(state.t, W, -d_y(W), corrected(state.u_phi, state.dy_u),
                   corrected(state.b_phi, state.dy_b))

    @classmethod
    def zero(cls, state: MhdState) -> "AuxiliaryState":
        return cls.assemble(state, zeros(state.grid, "dirichlet0"))


def _max_physical(*fields: SpectralField) -> float:
    return max(float(np.max(np.abs(f.physical()))) for f in fields)


class ImexStepper:
    """Advances (u, b) and, optionally, W with a shared step size and history."""

    def __init__(self, state: MhdState, cfg: StepperConfig, aux: AuxiliaryState | None = None,
                 auxiliary: bool = True):
        self.state = state
        self.cfg = cfg
        self.kappa = state.kappa if cfg.diffusion_kappa is None else cfg.diffusion_kappa
        self.auxiliary = auxiliary
        self.W = (aux.W if aux is not None else zeros(state.grid, "dirichlet0")) if auxiliary else None
        self.halted: GuardTrip | None = None
        self.steps = 0
        self.dt_history: list[float] = []
        self._history = None
        self._solvers: dict = {}

    @property
    def t(self) -> float:
        return self.state.t

    def aux_state(self) -> AuxiliaryState:
        if not self.auxiliary:
            raise RuntimeError("auxiliary field is not evolved by this stepper")
        return AuxiliaryState.assemble(self.state, self.W)

    def _solver(self, dt: float, kappa: float) -> CrankNicolson:
        key = (dt, kappa)
        if key not in self._solvers:
            if len(self._solvers) > 16:
                self._solvers.clear()
            self._solvers[key] = CrankNicolson(self.state.grid, dt, kappa)
        return self._solvers[key]

    def trip(self, reason: str, detail: str = ""):
        self.halted = GuardTrip(reason, self.t, detail)
        raise self.halted

    def _choose_dt(self, dt: float) -> float:
        state = self.state
        grid = state.grid
        vertical = _max_physical(state.v, state.h)
        horizontal = _max_physical(state.u, state.b)
        floor = self.cfg.dt * self.cfg.min_dt_fraction
        while (dt * vertical > self.cfg.cfl * grid.dy
               or dt * horizontal > self.cfg.cfl * 2.0 * np.pi / grid.n_x):
            dt *= 0.5
            if dt < floor * (1.0 - 1e-12):
                self.trip("cfl_floor", f"dt fell below {floor:.3g}")
        return dt

    def _check_state(self, state: MhdState, W: SpectralField | None):
        fields = [state.u, state.b] + ([W] if W is not None else [])
        for f in fields:
            if not np.all(np.isfinite(f.coeffs)):
                self.trip("overflow", "non-finite field values")
            if "overflow_guard" in self.cfg.stop_guards and f.max_abs() > OVERFLOW_LIMIT:
                self.trip("overflow", "field magnitude exceeds overflow limit")

    def step(self, dt: float | None = None) -> MhdState:
        """Advance by dt (default cfg.dt, reduced if the CFL bound requires)."""
        if self.halted is not None:
            raise self.halted
        state = self.state
        clock = state.clock
        dt = self._choose_dt(self.cfg.dt if dt is None else dt)
        t_new = state.t + dt
        if ("theta_guard" in self.cfg.stop_guards and clock.lam > 0
                and theta_at(clock, t_new) >= clock.theta_limit):
            self.trip("theta", f"theta would reach delta0/(2 lambda) = {clock.theta_limit:.6g}")
        try:
            new_state, new_W, history = self._advance(dt)
        except GevreyRangeError as exc:
            self.trip("overflow", str(exc))
        self._check_state(new_state, new_W)
        self.state, self.W, self._history = new_state, new_W, history
        self.steps += 1
        self.dt_history.append(dt)
        return new_state

    def _advance(self, dt: float):
        state = self.state
        grid = state.grid
        cn_u = self._solver(dt, 1.0)
        cn_b = self._solver(dt, self.kappa)
        nu, nb = nonlinear_terms(state)
        base_u = cn_u.explicit_half(state.u.coeffs)
        base_b = cn_b.explicit_half(state.b.coeffs)
        if self.auxiliary:
            damp = gevrey_damping_factor(state.clock, dt, grid.xi)[:, None]
            fw = auxiliary_forcing(state, self.W).coeffs
            base_w = damp * cn_u.explicit_half(self.W.coeffs)
        mk = lambda c: SpectralField(grid, c, "dirichlet0")
        inner = lambda f: f.coeffs[:, 1:-1]

        if self._history is None:
            u_pred = mk(cn_u.solve(base_u + dt * inner(nu)))
            b_pred = mk(cn_b.solve(base_b + dt * inner(nb)))
            pred = state.evolve(u_pred, b_pred, state.t + dt)
            nu_p, nb_p = nonlinear_terms(pred)
            u_new = mk(cn_u.solve(base_u + 0.5 * dt * (inner(nu) + inner(nu_p))))
            b_new = mk(cn_b.solve(base_b + 0.5 * dt * (inner(nb) + inner(nb_p))))
            new_state = state.evolve(u_new, b_new, state.t + dt)
            W_new = None
            if self.auxiliary:
                w_pred = mk(cn_u.solve(base_w + dt * (damp * fw)[:, 1:-1]))
                fw_p = auxiliary_forcing(new_state, w_pred).coeffs
                W_new = mk(cn_u.solve(base_w + 0.5 * dt * (damp * fw + fw_p)[:, 1:-1]))
        else:
            dt_prev, nu_old, nb_old, fw_old, damp_old = self._history
            w = dt / dt_prev
            c1, c0 = 1.0 + 0.5 * w, 0.5 * w
            u_new = mk(cn_u.solve(base_u + dt * (c1 * inner(nu) - c0 * inner(nu_old))))
            b_new = mk(cn_b.solve(base_b + dt * (c1 * inner(nb) - c0 * inner(nb_old))))
            new_state = state.evolve(u_new, b_new, state.t + dt)
            W_new = None
            if self.auxiliary:
                extrap = c1 * damp * fw - c0 * damp * damp_old * fw_old
                W_new = mk(cn_u.solve(base_w + dt * extrap[:, 1:-1]))
        history = (dt, nu, nb, fw if self.auxiliary else None, damp if self.auxiliary else None)
        return new_state, W_new, history

    def run_until(self, t_end: float, callback=None):
        """Step until t_end (the last step is shortened to land on it)."""
        while self.t < t_end - 1e-12 * max(1.0, t_end):
            self.step(min(self.cfg.dt, t_end - self.t))
            if callback is not None:
                callback(self)
        return self.state


def step(state: MhdState, cfg: StepperConfig) -> MhdState:
    """One self-starting (trapezoidal predictor-corrector) step of the main system."""
    return ImexStepper(state, cfg, auxiliary=False).step()


def step_auxiliary(state: MhdState, aux: AuxiliaryState, cfg: StepperConfig) -> AuxiliaryState:
    """One self-starting step of W alongside the main system; returns the new auxiliary state."""
    stepper = ImexStepper(state, cfg, aux=aux)
    stepper.step()
    return stepper.aux_state()


@dataclass(frozen=True)
class Tendencies:
    """Time derivatives of u, b and W at a state's time."""

    du: SpectralField
    db: SpectralField
    dW: SpectralField | None = None

    @classmethod
    def centered(cls, before: MhdState, after: MhdState, W_before: SpectralField | None = None,
                 W_after: SpectralField | None = None) -> "Tendencies":
        """Second-order centered differences around the midpoint time."""
        span = after.t - before.t
        dW = None if W_before is None else (W_after - W_before) / span
        return cls((after.u - before.u) / span, (after.b - before.b) / span, dW)


def _bony_rest(a: SpectralField, g: SpectralField) -> SpectralField:
    """T_g a + R(a, g): the part of a g not of the form T_a g."""
    return paraproduct(g, a) + remainder(a, g)


def _gevrey_defect(state: MhdState, a: SpectralField, g: SpectralField, correction: bool) -> SpectralField:
    """(T_a g)_Phi - T_a g_Phi, minus (2/3) delta T_{D_x a} Q(D_x) g_Phi when requested."""
    phi = state.phi
    out = phi(paraproduct(a, g)) - paraproduct(a, phi(g))
    if correction:
        q = phi(g).multiplier(q_symbol(state.grid.xi))
        out = out - paraproduct(dx_symbol_field(a), q) * (2.0 / 3.0 * state.clock.delta)
    return out


def transport_operator(state: MhdState, f_phi: SpectralField, dt_f_phi: SpectralField,
                       kappa: float) -> SpectralField:
    """L_kappa f_Phi given the time derivative of f_Phi."""
    clock = state.clock
    return (dt_f_phi + bracket_power(f_phi, 2.0 / 3.0) * (clock.lam * clock.theta_dot)
            + paraproduct(state.u, d_x(f_phi)) + paraproduct(state.v, d_y(f_phi))
            + paraproduct(dx_symbol_field(state.u), q_dx(f_phi)) * (2.0 / 3.0 * clock.delta)
            - d_y(f_phi, 2) * kappa)


def time_derivative_phi(state: MhdState, df: SpectralField, f_phi: SpectralField) -> SpectralField:
    """d/dt (f_Phi) = (df/dt)_Phi + delta'(t) [D_x]^{2/3} f_Phi with delta' = -lambda theta_dot."""
    clock = state.clock
    return state.phi(df) - bracket_power(f_phi, 2.0 / 3.0) * (clock.lam * clock.theta_dot)


def residual_A(state: MhdState) -> SpectralField:
    u, v = state.u, state.v
    dxu, dyu = d_x(u), state.dy_u
    return (_gevrey_defect(state, u, dxu, True) + _gevrey_defect(state, dyu, v, True)
            + _gevrey_defect(state, v, dyu, False)
            + state.phi(_bony_rest(u, dxu) + remainder(v, dyu)))


def residual_B(state: MhdState) -> SpectralField:
    u, v, b = state.u, state.v, state.b
    dxb, dyb = d_x(b), state.dy_b
    return (_gevrey_defect(state, u, dxb, True) + _gevrey_defect(state, dyb, v, True)
            + _gevrey_defect(state, v, dyb, False)
            + state.phi(paraproduct(dxb, u) + remainder(u, dxb) + remainder(v, dyb)))


def reformulation_residual(state: MhdState, aux: AuxiliaryState | None,
                           tendencies: Tendencies) -> dict[str, SpectralField]:
    """LHS - RHS of the Gevrey-level equations for u_Phi, b_Phi, of the U identity and the h equation.

    Keys: ``u``, ``b`` (paradifferential form of the main system), ``U``
    (the differentiated W equation, when ``aux`` and ``tendencies.dW`` are given)
    and ``h`` (the slaved vertical magnetic component).
    """
    clock = state.clock
    kappa = state.kappa
    delta = clock.delta
    theta_dot = clock.theta_dot
    xi = state.grid.xi
    v_phi = state.v_phi
    qv = v_phi.multiplier(q_symbol(xi))
    out = {}
    for key, f_phi, df, dyf, rest, source, kap in (
        ("u", state.u_phi, tendencies.du, state.dy_u, residual_A(state), state.lorentz_u, 1.0),
        ("b", state.b_phi, tendencies.db, state.dy_b, residual_B(state), state.lorentz_b, kappa),
    ):
        lhs = transport_operator(state, f_phi, time_derivative_phi(state, df, f_phi), kap)
        rhs = (-paraproduct(dyf, v_phi) - paraproduct(dx_symbol_field(dyf), qv) * (2.0 / 3.0 * delta)
               - rest + state.phi(source))
        out[key] = lhs - rhs

    if aux is not None and tendencies.dW is not None:
        W, U = aux.W, aux.U
        dU = -d_y(tendencies.dW)
        dyu = state.dy_u
        lhs = d_x(state.u_phi) * theta_dot
        rhs = (-transport_operator(state, U, dU, 1.0) + paraproduct(dyu, d_x(W))
               - paraproduct(d_y(state.v), U)
               + paraproduct(dx_symbol_field(dyu), q_dx(W)) * (2.0 / 3.0 * delta))
        out["U"] = lhs - rhs

    h, u, v, b = state.h, state.u, state.v, state.b
    dh = d_x(integrate_up(tendencies.db))
    out["h"] = (dh + multiply(u, d_x(h)) + multiply(v, d_y(h)) - d_y(h, 2) * kappa
                - multiply(b, d_x(v)) + multiply(h, d_x(u)))
    return out


def interior_norm(f: SpectralField, trim: int = 2) -> float:
    """Discrete L^2 norm over interior nodes (trimmed away from both walls)."""
    c = f.coeffs[:, trim:-trim] if trim else f.coeffs
    return float(np.sqrt(2.0 * np.pi * f.grid.dy * np.sum(np.abs(c) ** 2)))


def higher_order_diagnostics(state: MhdState) -> dict[str, SpectralField]:
    """Bilinear sources (H, H_tilde), paraproduct residuals (S, S_tilde), Z and the flux term F.

    The integral terms of Z and F carry the sign that makes the Gevrey-level
    good-function equation reproduce the Gevrey image of the physical one.
    """
    clock = state.clock
    kappa = state.kappa
    theta_dot = clock.theta_dot
    phi = state.phi
    tt = 1.0 + state.t
    y = state.grid.y
    u, b, v, h = state.u, state.b, state.v, state.h
    dxu, dyu, dxb, dyb = d_x(u), state.dy_u, d_x(b), state.dy_b
    dyyu, dyyb = d_y(u, 2), d_y(b, 2)

    H = ((multiply(dxb, dyyu) - multiply(dyb, d_y(dxu))) * (2.0 / theta_dot)
         + (multiply(dxu, dyyb) - multiply(dyu, d_y(dxb))) * ((kappa - 1.0) / theta_dot))
    H_tilde = (multiply(dxb, dyyb) - multiply(dyb, d_y(dxb))) * (2.0 * kappa / theta_dot)

    def s_term(first: SpectralField, second: SpectralField) -> SpectralField:
        # S for (first, second) = (N, P); S_tilde for (P, N)
        d1x, d1y = d_x(first), d_y(first)
        d2x, d2y = d_x(second), d_y(second)
        return (_gevrey_defect(state, u, d1x, True)
                + phi(paraproduct(d1y, v)) - paraproduct(d1y, state.v_phi)
                + phi(paraproduct(v, d1y)) - paraproduct(v, phi(d1y))
                + phi(paraproduct(d1x, u) + remainder(u, d1x) + remainder(v, d1y))
                - phi(paraproduct(d2x, b) + remainder(b, d2x) + remainder(h, d2y))
                - _gevrey_defect(state, b, d2x, True)
                - phi(paraproduct(d2y, h)) + paraproduct(d2y, phi(h))
                - phi(paraproduct(h, d2y)) + paraproduct(h, phi(d2y)))

    S = s_term(state.N, state.P)
    S_tilde = s_term(state.P, state.N)

    G = state.G
    dxG, dyG = d_x(G), d_y(G)
    dy_ypsi = d_y(state.y_psi)
    v_phi = state.v_phi
    integral = lambda f: integrate_up(f).scale_y(y / tt)
    minus_Z = (phi(paraproduct(u, dxG)) - paraproduct(u, phi(dxG)) + phi(_bony_rest(u, dxG))
               + phi(paraproduct(dyG, v)) - paraproduct(dyG, v_phi) + phi(_bony_rest(dyG, v))
               - (phi(paraproduct(dy_ypsi, v)) - paraproduct(dy_ypsi, v_phi)) / (2.0 * tt)
               - phi(_bony_rest(dy_ypsi, v)) / (2.0 * tt)
               - integral(phi(paraproduct(dyu, v)) - paraproduct(dyu, v_phi))
               - integral(phi(_bony_rest(dyu, v))))
    Z = -minus_Z

    lorentz_phi = phi(state.lorentz_u)
    flux = (paraproduct(u, d_x(state.G_phi)) + paraproduct(dyG, v_phi)
            - paraproduct(dy_ypsi, v_phi) / (2.0 * tt)
            - integral(paraproduct(dyu, v_phi))
            - lorentz_phi + integrate_up(lorentz_phi).scale_y(y / (2.0 * tt)))
    return {"H": H, "H_tilde": H_tilde, "S": S, "S_tilde": S_tilde, "Z": Z,
            "F": d_y(flux, 2), "flux": flux}


def gevrey_good_function_residual(state: MhdState, dtG: SpectralField) -> SpectralField:
    """Good-function equation written at the Gevrey level with Z collecting the paraproduct remainders.

    Equals the Gevrey image of good_function_residual when every piece is consistent.
    """
    clock = state.clock
    tt = 1.0 + state.t
    G_phi = state.G_phi
    diag = higher_order_diagnostics(state)
    dt_G_phi = time_derivative_phi(state, dtG, G_phi)
    return (dt_G_phi + bracket_power(G_phi, 2.0 / 3.0) * (clock.lam * clock.theta_dot)
            - d_y(G_phi, 2) + G_phi / tt + diag["flux"] - diag["Z"])
