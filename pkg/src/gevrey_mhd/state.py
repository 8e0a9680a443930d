"""The evolved pair (u, b) and every field derived from it."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .clock import GevreyClock, gevrey_multiply
from .norms import weighted_l2, weighted_sup_norm
from .paraproduct import lp_block
from .spectral import Grid, SpectralField, d_x, d_y, integrate_up, multiply, zeros

PROFILES = ("exact-derivative", "zero", "heat-mode")


class CompatibilityWarning(UserWarning):
    """The profile does not integrate to zero in y, so psi does not vanish at the wall."""


def stream_function(f: SpectralField, require_zero_mean: bool = False, tol: float = 1e-8) -> SpectralField:
    """psi = -int_y^{y_max} f dz, so that d_y psi = f and psi(y_max) = 0.

    With ``require_zero_mean`` a CompatibilityWarning is raised when
    |psi(0)| exceeds ``tol`` times the largest coefficient of f.
    """
    psi = -integrate_up(f)
    if require_zero_mean:
        wall = float(np.max(np.abs(psi.coeffs[:, 0])))
        if wall > tol * max(f.max_abs(), 1e-300):
            warnings.warn(f"|psi(0)| = {wall:.3e} violates the zero-mean compatibility condition",
                          CompatibilityWarning, stacklevel=2)
    return psi


@dataclass(frozen=True)
class MhdState:
    """Horizontal velocity and magnetic field at the clock's time.

    States are immutable; derived fields are computed lazily once per state.
    """

    u: SpectralField
    b: SpectralField
    clock: GevreyClock

    def __post_init__(self):
        if self.u.grid != self.b.grid:
            raise ValueError("u and b live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def t(self) -> float:
        return self.clock.t

    @property
    def kappa(self) -> float:
        return self.clock.kappa

    def evolve(self, u: SpectralField, b: SpectralField, t: float) -> "MhdState":
        return replace(self, u=u, b=b, clock=self.clock.at(t))

    def phi(self, f: SpectralField) -> SpectralField:
        """Gevrey image f_Phi at this state's radius."""
        return gevrey_multiply(f, self.clock.delta)

    @cached_property
    def psi(self) -> SpectralField:
        return stream_function(self.u)

    @cached_property
    def psi_tilde(self) -> SpectralField:
        return stream_function(self.b)

    @cached_property
    def v(self) -> SpectralField:
        return -d_x(self.psi)

    @cached_property
    def h(self) -> SpectralField:
        return -d_x(self.psi_tilde)

    @cached_property
    def dy_u(self) -> SpectralField:
        return d_y(self.u)

    @cached_property
    def dy_b(self) -> SpectralField:
        return d_y(self.b)

    @cached_property
    def lorentz_u(self) -> SpectralField:
        """theta_dot * P = (b d_x + h d_y) b."""
        return multiply(self.b, d_x(self.b)) + multiply(self.h, self.dy_b)

    @cached_property
    def lorentz_b(self) -> SpectralField:
        """theta_dot * N = (b d_x + h d_y) u."""
        return multiply(self.b, d_x(self.u)) + multiply(self.h, self.dy_u)

    @cached_property
    def P(self) -> SpectralField:
        return self.lorentz_u / self.clock.theta_dot

    @cached_property
    def N(self) -> SpectralField:
        return self.lorentz_b / self.clock.theta_dot

    @cached_property
    def y_psi(self) -> SpectralField:
        return self.psi.scale_y(self.grid.y)

    @cached_property
    def y_psi_tilde(self) -> SpectralField:
        return self.psi_tilde.scale_y(self.grid.y)

    @cached_property
    def G(self) -> SpectralField:
        return self.u + self.y_psi / (2.0 * (1.0 + self.t))

    @cached_property
    def G_tilde(self) -> SpectralField:
        return self.b + self.y_psi_tilde / (2.0 * self.kappa * (1.0 + self.t))

    @cached_property
    def u_phi(self) -> SpectralField:
        return self.phi(self.u)

    @cached_property
    def b_phi(self) -> SpectralField:
        return self.phi(self.b)

    @cached_property
    def v_phi(self) -> SpectralField:
        return self.phi(self.v)

    @cached_property
    def G_phi(self) -> SpectralField:
        return self.phi(self.G)

    @cached_property
    def G_tilde_phi(self) -> SpectralField:
        return self.phi(self.G_tilde)


def lorentz_sources(state: MhdState) -> tuple[SpectralField, SpectralField]:
    """(P, N) = ((b d_x + h d_y) b, (b d_x + h d_y) u) / theta_dot."""
    if not state.clock.theta_dot > 0:
        raise ValueError("theta_dot must be positive")
    return state.P, state.N


def good_functions(state: MhdState) -> tuple[SpectralField, SpectralField]:
    """G = u + y psi / (2<t>), G_tilde = b + y psi_tilde / (2 kappa <t>)."""
    return state.G, state.G_tilde


def good_function_residual(state: MhdState, dtG: SpectralField,
                           dtG_tilde: SpectralField | None = None):
    """Left-hand sides of the good-function equations with supplied time derivatives.

    Returns the G residual, or the pair (G residual, G_tilde residual) when
    ``dtG_tilde`` is given.
    """
    y = state.grid.y
    tt = 1.0 + state.t
    u, v, psi = state.u, state.v, state.psi
    G = state.G
    flux = multiply(state.dy_u, d_x(psi))
    res = (dtG - d_y(G, 2) + G / tt + multiply(u, d_x(G)) + multiply(v, d_y(G))
           - multiply(v, d_y(state.y_psi)) / (2.0 * tt)
           + integrate_up(flux).scale_y(y / tt)
           - state.lorentz_u + integrate_up(state.lorentz_u).scale_y(y / (2.0 * tt)))
    if dtG_tilde is None:
        return res
    kap = state.kappa
    Gt = state.G_tilde
    flux_t = multiply(state.dy_u, d_x(state.psi_tilde)) + multiply(state.dy_b, d_x(psi))
    res_t = (dtG_tilde - kap * d_y(Gt, 2) + Gt / tt + multiply(u, d_x(Gt)) + multiply(v, d_y(Gt))
             - multiply(v, d_y(state.y_psi_tilde)) / (2.0 * kap * tt)
             + integrate_up(flux_t).scale_y(y / (2.0 * kap * tt))
             - state.lorentz_b + integrate_up(state.lorentz_b).scale_y(y / (2.0 * kap * tt)))
    return res, res_t


CONTROL_SELECTORS = (
    "u", "dy_u", "dy2_u", "dy3_u", "dy2_u_sup", "ypsi_l2", "ypsi_sup", "dy3_ypsi",
)
UNPROVED_SELECTORS = ("dy3_u",)


def _control_sides(k: int, gamma: float, which: str, t: float, u: SpectralField,
                   y_psi: SpectralField, G: SpectralField) -> tuple[float, float]:
    tt = 1.0 + t
    blk = lambda f: lp_block(f, k)
    l2 = lambda f, g: weighted_l2(blk(f), 0.0, g, t)
    sup = lambda f, g: weighted_sup_norm(blk(f), 0.0, g, t)
    if which == "u":
        return l2(u, gamma), l2(G, 1.0)
    if which in ("dy_u", "dy2_u", "dy3_u"):
        order = {"dy_u": 1, "dy2_u": 2, "dy3_u": 3}[which]
        return l2(d_y(u, order), gamma), l2(d_y(G, order), 1.0)
    if which == "dy2_u_sup":
        return sup(d_y(u, 2), gamma), sup(d_y(G, 2), 1.0)
    if which == "ypsi_l2":
        lhs = l2(d_y(y_psi), gamma) / tt + l2(d_y(y_psi, 2), gamma) / np.sqrt(tt)
        return lhs, l2(d_y(G), 1.0)
    if which == "ypsi_sup":
        lhs = sup(d_y(y_psi), gamma) * tt**-0.75 + sup(d_y(y_psi, 2), gamma) * tt**-0.25
        return lhs, l2(d_y(G), 1.0)
    if which == "dy3_ypsi":
        return l2(d_y(y_psi, 3), gamma) / np.sqrt(tt), l2(d_y(G, 2), 1.0)
    raise ValueError(f"unknown selector {which!r}; valid: {', '.join(CONTROL_SELECTORS)}")


def control_lemma_probe(state: MhdState, k: int, gamma: float, which: str,
                        magnetic: bool = False) -> tuple[float, float]:
    """Both sides of one good-function control inequality for block k."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if magnetic:
        fields = (state.b_phi, state.phi(state.y_psi_tilde), state.G_tilde_phi)
    else:
        fields = (state.u_phi, state.phi(state.y_psi), state.G_phi)
    return _control_sides(k, gamma, which, state.t, *fields)


def invert_good_function(G: SpectralField, t: float, kappa: float = 1.0) -> tuple[SpectralField, SpectralField]:
    """Recover (u, psi) from G = u + y psi / (2 kappa <t>) with psi(0) = 0.

    psi(y) = exp(-y^2/(4 kappa <t>)) int_0^y exp(z^2/(4 kappa <t>)) G dz; the
    caller is responsible for G having zero weighted moment when psi must
    vanish at the top.
    """
    grid = G.grid
    y = grid.y
    scale = 4.0 * kappa * (1.0 + t)
    integrand = G.coeffs * np.exp(y**2 / scale)[None, :]
    panels = 0.5 * grid.dy * (integrand[:, :-1] + integrand[:, 1:])
    acc = np.zeros_like(integrand)
    acc[:, 1:] = np.cumsum(panels, axis=1)
    psi = SpectralField(grid, acc * np.exp(-(y**2) / scale)[None, :])
    u = G - psi.scale_y(y / (2.0 * kappa * (1.0 + t)))
    return u, psi


def divergence_residual(state: MhdState) -> dict[str, float]:
    """Relative divergence of (u, v) and (b, h).

    ``box`` is the trapezoid-consistent (midpoint) discrete divergence, which is
    the discrete dual of the vertical integral and vanishes to roundoff.
    ``central`` uses the second-order y-derivative and is O(dy^2).
    """
    out = {}
    for name, f, g in (("u", state.u, state.v), ("b", state.b, state.h)):
        fx = d_x(f).coeffs
        scale = max(np.max(np.abs(fx)), 1e-300)
        box = (g.coeffs[:, 1:] - g.coeffs[:, :-1]) / state.grid.dy + 0.5 * (fx[:, 1:] + fx[:, :-1])
        central = fx + d_y(g).coeffs
        if np.max(np.abs(fx)) == 0.0:
            out[f"box_{name}"] = float(np.max(np.abs(box)))
            out[f"central_{name}"] = float(np.max(np.abs(central)))
        else:
            out[f"box_{name}"] = float(np.max(np.abs(box)) / scale)
            out[f"central_{name}"] = float(np.max(np.abs(central)) / scale)
    return out


def zero_mean_defect(state: MhdState) -> dict[str, float]:
    """Size of int_0^{y_max} (u, b) dy, i.e. of (psi, psi_tilde) at the wall, and of v, h there."""
    return {
        "psi_wall": float(np.max(np.abs(state.psi.coeffs[:, 0]))),
        "psi_tilde_wall": float(np.max(np.abs(state.psi_tilde.coeffs[:, 0]))),
        "v_wall": float(np.max(np.abs(state.v.coeffs[:, 0]))),
        "h_wall": float(np.max(np.abs(state.h.coeffs[:, 0]))),
    }


def _low_band_coefficients(rng: np.random.Generator, modes: int = 3) -> list[tuple[int, float, float]]:
    out = []
    for m in range(1, modes + 1):
        a, b = rng.standard_normal(2) / m**2
        out.append((m, float(a), float(b)))
    return out


def _trig_polynomial(terms, x):
    return sum(a * np.cos(m * x) + b * np.sin(m * x) for m, a, b in terms)


def exact_derivative_profile(y: np.ndarray) -> np.ndarray:
    """d/dy (y^2 exp(-y^2)) = 2y (1 - y^2) exp(-y^2)."""
    return 2.0 * y * (1.0 - y**2) * np.exp(-(y**2))


def initial_state(grid: Grid, clock: GevreyClock, profile: str = "exact-derivative",
                  amplitude: float | None = None, seed: int = 0) -> MhdState:
    """Build the initial state of a named family.

    ``exact-derivative``: u0 = A a(x) d_y(y^2 e^{-y^2}), b0 = A c(x) d_y(y^2 e^{-y^2}) with
    random low-band trigonometric polynomials a, c drawn from ``seed``.
    ``heat-mode``: u0 = A sin(pi y / y_max), b0 = 0.
    ``zero``: the zero state.
    """
    amp = clock.epsilon if amplitude is None else amplitude
    clock = clock.at(0.0)
    y = grid.y
    if profile == "zero" or amp == 0.0:
        return MhdState(zeros(grid, "dirichlet0"), zeros(grid, "dirichlet0"), clock)
    if profile == "heat-mode":
        samples = amp * np.sin(np.pi * y / grid.y_max)[None, :] * np.ones((grid.n_x, 1))
        samples[:, [0, -1]] = 0.0
        u = SpectralField(grid, np.fft.fft(samples, axis=0) / grid.n_x, "dirichlet0")
        return MhdState(u, zeros(grid, "dirichlet0"), clock)
    if profile != "exact-derivative":
        raise ValueError(f"unknown profile {profile!r}; valid: {', '.join(PROFILES)}")
    rng = np.random.default_rng(seed)
    a_terms = _low_band_coefficients(rng)
    c_terms = _low_band_coefficients(rng)
    q = exact_derivative_profile(y)
    q[0] = q[-1] = 0.0
    fields = []
    for terms in (a_terms, c_terms):
        samples = amp * _trig_polynomial(terms, grid.x)[:, None] * q[None, :]
        fields.append(SpectralField(grid, np.fft.fft(samples, axis=0) / grid.n_x, "dirichlet0"))
    return MhdState(fields[0], fields[1], clock)


def suggest_y_max(t_end: float, tol: float = 1e-8) -> float:
    """Smallest height with exp(-y_max^2 / (8 <t_end>)) <= tol."""
    return float(np.sqrt(8.0 * (1.0 + t_end) * np.log(1.0 / tol)))


def write_snapshot(path, name: str, field: SpectralField, t: float, extra: dict | None = None):
    """Text dump of (xi, y_j, re, im) rows with a header naming field, time and grid."""
    grid = field.grid
    xi = np.repeat(grid.xi, grid.n_y + 1)
    yy = np.tile(grid.y, grid.n_x)
    c = field.coeffs.ravel()
    header = [f"field={name}", f"t={t:.16e}", f"n_x={grid.n_x}", f"n_y={grid.n_y}",
              f"y_max={grid.y_max:.16e}", f"dealias_fraction={grid.dealias_fraction:.16e}"]
    for key, value in (extra or {}).items():
        header.append(f"{key}={value:.16e}" if isinstance(value, float) else f"{key}={value}")
    header.append("columns=xi y re im")
    data = np.column_stack([xi, yy, c.real, c.imag])
    np.savetxt(Path(path), data, fmt="%.16e", header="\n".join(header), comments="# ")


def read_snapshot(path) -> tuple[str, SpectralField, dict]:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[2:].strip().partition("=")
            meta[key] = value
    grid = Grid(int(meta["n_x"]), int(meta["n_y"]), float(meta["y_max"]), float(meta["dealias_fraction"]))
    data = np.loadtxt(path, comments="#")
    coeffs = (data[:, 2] + 1j * data[:, 3]).reshape(grid.shape)
    return meta["field"], SpectralField(grid, coeffs), meta
