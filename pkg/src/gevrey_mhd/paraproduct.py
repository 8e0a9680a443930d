"""Horizontal Littlewood-Paley blocks, Bony decomposition and paraproduct operators.

All operators act in x only and pointwise in y.  Products are evaluated on the
padded grid and accumulated in physical space before a single transform back.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .clock import GevreyClock, bracket_power, gevrey_multiply, q_symbol
from .spectral import Grid, SpectralField, d_x, from_padded, to_padded

PHI_SUPPORT = (0.75, 8.0 / 3.0)
CHI_RADIUS = 4.0 / 3.0


def _bump(r: np.ndarray) -> np.ndarray:
    lo, hi = PHI_SUPPORT
    u = (2.0 * r - (lo + hi)) / (hi - lo)
    out = np.zeros_like(r, dtype=float)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class DyadicLadder:
    """Cutoff values per mode.

    ``blocks[k + 1]`` holds the weight of block k for k = -1..k_max, so that
    ``blocks[0]`` is chi(|xi|) and the rows sum to one at every mode.
    ``partial[k]`` holds the low-pass weight of S_k = sum_{j<=k-1} Delta_j.
    """

    k_max: int
    blocks: np.ndarray
    partial: np.ndarray

    @property
    def chi_values(self) -> np.ndarray:
        return self.blocks[0]

    @property
    def phi_values(self) -> np.ndarray:
        return self.blocks[1:]

    def block(self, k: int) -> np.ndarray:
        if k <= -2 or k > self.k_max:
            return np.zeros(self.blocks.shape[1])
        return self.blocks[k + 1]

    def low(self, k: int) -> np.ndarray | None:
        """Low-pass weights of S_k; None means the identity."""
        if k <= -1:
            return np.zeros(self.blocks.shape[1])
        if k > self.k_max:
            return None
        return self.partial[k]


def build_ladder(xi: np.ndarray) -> DyadicLadder:
    """Renormalized dyadic partition of unity on the given integer modes."""
    r = np.abs(np.asarray(xi, dtype=float))
    lo, hi = PHI_SUPPORT
    k_max = 0
    while (2.0 ** -(k_max + 1)) * r.max() > lo:
        k_max += 1
    scales = range(-4, k_max + 3)
    raw = {j: _bump(2.0 ** -j * r) for j in scales}
    norm = sum(raw.values())
    safe = np.where(norm > 0, norm, 1.0)
    phi = np.array([np.where(norm > 0, raw[k] / safe, 0.0) for k in range(k_max + 1)])
    chi = 1.0 - phi.sum(axis=0)
    blocks = np.vstack([chi[None, :], phi])
    partial = np.cumsum(blocks, axis=0)
    return DyadicLadder(k_max=k_max, blocks=blocks, partial=partial)


@lru_cache(maxsize=32)
def ladder_for(grid: Grid) -> DyadicLadder:
    return build_ladder(grid.xi)


def lp_block(f: SpectralField, k: int) -> SpectralField:
    """Delta_k f; zero for k <= -2."""
    return f.multiplier(ladder_for(f.grid).block(k))


def low_pass(f: SpectralField, k: int) -> SpectralField:
    """S_k f = sum of Delta_j f over j <= k - 1."""
    weights = ladder_for(f.grid).low(k)
    return f if weights is None else f.multiplier(weights)


def _padded_blocks(f: SpectralField):
    ladder = ladder_for(f.grid)
    return [to_padded(f.grid, f.coeffs * ladder.block(k)[:, None]) for k in range(-1, ladder.k_max + 1)]


def _padded_lows(f: SpectralField):
    ladder = ladder_for(f.grid)
    return [to_padded(f.grid, f.coeffs * ladder.partial[k][:, None]) for k in range(ladder.k_max + 1)]


def paraproduct(f: SpectralField, g: SpectralField) -> SpectralField:
    """T_f g = sum_k S_{k-1} f * Delta_k g (low frequencies of f times high of g)."""
    grid = f.grid
    if g.grid != grid:
        raise ValueError("fields live on different grids")
    ladder = ladder_for(grid)
    acc = np.zeros((grid.pad_size, grid.n_y + 1), dtype=complex)
    for k in range(1, ladder.k_max + 1):
        low = to_padded(grid, f.coeffs * ladder.partial[k - 1][:, None])
        high = to_padded(grid, g.coeffs * ladder.block(k)[:, None])
        acc += low * high
    return SpectralField(grid, from_padded(grid, acc, grid.dealias_mask))


def remainder(f: SpectralField, g: SpectralField) -> SpectralField:
    """R(f, g) = sum over |k - k'| <= 1 of Delta_k f * Delta_k' g."""
    grid = f.grid
    if g.grid != grid:
        raise ValueError("fields live on different grids")
    ladder = ladder_for(grid)
    acc = np.zeros((grid.pad_size, grid.n_y + 1), dtype=complex)
    for k in range(-1, ladder.k_max + 1):
        near = ladder.block(k - 1) + ladder.block(k) + ladder.block(k + 1)
        acc += to_padded(grid, f.coeffs * ladder.block(k)[:, None]) * to_padded(grid, g.coeffs * near[:, None])
    return SpectralField(grid, from_padded(grid, acc, grid.dealias_mask))


def paraproduct_adjoint(a: SpectralField, g: SpectralField) -> SpectralField:
    """Conjugate transpose of the frequency-space map f -> T_a f, applied to g."""
    grid = a.grid
    if g.grid != grid:
        raise ValueError("fields live on different grids")
    ladder = ladder_for(grid)
    masked = to_padded(grid, g.coeffs * grid.dealias_mask[:, None])
    out = np.zeros(grid.shape, dtype=complex)
    for k in range(1, ladder.k_max + 1):
        low = np.conj(to_padded(grid, a.coeffs * ladder.partial[k - 1][:, None]))
        out += from_padded(grid, low * masked, None) * ladder.block(k)[:, None]
    return SpectralField(grid, out)


def commutator_ds_para(a: SpectralField, f: SpectralField, s: float) -> SpectralField:
    """[[D_x]^s, T_a] f."""
    if not 0 <= s <= 8:
        raise ValueError("order s must lie in [0, 8]")
    return bracket_power(paraproduct(a, f), s) - paraproduct(a, bracket_power(f, s))


def para_commutator(a: SpectralField, b: SpectralField, f: SpectralField) -> SpectralField:
    """[T_a, T_b] f."""
    return paraproduct(a, paraproduct(b, f)) - paraproduct(b, paraproduct(a, f))


def symbolic_calculus_residual(a: SpectralField, b: SpectralField, f: SpectralField) -> SpectralField:
    """T_a T_b f - T_{ab} f, with ab the dealiased product."""
    from .spectral import multiply

    return paraproduct(a, paraproduct(b, f)) - paraproduct(multiply(a, b), f)


def dx_symbol_field(a: SpectralField) -> SpectralField:
    """D_x a = -i d_x a, whose coefficients are xi * a_hat."""
    return d_x(a) * (-1j)


def q_dx(f: SpectralField) -> SpectralField:
    """Q(D_x) d_x f."""
    return d_x(f).multiplier(q_symbol(f.grid.xi))


def multiplier_commutator(a: SpectralField, f: SpectralField, clock: GevreyClock | None = None,
                          expansion_order: int = 0, delta: float | None = None) -> SpectralField:
    """(T_a d_x f)_Phi - T_a d_x f_Phi, minus (2/3) delta T_{D_x a} Q(D_x) d_x f_Phi at order 1."""
    if expansion_order not in (0, 1):
        raise ValueError("expansion_order must be 0 or 1")
    if delta is None:
        if clock is None:
            raise ValueError("either a clock or an explicit delta is required")
        delta = clock.delta
    f_phi = gevrey_multiply(f, delta)
    out = gevrey_multiply(paraproduct(a, d_x(f)), delta) - paraproduct(a, d_x(f_phi))
    if expansion_order == 1:
        out = out - (2.0 / 3.0) * delta * paraproduct(dx_symbol_field(a), q_dx(f_phi))
    return out


def lorentz_pairing(a: SpectralField, f: SpectralField, g: SpectralField, s1: float, s2: float) -> float:
    """([D]^s1 T_a d_x f, [D]^s2 g) + ([D]^s2 T_a d_x g, [D]^s1 f) in L^2."""
    from .norms import l2_pairing

    if not (s1 > 0 and s2 > 0):
        raise ValueError("orders s1, s2 must be positive")
    first = l2_pairing(bracket_power(paraproduct(a, d_x(f)), s1), bracket_power(g, s2))
    second = l2_pairing(bracket_power(paraproduct(a, d_x(g)), s2), bracket_power(f, s1))
    return first + second


def lorentz_expansion(a: SpectralField, f: SpectralField, g: SpectralField, s1: float, s2: float) -> list[float]:
    """The four commutator terms whose sum equals the pairing above."""
    from .norms import l2_pairing

    ds1f = bracket_power(f, s1)
    ds2g = bracket_power(g, s2)
    ds1_dxf = bracket_power(d_x(f), s1)
    t1 = l2_pairing(commutator_ds_para(a, d_x(f), s1), ds2g)
    t2 = l2_pairing(paraproduct(a, ds1_dxf) - paraproduct_adjoint(a, ds1_dxf), ds2g)
    t3 = l2_pairing(commutator_ds_para(a, d_x(g), s2), ds1f)
    t4 = l2_pairing(paraproduct(a, d_x(ds2g)) - d_x(paraproduct(a, ds2g)), ds1f)
    return [t1, t2, t3, t4]
