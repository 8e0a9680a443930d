"""Dense frequency-matrix realizations of the paraproduct family (small grids only).

Each operator is assembled per y node as an explicit convolution matrix in
frequency space, without FFTs, and serves as an independent oracle for the
padded-FFT implementations.
"""
from __future__ import annotations

import numpy as np

from .paraproduct import ladder_for
from .spectral import Grid, SpectralField

DENSE_LIMIT = 32


def _check(grid: Grid):
    if grid.n_x > DENSE_LIMIT:
        raise ValueError(f"dense oracles are limited to n_x <= {DENSE_LIMIT}")


def multiplication_matrices(c: np.ndarray, grid: Grid, out_mask: np.ndarray | None) -> np.ndarray:
    """Matrices M_j[xi, eta] = mask(xi) c_j(xi - eta), zero when xi - eta is off the grid."""
    _check(grid)
    xi = grid.xi.astype(int)
    position = {int(k): i for i, k in enumerate(xi)}
    n = grid.n_x
    mats = np.zeros((grid.n_y + 1, n, n), dtype=complex)
    for a, xa in enumerate(xi):
        for b, xb in enumerate(xi):
            idx = position.get(int(xa - xb))
            if idx is not None:
                mats[:, a, b] = c[idx, :]
    if out_mask is not None:
        mats *= out_mask[None, :, None]
    return mats


def apply(mats: np.ndarray, f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, np.einsum("jab,bj->aj", mats, f.coeffs))


def diag(values: np.ndarray) -> np.ndarray:
    return np.diag(np.asarray(values, dtype=complex))[None, :, :]


def product_matrix(f: SpectralField) -> np.ndarray:
    return multiplication_matrices(f.coeffs, f.grid, f.grid.dealias_mask)


def paraproduct_matrix(a: SpectralField) -> np.ndarray:
    grid = a.grid
    ladder = ladder_for(grid)
    total = np.zeros((grid.n_y + 1, grid.n_x, grid.n_x), dtype=complex)
    for k in range(1, ladder.k_max + 1):
        low = a.coeffs * ladder.partial[k - 1][:, None]
        total += multiplication_matrices(low, grid, grid.dealias_mask) * ladder.block(k)[None, None, :]
    return total


def remainder_matrix(f: SpectralField) -> np.ndarray:
    grid = f.grid
    ladder = ladder_for(grid)
    total = np.zeros((grid.n_y + 1, grid.n_x, grid.n_x), dtype=complex)
    for k in range(-1, ladder.k_max + 1):
        near = ladder.block(k - 1) + ladder.block(k) + ladder.block(k + 1)
        piece = f.coeffs * ladder.block(k)[:, None]
        total += multiplication_matrices(piece, grid, grid.dealias_mask) * near[None, None, :]
    return total


def adjoint(mats: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(mats, (0, 2, 1)))


def bracket_diag(grid: Grid, s: float) -> np.ndarray:
    return diag((1.0 + grid.xi**2) ** (s / 2.0))


def dx_diag(grid: Grid) -> np.ndarray:
    sym = 1j * grid.xi
    sym[grid.n_x // 2] = 0.0
    return diag(sym)


def gevrey_diag(grid: Grid, delta: float) -> np.ndarray:
    return diag(np.exp(delta * (1.0 + grid.xi**2) ** (1.0 / 3.0)))


def commutator_ds_matrix(a: SpectralField, s: float) -> np.ndarray:
    t = paraproduct_matrix(a)
    d = bracket_diag(a.grid, s)
    return d @ t - t @ d


def multiplier_commutator_matrix(a: SpectralField, delta: float, expansion_order: int) -> np.ndarray:
    grid = a.grid
    t = paraproduct_matrix(a)
    e = gevrey_diag(grid, delta)
    dx = dx_diag(grid)
    out = e @ t @ dx - t @ dx @ e
    if expansion_order == 1:
        da = SpectralField(grid, a.coeffs * grid.xi[:, None])
        q = diag(grid.xi * (1.0 + grid.xi**2) ** (-2.0 / 3.0))
        out = out - (2.0 / 3.0) * delta * paraproduct_matrix(da) @ q @ dx @ e
    return out


def pairing(f: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """Re int int f conj(g), with coefficient arrays shaped (n_x, n_y + 1)."""
    w = np.full(grid.n_y + 1, grid.dy)
    w[0] = w[-1] = 0.5 * grid.dy
    return float(2.0 * np.pi * np.dot(w, np.einsum("ij,ij->j", f, np.conj(g))).real)


def lorentz_sides_dense(a: SpectralField, f: SpectralField, g: SpectralField, s1: float, s2: float):
    """Pairing and the sum of its four commutator terms, all through dense matrices."""
    grid = a.grid
    t = paraproduct_matrix(a)
    d1, d2, dx = bracket_diag(grid, s1), bracket_diag(grid, s2), dx_diag(grid)
    ap = lambda m, v: np.einsum("jab,bj->aj", m, v)
    fc, gc = f.coeffs, g.coeffs
    lhs = pairing(ap(d1 @ t @ dx, fc), ap(d2, gc), grid) + pairing(ap(d2 @ t @ dx, gc), ap(d1, fc), grid)
    terms = [
        pairing(ap((d1 @ t - t @ d1) @ dx, fc), ap(d2, gc), grid),
        pairing(ap((t - adjoint(t)) @ d1 @ dx, fc), ap(d2, gc), grid),
        pairing(ap((d2 @ t - t @ d2) @ dx, gc), ap(d1, fc), grid),
        pairing(ap((t @ dx - dx @ t) @ d2, gc), ap(d1, fc), grid),
    ]
    return lhs, terms
