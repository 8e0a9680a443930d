"""Field representation: Fourier series in x on the 2*pi torus, uniform nodes in y.

Coefficients are stored in numpy FFT order with shape ``(n_x, n_y + 1)`` and are
normalized so that ``samples = sum_xi c[xi] * exp(i xi x)``.  Products are formed
on a 3/2 zero-padded grid, so the retained modes of every product are the exact
convolution of the inputs restricted to the retained band.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp

PARITY_TAGS = ("generic", "dirichlet0")


@dataclass(frozen=True)
class Grid:
    """Discretization of the strip [0, 2*pi) x [0, y_max].

    Parameters
    ----------
    n_x : int
        Number of Fourier modes in x (even, at least 8).
    n_y : int
        Number of intervals in y (at least 16).
    y_max : float
        Truncation height.
    dealias_fraction : float
        Modes with ``|xi| > dealias_fraction * n_x / 2`` are zeroed after products.
    """

    n_x: int
    n_y: int
    y_max: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n_x < 8 or self.n_x % 2:
            raise ValueError(f"n_x must be even and >= 8, got {self.n_x}")
        if self.n_y < 16:
            raise ValueError(f"n_y must be >= 16, got {self.n_y}")
        if not self.y_max > 0:
            raise ValueError(f"y_max must be positive, got {self.y_max}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_y + 1)

    @cached_property
    def xi(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, as floats."""
        return np.fft.fftfreq(self.n_x, d=1.0 / self.n_x)

    @cached_property
    def x(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_x) / self.n_x

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.y_max, self.n_y + 1)

    @property
    def dy(self) -> float:
        return self.y_max / self.n_y

    @property
    def xi_max(self) -> int:
        return self.n_x // 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return (np.abs(self.xi) <= self.dealias_fraction * self.n_x / 2).astype(float)

    @cached_property
    def pad_size(self) -> int:
        return 3 * self.n_x // 2

    @cached_property
    def pad_index(self) -> np.ndarray:
        return np.mod(self.xi.astype(int), self.pad_size)

    def derivative_matrix(self, order: int) -> sp.csr_matrix:
        return _derivative_matrix(self.n_y, self.dy, order)


def _fd_weights(offsets, order):
    """Exact rational finite-difference weights for ``d^order/dy^order``."""
    n = len(offsets)
    a = [[Fraction(o) ** p for o in offsets] + [Fraction(0)] for p in range(n)]
    a[order][n] = Fraction(_factorial(order))
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                ratio = a[r][col] / a[col][col]
                a[r] = [x - ratio * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def _factorial(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


_MATRIX_CACHE: dict = {}


def _derivative_matrix(n_y, dy, order):
    key = (n_y, dy, order)
    if key in _MATRIX_CACHE:
        return _MATRIX_CACHE[key]
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be 1..4, got {order}")
    if n_y < 2 * order:
        raise ValueError("n_y too small for the requested derivative order")
    half = (order + 1) // 2
    central = list(range(-half, half + 1))
    width = order + 2
    rows, cols, vals = [], [], []
    n = n_y + 1
    for j in range(n):
        if j - half >= 0 and j + half <= n_y:
            offsets = central
        elif j - half < 0:
            offsets = [i - j for i in range(width)]
        else:
            offsets = [n_y - width + 1 + i - j for i in range(width)]
        for o, w in zip(offsets, _fd_weights(offsets, order)):
            if w != 0:
                rows.append(j)
                cols.append(j + o)
                vals.append(float(w) / dy**order)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    _MATRIX_CACHE[key] = mat
    return mat


class SpectralField:
    """Complex Fourier amplitudes in x at every y node.

    Instances are treated as immutable values; the coefficient array is marked
    read-only.
    """

    __slots__ = ("grid", "coeffs", "parity")

    def __init__(self, grid: Grid, coeffs: np.ndarray, parity: str = "generic"):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != grid.shape:
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
        if parity not in PARITY_TAGS:
            raise ValueError(f"unknown parity tag {parity!r}")
        if parity == "dirichlet0":
            scale = max(np.max(np.abs(coeffs)), 1.0)
            if np.max(np.abs(coeffs[:, 0])) > 1e-12 * scale:
                raise ValueError("dirichlet0 field does not vanish at y=0")
        coeffs.flags.writeable = False
        self.grid = grid
        self.coeffs = coeffs
        self.parity = parity

    def __repr__(self):
        return f"SpectralField(n_x={self.grid.n_x}, n_y={self.grid.n_y}, parity={self.parity})"

    def _check(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.parity)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise TypeError("use multiply() for dealiased field products")
        return SpectralField(self.grid, self.coeffs * scalar, self.parity)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.grid, self.coeffs / scalar, self.parity)

    def scale_y(self, profile: np.ndarray) -> "SpectralField":
        """Multiply by a function of y given at the nodes (no dealiasing needed)."""
        return SpectralField(self.grid, self.coeffs * np.asarray(profile)[None, :])

    def multiplier(self, symbol: np.ndarray) -> "SpectralField":
        """Apply a Fourier multiplier given per mode in FFT order."""
        return SpectralField(self.grid, self.coeffs * np.asarray(symbol)[:, None], self.parity)

    def with_parity(self, parity: str) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), parity)

    def physical(self, real: bool = True) -> np.ndarray:
        return from_spectral(self, real=real)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))


def zeros(grid: Grid, parity: str = "generic") -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=complex), parity)


def to_spectral(samples: np.ndarray, grid: Grid, parity: str = "generic") -> SpectralField:
    """Forward transform of values sampled at (x_i, y_j)."""
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    return SpectralField(grid, sfft.fft(samples, axis=0) / grid.n_x, parity)


def from_spectral(f: SpectralField, real: bool = True) -> np.ndarray:
    values = sfft.ifft(f.coeffs, axis=0) * f.grid.n_x
    return values.real if real else values


def from_function(grid: Grid, func, parity: str = "generic") -> SpectralField:
    """Sample ``func(x, y)`` on the grid (broadcast over meshgrid arrays)."""
    xx, yy = np.meshgrid(grid.x, grid.y, indexing="ij")
    return to_spectral(np.broadcast_to(func(xx, yy), grid.shape), grid, parity)


def d_x(f: SpectralField) -> SpectralField:
    """Exact x-derivative; the unpaired Nyquist mode is dropped."""
    symbol = 1j * f.grid.xi
    symbol[f.grid.n_x // 2] = 0.0
    return f.multiplier(symbol)


def d_y(f: SpectralField, order: int = 1) -> SpectralField:
    """Second-order accurate finite-difference y-derivative."""
    mat = f.grid.derivative_matrix(order)
    return SpectralField(f.grid, (mat @ f.coeffs.T).T)


def integrate_up(f: SpectralField) -> SpectralField:
    """Return int_y^{y_max} f dz by the composite trapezoid rule."""
    c = f.coeffs
    panels = 0.5 * f.grid.dy * (c[:, :-1] + c[:, 1:])
    out = np.zeros_like(c)
    out[:, :-1] = np.cumsum(panels[:, ::-1], axis=1)[:, ::-1]
    return SpectralField(f.grid, out)


def integrate_down(f: SpectralField) -> SpectralField:
    """Return int_0^y f dz by the composite trapezoid rule."""
    c = f.coeffs
    panels = 0.5 * f.grid.dy * (c[:, :-1] + c[:, 1:])
    out = np.zeros_like(c)
    out[:, 1:] = np.cumsum(panels, axis=1)
    return SpectralField(f.grid, out)


def to_padded(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Physical values on the 3/2 padded x-grid."""
    full = np.zeros((grid.pad_size, coeffs.shape[1]), dtype=complex)
    full[grid.pad_index] = coeffs
    return sfft.ifft(full, axis=0) * grid.pad_size


def from_padded(grid: Grid, values: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    """Grid coefficients of padded physical values, optionally masked."""
    spec = sfft.fft(values, axis=0)[grid.pad_index] / grid.pad_size
    if mask is not None:
        spec *= mask[:, None]
    return spec


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Dealiased pointwise product."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    prod = to_padded(grid, f.coeffs) * to_padded(grid, g.coeffs)
    return SpectralField(grid, from_padded(grid, prod, grid.dealias_mask))


def random_field(grid: Grid, rng: np.random.Generator, band: int | None = None, decay: float = 1.0,
                 real: bool = True, profile: np.ndarray | None = None) -> SpectralField:
    """Random band-limited field with spectrum decaying like [xi]^-decay."""
    band = grid.n_x // 3 if band is None else band
    xi = grid.xi
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    coeffs *= ((1 + xi**2) ** (-decay / 2) * (np.abs(xi) <= band))[:, None]
    if real:
        coeffs = 0.5 * (coeffs + np.conj(coeffs[_reflection(grid)]))
        coeffs[grid.n_x // 2] = 0.0
    if profile is not None:
        coeffs *= np.asarray(profile)[None, :]
    return SpectralField(grid, coeffs)


def _reflection(grid: Grid) -> np.ndarray:
    """Index map xi -> -xi in FFT order (Nyquist maps to itself)."""
    return np.mod(-np.arange(grid.n_x), grid.n_x)
