"""Discrete calculus on flat tori T^n = R^n/Z^n and conformal deformations.

Scalar fields are plain real numpy arrays of shape ``grid.shape``; vector
fields carry a leading axis of length ``dim``.  All differentiation is
Fourier-pseudospectral (exact for trigonometric polynomials below the
Nyquist frequency); products are formed pointwise in physical space.

Sign conventions:

* the Laplacian is the nonnegative (geometer's) one, flat case
  lap(f) = -sum_j d^2 f / dx_j^2;
* the conformal metric is g_conf = e^(-2h) * g_flat, with orthonormal
  frame E_i = e^h d/dx_i, volume density e^(-n h), and scalar curvature
  S = e^(2h) * ( -2(n-1) lap(h) - (n-1)(n-2) |dh|^2 ).

All public objects are immutable after construction (cached fields are
computed lazily but never change); operations are safe to call
concurrently on distinct inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import UnsupportedDimension

_FFT_WORKERS = -1


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the unit torus, n points per axis."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise UnsupportedDimension(f"grid dimension must be 2 or 3, got {self.dim}")
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"points per axis must be a power of two >= 4, got {self.n}")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.n ** (-self.dim)

    def axis_coordinate(self, axis: int) -> np.ndarray:
        return np.arange(self.n) / self.n

    def coordinates(self) -> list:
        """Meshgrid coordinate arrays, one per axis, each of shape ``shape``."""
        x = np.arange(self.n) / self.n
        return list(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def frequencies(self, shift: Sequence[float] | None = None) -> list:
        """Integer mode frequencies k_j (+ optional per-axis shift), broadcast
        to full grid shape.  Multiply by 2*pi for the derivative symbol."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        if shift is None:
            shift = (0.0,) * self.dim
        return list(np.meshgrid(*[k + s for s in shift], indexing="ij"))


def _fftn(a: np.ndarray, dim: int) -> np.ndarray:
    return sfft.fftn(a, axes=tuple(range(-dim, 0)), workers=_FFT_WORKERS)


def _ifftn(a: np.ndarray, dim: int) -> np.ndarray:
    return sfft.ifftn(a, axes=tuple(range(-dim, 0)), workers=_FFT_WORKERS)


def spectral_gradient(f: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Flat gradient (d_1 f, ..., d_n f) by Fourier differentiation."""
    F = _fftn(f, grid.dim)
    freqs = grid.frequencies()
    out = np.empty((grid.dim,) + grid.shape, dtype=f.dtype)
    for j in range(grid.dim):
        df = _ifftn(2j * np.pi * freqs[j] * F, grid.dim)
        out[j] = df.real if not np.iscomplexobj(f) else df
    return out

def spectral_partial(f: np.ndarray, grid: TorusGrid, axis: int) -> np.ndarray:
    """Single flat partial derivative d_axis f."""
    F = _fftn(f, grid.dim)
    df = _ifftn(2j * np.pi * grid.frequencies()[axis] * F, grid.dim)
    return df.real if not np.iscomplexobj(f) else df


def spectral_hessian(f: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """All second partials d_i d_j f, shape (dim, dim) + grid.shape."""
    F = _fftn(f, grid.dim)
    freqs = grid.frequencies()
    out = np.empty((grid.dim, grid.dim) + grid.shape, dtype=f.dtype)
    for i in range(grid.dim):
        for j in range(i, grid.dim):
            d2 = _ifftn(-(2 * np.pi) ** 2 * freqs[i] * freqs[j] * F, grid.dim)
            out[i, j] = out[j, i] = d2.real if not np.iscomplexobj(f) else d2
    return out


def flat_laplacian(f: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Nonnegative flat Laplacian -sum_j d^2_j f via the |2 pi k|^2 multiplier."""
    freqs = grid.frequencies()
    mult = (2 * np.pi) ** 2 * sum(k * k for k in freqs)
    out = _ifftn(mult * _fftn(f, grid.dim), grid.dim)
    return out.real if not np.iscomplexobj(f) else out


@dataclass
class SymmetricTensorField:
    """Symmetric 2-tensor sampled on the grid, orthonormal-frame components.

    ``components`` has shape (dim, dim) + grid.shape and is symmetric in the
    first two axes by construction.
    """

    components: np.ndarray
    grid: TorusGrid

    def __post_init__(self):
        c = self.components
        self.components = 0.5 * (c + np.swapaxes(c, 0, 1))

    def trace(self) -> np.ndarray:
        return np.einsum("ii...->...", self.components)

    def norm_sq(self) -> np.ndarray:
        """Pointwise squared frame norm sum_ij T_ij^2."""
        return np.einsum("ij...,ij...->...", self.components, self.components)

    def det_2d(self) -> np.ndarray:
        if self.grid.dim != 2:
            raise UnsupportedDimension("determinant helper is for 2x2 fields")
        c = self.components
        return c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]


@dataclass
class ConformalTorus:
    """Flat torus plus conformal factor h defining g_conf = e^(-2h) g_flat.

    Derived geometric fields (gradient of h, scalar curvature, volume
    density, ...) are cached on first access and treated as immutable.
    """

    grid: TorusGrid
    h: np.ndarray
    modes: tuple = field(default=(), repr=False)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if self.h.shape != self.grid.shape:
            raise ValueError(f"h has shape {self.h.shape}, expected {self.grid.shape}")
        if not np.all(np.isfinite(self.h)):
            raise ValueError("h contains non-finite values")

    # -- constructors -----------------------------------------------------

    @classmethod
    def flat(cls, grid: TorusGrid) -> "ConformalTorus":
        return cls(grid=grid, h=np.zeros(grid.shape))

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes: Iterable) -> "ConformalTorus":
        """Build h as a finite Fourier sum.

        ``modes`` is an iterable of (wavevector, cos_coeff, sin_coeff) with
        integer wavevectors inside the Nyquist box |k_j| < n/2.
        """
        modes = tuple((tuple(int(c) for c in wv), float(a), float(b)) for wv, a, b in modes)
        coords = grid.coordinates()
        h = np.zeros(grid.shape)
        for wavevector, cos_coeff, sin_coeff in modes:
            if len(wavevector) != grid.dim:
                raise ValueError(f"wavevector {wavevector} has wrong length for dim {grid.dim}")
            if any(abs(k) >= grid.n // 2 for k in wavevector):
                raise ValueError(f"wavevector {wavevector} exceeds Nyquist box for n={grid.n}")
            phase = 2 * np.pi * sum(k * x for k, x in zip(wavevector, coords))
            h += cos_coeff * np.cos(phase) + sin_coeff * np.sin(phase)
        return cls(grid=grid, h=h, modes=modes)

    # -- cached geometry ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def grad_h(self) -> np.ndarray:
        return spectral_gradient(self.h, self.grid)

    @cached_property
    def laplacian_h(self) -> np.ndarray:
        """Nonnegative flat Laplacian of h."""
        return flat_laplacian(self.h, self.grid)

    @cached_property
    def grad_h_norm_sq(self) -> np.ndarray:
        """Flat |dh|^2."""
        return np.einsum("j...,j...->...", self.grad_h, self.grad_h)

    @cached_property
    def exp_h(self) -> np.ndarray:
        return np.exp(self.h)

    @cached_property
    def volume_density(self) -> np.ndarray:
        """Density of the conformal volume form against the flat one: e^(-n h)."""
        return np.exp(-self.dim * self.h)

    @cached_property
    def scalar_curvature(self) -> np.ndarray:
        n = self.dim
        return np.exp(2 * self.h) * (
            -2 * (n - 1) * self.laplacian_h - (n - 1) * (n - 2) * self.grad_h_norm_sq
        )

    @cached_property
    def total_volume(self) -> float:
        return float(np.sum(self.volume_density) * self.grid.cell_volume)

    # -- calculus in the conformal metric ---------------------------------

    def frame_gradient(self, f: np.ndarray) -> np.ndarray:
        """Gradient of f in the orthonormal frame of the conformal metric,
        components E_i(f) = e^h d_i f."""
        return self.exp_h * spectral_gradient(f, self.grid)

    def gradient_norm_sq(self, f: np.ndarray) -> np.ndarray:
        """|df|^2 in the conformal metric: e^(2h) |df|^2_flat."""
        g = spectral_gradient(f, self.grid)
        return np.exp(2 * self.h) * np.einsum("j...,j...->...", g, g)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Nonnegative Laplacian of the conformal metric, via the conformal
        transformation lap_conf(f) = e^(2h) (lap_flat f + (n-2) <dh, df>)."""
        n = self.dim
        df = spectral_gradient(f, self.grid)
        cross = np.einsum("j...,j...->...", self.grad_h, df)
        return np.exp(2 * self.h) * (flat_laplacian(f, self.grid) + (n - 2) * cross)

    def laplacian_divgrad(self, f: np.ndarray) -> np.ndarray:
        """Same operator through the weighted div/grad pipeline
        -e^(nh) d_i ( e^((2-n)h) d_i f ); cross-validates :meth:`laplacian`."""
        n = self.dim
        df = spectral_gradient(f, self.grid)
        weighted = np.exp((2 - n) * self.h) * df
        div = sum(spectral_partial(weighted[j], self.grid, j) for j in range(n))
        return -np.exp(n * self.h) * div

    def integrate(self, f: np.ndarray) -> float:
        """Integral of f against the conformal volume form."""
        return float(np.sum(f * self.volume_density).real * self.grid.cell_volume)

    def gauss_curvature_2d(self) -> np.ndarray:
        """Gauss curvature of e^(-2h) g_flat (2D only): K = -e^(2h) lap(h)."""
        if self.dim != 2:
            raise UnsupportedDimension("Gauss curvature is a 2D quantity")
        return -np.exp(2 * self.h) * self.laplacian_h


def integrate_flat(f: np.ndarray, grid: TorusGrid) -> float:
    """Integral over the flat unit torus (trapezoidal = exact for band-limited)."""
    return float(np.sum(f).real * grid.cell_volume)


def ricci_conformally_flat(metric: ConformalTorus) -> SymmetricTensorField:
    """Ricci tensor of e^(-2h) g_flat in its orthonormal frame.

    Frame components
    Ric_ij = e^(2h) [ (n-2)(Hess_ij(h) + dh_i dh_j)
                      - (lap(h) + (n-2)|dh|^2) delta_ij ],
    with the nonnegative flat Laplacian.  In 2D this collapses to
    (S/2) delta_ij; the trace equals the scalar curvature in any dimension.
    """
    n = metric.dim
    grid = metric.grid
    hess = spectral_hessian(metric.h, grid)
    dh = metric.grad_h
    comps = np.zeros((n, n) + grid.shape)
    iso = -(metric.laplacian_h + (n - 2) * metric.grad_h_norm_sq)
    for i in range(n):
        for j in range(n):
            comps[i, j] = (n - 2) * (hess[i, j] + dh[i] * dh[j])
            if i == j:
                comps[i, j] += iso
    comps *= np.exp(2 * metric.h)
    return SymmetricTensorField(components=comps, grid=grid)
