"""Flat-torus Dirac operator and the conformal eigenvalue solve.

Spin structures on T^n are labelled by a shift delta in {0, 1/2}^n: the
spinor field psi(x) = e^(2 pi i delta.x) u(x) with u periodic picks up a
sign e^(2 pi i delta_j) around the j-th cycle.  We store the periodic
part u on the grid; Fourier differentiation then acts on the shifted
modes k + delta, and all pointwise sesquilinear quantities (|psi|^2,
energy-momentum components, ...) are phase-free functions of u alone.

The Dirac operator is D = sum_j gamma_j d_j with the generators of
:mod:`spintorus.clifford`; its symbol at mode xi = k + delta is
-2 pi (xi . sigma), with eigenvalues +/- 2 pi |xi|.

For the conformal metric g_conf = e^(-2h) g_flat the spectrum of the
curved Dirac operator equals the spectrum of the weighted problem
D psi = lambda e^(-h) psi, solved here as the Hermitian standard problem
A = e^(h/2) D e^(h/2) (matrix-free, FFT-applied).  The curved eigenspinor
is reconstructed on demand as e^((n-1)h/2) psi, normalized so that its
curved L^2 norm is one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .clifford import SPINOR_DIM, make_rep
from .errors import UnsupportedDimension
from .solver import lowest_abs_eigenpairs
from .torus_geometry import ConformalTorus, TorusGrid

_FFT_WORKERS = -1


@dataclass(frozen=True)
class SpinStructure:
    """Per-axis periodicity phase; shift components are exactly 0 or 1/2."""

    shift: tuple

    def __post_init__(self):
        object.__setattr__(self, "shift", tuple(float(s) for s in self.shift))
        if not all(s in (0.0, 0.5) for s in self.shift):
            raise ValueError(f"spin structure shifts must be 0 or 1/2, got {self.shift}")

    @property
    def dim(self) -> int:
        return len(self.shift)

    @property
    def is_trivial(self) -> bool:
        return all(s == 0.0 for s in self.shift)


def all_spin_structures(dim: int):
    """All 2^dim spin structures, trivial first."""
    from itertools import product

    return [SpinStructure(s) for s in product((0.0, 0.5), repeat=dim)]


@dataclass
class SpinorField:
    """Grid-sampled spinor: periodic coefficients in the flat trivialization.

    ``values`` has shape (2,) + grid.shape, complex.
    """

    values: np.ndarray
    grid: TorusGrid
    spin_structure: SpinStructure

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        expected = (SPINOR_DIM,) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"spinor values shape {self.values.shape}, expected {expected}")
        if self.spin_structure.dim != self.grid.dim:
            raise ValueError("spin structure dimension does not match grid")

    def norm_sq_field(self) -> np.ndarray:
        """Pointwise |psi|^2 (spin-structure phases cancel)."""
        return np.einsum("a...,a...->...", self.values.conj(), self.values).real

    def l2_norm_flat(self) -> float:
        return float(np.sqrt(np.sum(self.norm_sq_field()) * self.grid.cell_volume))


@dataclass
class EigenPair:
    """One eigenvalue of the curved Dirac operator with its flat-side
    generalized eigenspinor (D psi = lambda e^(-h) psi), normalized so the
    curved spinor e^((n-1)h/2) psi has curved L^2 norm one."""

    lam: float
    spinor: SpinorField
    residual: float
    cluster: int = 0

    def curved_values(self, metric: ConformalTorus) -> np.ndarray:
        """Components of the curved eigenspinor e^((n-1)h/2) psi."""
        n = metric.dim
        return np.exp(0.5 * (n - 1) * metric.h) * self.spinor.values


# -- flat operator ----------------------------------------------------------


def _symbol_entries(grid: TorusGrid, spin: SpinStructure):
    """2x2 Dirac symbol entries -2 pi (xi . sigma) over all grid modes."""
    freqs = grid.frequencies(spin.shift)
    xi = [2 * np.pi * f for f in freqs]
    xi3 = xi[2] if grid.dim == 3 else np.zeros_like(xi[0])
    s00 = -xi3
    s11 = +xi3
    s01 = -(xi[0] - 1j * xi[1])
    s10 = -(xi[0] + 1j * xi[1])
    return s00, s01, s10, s11


def _apply_symbol_block(u: np.ndarray, entries, dim: int) -> np.ndarray:
    axes = tuple(range(-dim, 0))
    s00, s01, s10, s11 = entries
    U = sfft.fftn(u, axes=axes, workers=_FFT_WORKERS)
    comp0 = np.take(U, 0, axis=-dim - 1)
    comp1 = np.take(U, 1, axis=-dim - 1)
    v0 = s00 * comp0 + s01 * comp1
    v1 = s10 * comp0 + s11 * comp1
    V = np.stack([v0, v1], axis=-dim - 1)
    return sfft.ifftn(V, axes=axes, workers=_FFT_WORKERS)


def flat_dirac_apply(psi: SpinorField) -> SpinorField:
    """Apply D = sum_j gamma_j d_j with the spin-structure phase shifts."""
    entries = _symbol_entries(psi.grid, psi.spin_structure)
    out = _apply_symbol_block(psi.values, entries, psi.grid.dim)
    return SpinorField(values=out, grid=psi.grid, spin_structure=psi.spin_structure)


def spinor_partial(psi: SpinorField, axis: int) -> np.ndarray:
    """Shifted spectral derivative d_axis acting on the stored coefficients."""
    grid = psi.grid
    freqs = grid.frequencies(psi.spin_structure.shift)
    axes = tuple(range(-grid.dim, 0))
    U = sfft.fftn(psi.values, axes=axes, workers=_FFT_WORKERS)
    return sfft.ifftn(2j * np.pi * freqs[axis] * U, axes=axes, workers=_FFT_WORKERS)


def spinor_l2_inner(a: SpinorField, b: SpinorField) -> complex:
    """Flat L^2 hermitian inner product <a, b>."""
    return complex(np.sum(b.values.conj() * a.values) * a.grid.cell_volume)


def plane_wave_spinor(
    grid: TorusGrid, spin: SpinStructure, kvec: Sequence[int], chi: Sequence[complex]
) -> SpinorField:
    """psi = chi * e^(2 pi i (k + delta).x), stored as periodic part."""
    coords = grid.coordinates()
    phase = np.exp(2j * np.pi * sum(k * x for k, x in zip(kvec, coords)))
    values = np.stack([c * phase for c in chi])
    return SpinorField(values=values, grid=grid, spin_structure=spin)


def plane_wave_eigen_spinor(grid: TorusGrid, spin: SpinStructure, kvec, sign: int):
    """Exact flat eigenpair at mode k: lambda = sign * 2 pi |k + delta| with
    chi an eigenvector of (xi.sigma) chi = -sign |xi| chi."""
    xi = np.array([k + s for k, s in zip(kvec, spin.shift)], dtype=float)
    if grid.dim == 2:
        xi = np.append(xi, 0.0)
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        return 0.0, plane_wave_spinor(grid, spin, kvec, [1.0, 0.0])
    mat = np.array(
        [[xi[2], xi[0] - 1j * xi[1]], [xi[0] + 1j * xi[1], -xi[2]]], dtype=complex
    )
    w, v = np.linalg.eigh(mat)  # eigenvalues -|xi|, +|xi|
    chi = v[:, 0] if sign > 0 else v[:, 1]
    lam = sign * 2 * np.pi * norm
    return lam, plane_wave_spinor(grid, spin, kvec, chi)


# -- conformal spectrum ------------------------------------------------------


def _curved_apply_factory(metric: ConformalTorus, spin: SpinStructure):
    entries = _symbol_entries(metric.grid, spin)
    half = np.exp(0.5 * metric.h)
    dim = metric.dim

    def apply_block(u: np.ndarray) -> np.ndarray:
        return half * _apply_symbol_block(half * u, entries, dim)

    return apply_block


def _assign_clusters(values: np.ndarray, gap_rtol: float = 1e-6) -> np.ndarray:
    """Cluster ids over eigenvalues sorted as returned (by |lambda|)."""
    if len(values) == 0:
        return np.zeros(0, dtype=int)
    scale = max(1.0, float(np.max(np.abs(values))))
    order = np.argsort(values, kind="stable")
    ids = np.zeros(len(values), dtype=int)
    current = 0
    prev = None
    for idx in order:
        if prev is not None and abs(values[idx] - prev) > gap_rtol * scale:
            current += 1
        ids[idx] = current
        prev = values[idx]
    return ids


def curved_spectrum(
    metric: ConformalTorus,
    spin: SpinStructure,
    k_eigs: int,
    *,
    tol: float = 1e-11,
    residual_tol: float = 1e-8,
    seed: int = 1234,
    maxiter: int = 400,
    dense: bool = False,
) -> list:
    """The k_eigs eigenvalues of the conformal Dirac operator nearest zero.

    Returns a list of :class:`EigenPair` sorted by (|lambda|, lambda).  The
    flat-side spinors solve D psi = lambda e^(-h) psi; residuals are
    ||D psi - lambda e^(-h) psi|| / ||psi|| in flat L^2.
    """
    grid = metric.grid
    if k_eigs < 1:
        raise ValueError("k_eigs must be >= 1")
    total = SPINOR_DIM * grid.npoints
    if k_eigs > total:
        raise ValueError(f"k_eigs={k_eigs} exceeds operator dimension {total}")
    shape = (SPINOR_DIM,) + grid.shape
    apply_block = _curved_apply_factory(metric, spin)
    if dense:
        values, vectors = _dense_solve(apply_block, shape, k_eigs)
        iterations = 0
    else:
        freqs = grid.frequencies(spin.shift)
        lap = (2 * np.pi) ** 2 * sum(f * f for f in freqs)
        # conservative spread: near-resonant modes see a modulation ratio up
        # to e^(+-2 osc(h)) relative to the flat model
        osc = float(metric.h.max() - metric.h.min())
        result = lowest_abs_eigenpairs(
            apply_block,
            lap,
            shape,
            k_eigs,
            modulation_bounds=(np.exp(-2 * osc), np.exp(2 * osc)),
            tol=tol,
            pair_rtol=residual_tol,
            maxiter=maxiter,
            seed=seed,
        )
        values, vectors = result.values, result.vectors
    # normalize to unit curved L^2 norm and compute the reported residual
    inv_weight = np.exp(-metric.h)
    half = np.exp(0.5 * metric.h)
    pairs = []
    clusters = _assign_clusters(values)
    for j, lam in enumerate(values):
        chi = vectors[j].reshape(shape)
        psi = half * chi  # generalized eigenvector of D psi = lam e^(-h) psi
        dens = np.einsum("a...,a...->...", psi.conj(), psi).real
        nrm = np.sqrt(np.sum(dens * inv_weight) * grid.cell_volume)
        psi = psi / nrm
        field = SpinorField(values=psi, grid=grid, spin_structure=spin)
        dpsi = flat_dirac_apply(field).values
        defect = dpsi - lam * inv_weight * psi
        res = float(
            np.linalg.norm(defect.ravel()) / max(np.linalg.norm(psi.ravel()), 1e-300)
        )
        pairs.append(EigenPair(lam=float(lam), spinor=field, residual=res, cluster=int(clusters[j])))
    return pairs


def _dense_solve(apply_block, shape, k_eigs):
    """Assemble the symmetrized operator column by column and diagonalize.

    Trusted reference path for the iterative solver; limited to total
    dimension 8192 (one gigabyte of complex matrix at the cap).
    """
    dim = int(np.prod(shape))
    if dim > 8192:
        raise ValueError(f"dense path limited to dimension 8192, got {dim}")
    mat = np.zeros((dim, dim), dtype=complex)
    block = 256
    for start in range(0, dim, block):
        stop = min(start + block, dim)
        basis = np.zeros((stop - start, dim), dtype=complex)
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        mat[:, start:stop] = apply_block(basis.reshape((-1,) + shape)).reshape(-1, dim).T
    mat = 0.5 * (mat + mat.conj().T)
    w, v = np.linalg.eigh(mat)
    order = np.lexsort((w, np.abs(w)))[:k_eigs]
    return w[order], v[:, order].T


def kernel_dimension(pairs: list, tol: float = 1e-8) -> int:
    """Number of returned eigenvalues with |lambda| below ``tol``."""
    return int(sum(1 for p in pairs if abs(p.lam) < tol))


def homothety_check(
    metric: ConformalTorus,
    spin: SpinStructure,
    c: float,
    k_eigs: int = 6,
    **solver_kwargs,
) -> dict:
    """Verify spec(h + c) = e^c spec(h) eigenvalue by eigenvalue.

    Returns a report dict with both spectra and the maximal deviation
    |lambda_shifted - e^c lambda| measured relative to the spectral scale.
    """
    base = curved_spectrum(metric, spin, k_eigs, **solver_kwargs)
    shifted_metric = ConformalTorus(grid=metric.grid, h=metric.h + c)
    shifted = curved_spectrum(shifted_metric, spin, k_eigs, **solver_kwargs)
    lam0 = np.array(sorted(p.lam for p in base))
    lam1 = np.array(sorted(p.lam for p in shifted))
    expected = np.exp(c) * lam0
    scale = max(1.0, float(np.max(np.abs(expected))))
    deviation = float(np.max(np.abs(lam1 - expected)) / scale)
    return {
        "c": c,
        "base_spectrum": lam0,
        "shifted_spectrum": lam1,
        "expected": expected,
        "max_relative_deviation": deviation,
    }
