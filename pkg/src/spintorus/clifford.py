"""Concrete Clifford algebra representations for dimensions 2 and 3.

Conventions used throughout the package:

* generators gamma_j = i * sigma_j (Pauli-type), so each gamma_j is
  skew-adjoint and gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij Id,
  i.e. vectors square to minus their length: X.X.psi = -|X|^2 psi;
* the spinor space is C^2 in both dimensions;
* the spinor inner product ( , ) is the REAL part of the hermitian
  product <u, v> = sum conj(v_a) u_a.

With these choices the assembled Dirac operator sum_j gamma_j d_j is
self-adjoint and has a real, symmetric spectrum.  In dimension 3 the
volume element gamma_1 gamma_2 gamma_3 is the scalar +Id; the sign is the
orientation convention of this package (flipping any one generator's sign
flips it, conjugating the spectrum lambda -> -lambda).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDimension

SPINOR_DIM = 2

_SIGMA = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


@dataclass(frozen=True)
class CliffordRep:
    """Skew-adjoint Clifford generators for one dimension.

    Immutable after construction; safe for concurrent reads.
    """

    dim: int
    generators: tuple

    @property
    def volume_element(self) -> np.ndarray:
        """Product of all generators (scalar matrix in odd dimensions)."""
        out = np.eye(SPINOR_DIM, dtype=complex)
        for g in self.generators:
            out = out @ g
        return out


def make_rep(dim: int) -> CliffordRep:
    """Return the fixed representation gamma_j = i sigma_j for dim in {2, 3}."""
    if dim not in (2, 3):
        raise UnsupportedDimension(f"Clifford representation only for dim 2 or 3, got {dim}")
    gens = tuple(1j * _SIGMA[j] for j in range(dim))
    return CliffordRep(dim=dim, generators=gens)


def clifford_mul(rep: CliffordRep, v: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Clifford action (sum_j v_j gamma_j) s of a real vector on a spinor.

    ``v`` has length rep.dim; ``s`` is a length-2 complex spinor value.
    Total function, linear in both arguments.
    """
    mat = vector_matrix(rep, v)
    return mat @ np.asarray(s, dtype=complex)


def vector_matrix(rep: CliffordRep, v: np.ndarray) -> np.ndarray:
    """The 2x2 matrix of Clifford multiplication by the vector ``v``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (rep.dim,):
        raise ValueError(f"expected vector of length {rep.dim}, got shape {v.shape}")
    out = np.zeros((SPINOR_DIM, SPINOR_DIM), dtype=complex)
    for vj, g in zip(v, rep.generators):
        out += vj * g
    return out


def real_pairing(u: np.ndarray, v: np.ndarray) -> float:
    """Spinor product ( , ): real part of the hermitian product."""
    return float(np.real(np.vdot(v, u)))
