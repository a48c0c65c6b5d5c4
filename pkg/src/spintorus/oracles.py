"""Closed-form reference data: flat torus symbols, round spheres, constant
mean curvature spheres, and the Sasakian limiting-case numbers.

These are the independent oracles the numerical pipelines are checked
against: the flat Dirac spectrum comes from exact symbol enumeration over
lattice modes, the sphere data from the classical closed forms (round
S^n of radius r: scalar curvature n(n-1)/r^2, smallest Dirac eigenvalue
n/(2r) realized by Killing spinors with |T_hat|^2 = 4 lambda^2 / n), and
the Sasakian example from its displayed constants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, pi
from typing import Iterator, Optional

import numpy as np

from .dirac import SpinStructure
from .errors import PositivityError, UnsupportedDimension
from .identities import IdentityReport


@dataclass
class AnalyticModel:
    """Closed-form geometry with a known Dirac spectrum."""

    name: str
    dim: int
    scalar_curvature: float
    volume: float
    killing_constant: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def dirac_eigenvalues(self) -> Iterator[tuple]:
        """Yield (lambda, multiplicity) pairs, ascending in |lambda|."""
        r = self.extra.get("radius", 1.0)
        n = self.dim
        for k in itertools.count():
            mult = 2 ** (n // 2) * comb(n + k - 1, k)
            lam = (n / 2 + k) / r
            yield (lam, mult)
            yield (-lam, mult)

    @property
    def em_norm_sq(self) -> Optional[float]:
        """|T_hat|^2 = 4 lambda^2 / n for the Killing eigenspinor."""
        if self.killing_constant is None:
            return None
        lam1 = self.dim * self.killing_constant
        return 4 * lam1**2 / self.dim


def flat_torus_spectrum(n: int, delta: SpinStructure, cutoff: float) -> list:
    """All eigenvalues +/- 2 pi |k + delta| with |lambda| <= cutoff.

    Returns (lambda, multiplicity) sorted by (|lambda|, lambda); the zero
    mode of the trivial structure counts twice (two parallel spinors), and
    every nonzero mode contributes one +|.| and one -|.| per lattice point
    (spinor dimension two splits evenly across the symbol's two bands).
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if delta.dim != n:
        raise ValueError("spin structure dimension mismatch")
    radius = cutoff / (2 * pi)
    kmax = int(np.ceil(radius + 0.5))
    counts: dict = {}
    for kvec in itertools.product(range(-kmax, kmax + 1), repeat=n):
        xi = np.sqrt(sum((kvec[j] + delta.shift[j]) ** 2 for j in range(n)))
        lam = 2 * pi * xi
        if lam > cutoff:
            continue
        if lam == 0.0:
            counts[0.0] = counts.get(0.0, 0) + 2
        else:
            key = round(lam, 12)
            counts[key] = counts.get(key, 0) + 1
            counts[-key] = counts.get(-key, 0) + 1
    return sorted(counts.items(), key=lambda kv: (abs(kv[0]), kv[0]))


def flat_torus_lowest(n: int, delta: SpinStructure, count: int) -> np.ndarray:
    """First ``count`` eigenvalues (with multiplicity) by (|lambda|, lambda)."""
    cutoff = 4 * pi
    while True:
        spectrum = flat_torus_spectrum(n, delta, cutoff)
        values: list = []
        for lam, mult in spectrum:
            values.extend([lam] * mult)
        if len(values) >= count:
            return np.array(values[:count])
        cutoff *= 1.6


def round_sphere_model(n: int, radius: float = 1.0) -> AnalyticModel:
    """Round S^n (n = 2 or 3) of the given radius."""
    if n not in (2, 3):
        raise UnsupportedDimension("sphere models provided for n = 2 and 3")
    if radius <= 0:
        raise PositivityError("radius must be positive")
    volume = 4 * pi * radius**2 if n == 2 else 2 * pi**2 * radius**3
    return AnalyticModel(
        name=f"round_S{n}",
        dim=n,
        scalar_curvature=n * (n - 1) / radius**2,
        volume=volume,
        killing_constant=1 / (2 * radius),
        extra={
            "radius": radius,
            "euler_characteristic": 2 if n == 2 else 0,
            "mean_curvature": 1 / radius,
            "second_fundamental_norm_sq": 2 / radius**2,
        },
    )


def cmc_sphere_check(radius: float) -> IdentityReport:
    """Constant-mean-curvature surface identity on the round sphere in R^3:

        H^2 = pi chi / vol + 1/(4 vol) int |II|^2,

    evaluated with H = 1/r, chi = 2, vol = 4 pi r^2, |II|^2 = 2/r^2."""
    if radius <= 0:
        raise PositivityError("radius must be positive")
    model = round_sphere_model(2, radius)
    h_mean = model.extra["mean_curvature"]
    chi = model.extra["euler_characteristic"]
    vol = model.volume
    ii_sq = model.extra["second_fundamental_norm_sq"]
    lhs = h_mean**2
    integral_ii = ii_sq * vol  # |II|^2 is constant on the round sphere
    rhs = pi * chi / vol + integral_ii / (4 * vol)
    return IdentityReport(
        identity_name="cmc_sphere_identity",
        max_pointwise_residual=abs(lhs - rhs),
        integral_lhs=lhs,
        integral_rhs=rhs,
        tolerance=1e-14,
        passed=abs(lhs - rhs) <= 1e-14,
    )


def sasakian_constants(m: int, b: float) -> dict:
    """Limiting-case numbers on a (2m+1)-dimensional Sasakian manifold:
    lambda_1 = m + 1/2 - b and |T_hat|^2 = (4 lambda_1^2 + 8 m b^2)/(2m+1),
    which dominates 4 lambda_1^2/(2m+1) with equality iff b = 0."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    lam1 = m + 0.5 - b
    em_norm_sq = (4 * lam1**2 + 8 * m * b**2) / (2 * m + 1)
    lower = 4 * lam1**2 / (2 * m + 1)
    assert em_norm_sq >= lower - 1e-15
    return {
        "dim": 2 * m + 1,
        "lambda_1": lam1,
        "em_norm_sq": em_norm_sq,
        "em_norm_sq_lower_bound": lower,
        "is_equality": b == 0.0,
    }
