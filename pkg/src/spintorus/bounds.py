"""Lower bounds for Dirac eigenvalues and their parameter optimization.

The bound family evaluated here, for a metric with scalar curvature S and
a free test function h with parameters a, b:

    lambda^2 >= n/(n-1) * inf { S/4 - ((n-1)/2 - a) lap(h)
                                - c(n,a,b) |dh|^2 },
    c(n,a,b) = (n-1)(n-2)/4 + a^2 + n b^2 - n a + 2a - 2ab,

with the classical specializations

    friedrich :  h = 0            ->  n/(4(n-1)) * min S
    baer      :  a = b = 0, f = -(n-1)h/2
              ->  n/(n-1) * inf { S/4 + lap(f) - (n-2)/(n-1) |df|^2 }
    hijazi    :  u = e^(-(n-2)h/2), n >= 3
              ->  n/(4(n-1)) * inf { S + 4(n-1)/(n-2) lap(u)/u },

and the energy-momentum refinement for an eigenspinor with tensor T_hat
(support-restricted, no n/(n-1) prefactor):

    lambda^2 >= inf_support { S/4 + |T_hat|^2/4 - ((n-1)/2 - a) lap(h)
                              - c(n,a,b) |dh|^2 }.

c(.,a,b) is a positive-definite quadratic in (a, b); its minimum
(n-2)/(4(n-1)) is attained at a = n(n-2)/(2(n-1)), b = (n-2)/(2(n-1)),
where additionally (n-1)/2 - a = 1/(2(n-1)).

All geometric quantities (curved Laplacian, curved |dh|^2, scalar
curvature) are evaluated in the metric under test; infima are taken over
grid points.  Every evaluator accepts ``sign_flip`` to test -h, since the
bounds hold for every real h and the optimal sign of the linear lap(h)
term depends on the metric.

The Yamabe operator L = 4(n-1)/(n-2) lap + S enters through its first
eigenvalue mu_1, computed with the same folded-spectrum machinery as the
Dirac solve (symmetrized with the volume-density weight).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptySupport, PositivityError, UnsupportedDimension
from .solver import lowest_abs_eigenpairs
from .spinor_calculus import EnergyMomentumField
from .torus_geometry import ConformalTorus


@dataclass
class BoundParams:
    """Free parameters of the bound family: (a, b) and the test function h
    (independent of the metric's h; None means h = 0)."""

    a: float = 0.0
    b: float = 0.0
    h: Optional[np.ndarray] = None
    sign_flip: bool = False
    label: str = "zero"


@dataclass
class BoundReport:
    """One evaluated bound against a computed lambda^2."""

    bound_name: str
    rhs: float
    lambda_sq: float
    a: float = 0.0
    b: float = 0.0
    h_label: str = "zero"
    sign_flip: bool = False
    argmin: tuple = ()
    strategy: str = ""

    @property
    def slack(self) -> float:
        return self.lambda_sq - self.rhs


def quadratic_coeff(n, a, b):
    """c(n, a, b); pure Python arithmetic so Fraction inputs stay exact."""
    return (n - 1) * (n - 2) / 4 + a * a + n * b * b - n * a + 2 * a - 2 * a * b


def optimal_ab(n: int):
    """Parameters minimizing the |dh|^2 coefficient:
    a = n(n-2)/(2(n-1)), b = (n-2)/(2(n-1))."""
    return (n * (n - 2) / (2 * (n - 1)), (n - 2) / (2 * (n - 1)))


def friedrich_rhs(n: int, s_min: float) -> float:
    """n S_min / (4(n-1))."""
    if n < 2:
        raise UnsupportedDimension("bound requires n >= 2")
    return n * s_min / (4 * (n - 1))


def _test_function(metric: ConformalTorus, params: BoundParams) -> np.ndarray:
    if params.h is None:
        return np.zeros(metric.grid.shape)
    h = np.asarray(params.h, dtype=float)
    return -h if params.sign_flip else h


def conformal_family_integrand(metric: ConformalTorus, params: BoundParams) -> np.ndarray:
    """S/4 - ((n-1)/2 - a) lap(h) - c(n,a,b) |dh|^2, metric quantities."""
    n = metric.dim
    ht = _test_function(metric, params)
    c = quadratic_coeff(n, params.a, params.b)
    return (
        metric.scalar_curvature / 4
        - ((n - 1) / 2 - params.a) * metric.laplacian(ht)
        - c * metric.gradient_norm_sq(ht)
    )


def conformal_family_rhs(metric: ConformalTorus, params: BoundParams) -> float:
    n = metric.dim
    integrand = conformal_family_integrand(metric, params)
    return n / (n - 1) * float(integrand.min())


def baer_rhs(metric: ConformalTorus, f: np.ndarray) -> float:
    """n/(n-1) inf { S/4 + lap(f) - (n-2)/(n-1) |df|^2 }."""
    n = metric.dim
    integrand = (
        metric.scalar_curvature / 4
        + metric.laplacian(f)
        - (n - 2) / (n - 1) * metric.gradient_norm_sq(f)
    )
    return n / (n - 1) * float(integrand.min())


def hijazi_rhs(metric: ConformalTorus, u: np.ndarray) -> float:
    """n/(4(n-1)) inf { S + 4(n-1)/(n-2) lap(u)/u }, n >= 3, u > 0."""
    n = metric.dim
    if n < 3:
        raise UnsupportedDimension("this form requires n >= 3")
    if np.min(u) <= 0:
        raise PositivityError("test function u must be strictly positive")
    integrand = metric.scalar_curvature + 4 * (n - 1) / (n - 2) * metric.laplacian(u) / u
    return n / (4 * (n - 1)) * float(integrand.min())


def em_family_integrand(
    metric: ConformalTorus, emf: EnergyMomentumField, params: BoundParams
) -> np.ndarray:
    """S/4 + |T_hat|^2/4 - ((n-1)/2 - a) lap(h) - c(n,a,b) |dh|^2."""
    return conformal_family_integrand(metric, params) + emf.norm_sq / 4


def em_family_rhs(
    metric: ConformalTorus, emf: EnergyMomentumField, params: BoundParams
) -> float:
    if not emf.support_mask.any():
        raise EmptySupport("energy-momentum support mask is empty")
    integrand = em_family_integrand(metric, emf, params)
    return float(integrand[emf.support_mask].min())


def em_hijazi_rhs(metric: ConformalTorus, emf: EnergyMomentumField, u: np.ndarray) -> float:
    """1/4 inf_support { S + |T_hat|^2 + 4(n-1)/(n-2) lap(u)/u }, n >= 3."""
    n = metric.dim
    if n < 3:
        raise UnsupportedDimension("this form requires n >= 3")
    if np.min(u) <= 0:
        raise PositivityError("test function u must be strictly positive")
    if not emf.support_mask.any():
        raise EmptySupport("energy-momentum support mask is empty")
    integrand = (
        metric.scalar_curvature
        + emf.norm_sq
        + 4 * (n - 1) / (n - 2) * metric.laplacian(u) / u
    )
    return 0.25 * float(integrand[emf.support_mask].min())


def em_yamabe_rhs(
    metric: ConformalTorus, emf: EnergyMomentumField, mu1: Optional[float] = None
) -> float:
    """mu_1/4 + 1/4 inf_support |T_hat|^2."""
    if mu1 is None:
        mu1, _ = yamabe_mu1(metric)
    if not emf.support_mask.any():
        raise EmptySupport("energy-momentum support mask is empty")
    return 0.25 * mu1 + 0.25 * float(emf.norm_sq[emf.support_mask].min())


def yamabe_mu1(metric: ConformalTorus, seed: int = 991) -> tuple:
    """First eigenvalue of L = 4(n-1)/(n-2) lap + S and its eigenfunction.

    The operator is self-adjoint against the curved volume density w =
    e^(-nh); the standard-form operator w^(1/2) L w^(-1/2) is solved with
    the shared folded solver, shifted below min(S) so the eigenvalue
    nearest the shift is the bottom of the spectrum (lap >= 0 gives
    mu_1 >= min S).  The returned eigenfunction is real, scaled to unit
    maximum with positive mean.
    """
    n = metric.dim
    if n < 3:
        raise UnsupportedDimension("Yamabe operator enters only for n >= 3")
    grid = metric.grid
    cn = 4 * (n - 1) / (n - 2)
    s_field = metric.scalar_curvature
    shift = float(s_field.min()) - 1.0
    wsqrt = np.exp(-0.5 * n * metric.h)

    def apply_block(u: np.ndarray) -> np.ndarray:
        f = u[:, 0] / wsqrt
        lf = np.stack([metric.laplacian(f[i]) for i in range(f.shape[0])])
        return (wsqrt * (cn * lf + s_field * f))[:, None]

    freqs = grid.frequencies()
    lap_flat = (2 * np.pi) ** 2 * sum(f * f for f in freqs)
    # model the folded operator (L - shift)^2, not L itself
    model = (cn * lap_flat + max(1.0, float(s_field.mean()) - shift)) ** 2
    osc = float(metric.h.max() - metric.h.min())
    result = lowest_abs_eigenpairs(
        apply_block,
        model,
        (1,) + grid.shape,
        1,
        modulation_bounds=(0.5 * np.exp(-2 * osc), 2.0 * np.exp(2 * osc)),
        pad=8,
        seed=seed,
        shift=shift,
    )
    mu1 = float(result.values[0])
    u = result.vectors[0].reshape(grid.shape) / wsqrt
    # ground state is real up to a global phase; rotate and orient it
    phase = u.ravel()[int(np.argmax(np.abs(u)))]
    u = (u * np.conj(phase / abs(phase))).real
    if u.sum() < 0:
        u = -u
    u = u / np.max(np.abs(u))
    return mu1, u


_DEFAULT_STRATEGIES = ("remark_closed_form", "grid_sweep", "coordinate_ascent")


def _ab_candidates(n: int, strategy: str):
    a_star, b_star = optimal_ab(n)
    cands = [(a_star, b_star), (0.0, 0.0)]
    if strategy in ("grid_sweep", "coordinate_ascent"):
        offsets = np.linspace(-1.0, 1.0, 21)
        cands.extend((a_star + da, b_star + db) for da in offsets for db in offsets)
    return cands


def maximize_bound(
    metric: ConformalTorus,
    lambda_sq: float,
    emf: Optional[EnergyMomentumField] = None,
    strategy: str = "grid_sweep",
    extra_h: tuple = (),
) -> BoundReport:
    """Best right-hand side over the candidate parameter family.

    Candidates: (a, b) from the closed-form optimum, (0, 0) (the equality
    parameters of the limiting case), and for the sweeping strategies a
    21x21 grid of half-width one around the optimum; h from zero, the
    metric's own conformal factor, its individual Fourier modes, any
    supplied extras, and, when an energy-momentum field is given, the
    limiting-case candidate -log(spinor density)/(n-1).  Both signs of
    every h are tried.  ``coordinate_ascent`` refines the best (a, b) by
    shrinking local searches, so it never returns less than the sweep.
    """
    if strategy not in _DEFAULT_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    n = metric.dim
    grid = metric.grid
    h_cands: list = [("zero", None)]
    if np.any(metric.h):
        h_cands.append(("metric_h", metric.h))
    for idx, mode in enumerate(metric.modes):
        single = ConformalTorus.from_modes(grid, [mode])
        h_cands.append((f"mode_{idx}", single.h))
    for idx, extra in enumerate(extra_h):
        h_cands.append((f"extra_{idx}", np.asarray(extra, dtype=float)))
    if emf is not None:
        dens = np.where(emf.support_mask, emf.spinor_density, np.nan)
        if np.isnan(dens).any():
            dens = np.where(np.isnan(dens), np.nanmin(dens), dens)
        h_cands.append(("limiting_density", -np.log(dens) / (n - 1)))

    base = metric.scalar_curvature / 4
    if emf is not None:
        base = base + emf.norm_sq / 4
        outside = ~emf.support_mask

    def make_evaluator(h_arr, flip):
        # the (a, b) sweep reuses the two spectral fields of each h
        if h_arr is None:
            lap_t = grad_t = None
        else:
            ht = -h_arr if flip else h_arr
            lap_t = metric.laplacian(ht)
            grad_t = metric.gradient_norm_sq(ht)

        def evaluate(a, b):
            integrand = base.copy()
            if lap_t is not None:
                integrand -= ((n - 1) / 2 - a) * lap_t
                integrand -= quadratic_coeff(n, a, b) * grad_t
            if emf is not None:
                integrand[outside] = np.inf
                value = float(integrand.min())
            else:
                value = n / (n - 1) * float(integrand.min())
            arg = np.unravel_index(int(np.argmin(integrand)), grid.shape)
            return value, arg

        return evaluate

    best = None
    ab_cands = _ab_candidates(n, strategy)
    for h_label, h_arr in h_cands:
        flips = (False,) if h_arr is None else (False, True)
        for flip in flips:
            evaluate = make_evaluator(h_arr, flip)
            for a, b in ab_cands:
                value, arg = evaluate(a, b)
                cand = (value, a, b, h_label, flip, arg)
                if best is None or value > best[0]:
                    best = cand
            if strategy == "coordinate_ascent":
                a, b = best[1], best[2]
                step = 0.25
                for _ in range(8):
                    local = [
                        (a + da * step, b + db * step)
                        for da in (-1, 0, 1)
                        for db in (-1, 0, 1)
                    ]
                    for aa, bb in local:
                        value, arg = evaluate(aa, bb)
                        if value > best[0]:
                            best = (value, aa, bb, h_label, flip, arg)
                            a, b = aa, bb
                    step *= 0.5
    value, a, b, h_label, flip, arg = best
    name = "em_family" if emf is not None else "conformal_family"
    return BoundReport(
        bound_name=name,
        rhs=value,
        lambda_sq=lambda_sq,
        a=a,
        b=b,
        h_label=h_label,
        sign_flip=flip,
        argmin=tuple(int(i) for i in arg),
        strategy=strategy,
    )
