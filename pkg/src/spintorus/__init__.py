"""Numerical laboratory for Dirac spectra on conformally flat tori:
pseudospectral eigensolves, eigenvalue lower bounds, and the exact
energy-momentum identities of dimensions 2 and 3."""

from .clifford import CliffordRep, clifford_mul, make_rep
from .dirac import (
    EigenPair,
    SpinorField,
    SpinStructure,
    all_spin_structures,
    curved_spectrum,
    flat_dirac_apply,
    homothety_check,
    kernel_dimension,
)
from .errors import (
    ConfigError,
    EmptySupport,
    PositivityError,
    ScalarCurvatureZero,
    SolverDidNotConverge,
    SpinTorusError,
    SupportHole,
    UnsupportedDimension,
)
from .spinor_calculus import (
    EnergyMomentumField,
    SpinorJet,
    covariant_derivative,
    energy_momentum,
)
from .torus_geometry import ConformalTorus, SymmetricTensorField, TorusGrid

__version__ = "0.1.0"

__all__ = [
    "CliffordRep",
    "ConformalTorus",
    "ConfigError",
    "EigenPair",
    "EmptySupport",
    "EnergyMomentumField",
    "PositivityError",
    "ScalarCurvatureZero",
    "SolverDidNotConverge",
    "SpinTorusError",
    "SpinStructure",
    "SpinorField",
    "SpinorJet",
    "SupportHole",
    "SymmetricTensorField",
    "TorusGrid",
    "UnsupportedDimension",
    "all_spin_structures",
    "clifford_mul",
    "covariant_derivative",
    "curved_spectrum",
    "energy_momentum",
    "flat_dirac_apply",
    "homothety_check",
    "kernel_dimension",
    "make_rep",
]
