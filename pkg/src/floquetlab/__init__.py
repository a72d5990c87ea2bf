"""Floquet analysis of n-th order ordinary differential operators with
periodic coefficients: fundamental solutions, multipliers, discriminants,
Jordan structure, normalized solutions, multiplier monodromy, and the
multipoint eigenvalue problem, validated against closed-form oracles."""

__version__ = "0.1.0"

from .config import DEFAULT, Tolerances
from .trigpoly import TrigPolynomial
from .operators import (
    OperatorSpecError,
    PeriodicOperator,
    SymmetricSpec,
    adjoint_operator,
    build_operator,
    constant_operator,
    expand_symmetric,
    operator_from_config,
    operator_to_config,
    shift_operator,
    unperturbed,
)

__all__ = [
    "DEFAULT",
    "OperatorSpecError",
    "PeriodicOperator",
    "SymmetricSpec",
    "Tolerances",
    "TrigPolynomial",
    "adjoint_operator",
    "build_operator",
    "constant_operator",
    "expand_symmetric",
    "operator_from_config",
    "operator_to_config",
    "shift_operator",
    "unperturbed",
]
