"""ODE engine: adaptive order-8 integration of the companion system."""

from .backend import active_backend, have_compiled
from .ivp import (
    FundamentalMatrix,
    IntegrationError,
    IvpResult,
    analyticity_residual,
    fundamental_at,
    fundamental_matrix,
    integrate_ivp,
    propagate,
    step_ceiling,
    write_step_history_csv,
)

__all__ = [
    "FundamentalMatrix",
    "IntegrationError",
    "IvpResult",
    "active_backend",
    "analyticity_residual",
    "fundamental_at",
    "fundamental_matrix",
    "have_compiled",
    "integrate_ivp",
    "propagate",
    "step_ceiling",
    "write_step_history_csv",
]
