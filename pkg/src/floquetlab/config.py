"""One record of numeric tolerances; every module reads its defaults here."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Knobs shared across the toolkit.

    ode_tol drives the integrator (used as both rtol and atol unless a call
    overrides them); the remaining fields are the documented defaults of the
    clustering, rank, band, contour and tracking decisions.
    """

    ode_tol: float = 1e-12
    step_ceiling: float = 0.5          # h <= step_ceiling / |lambda|^(1/n)
    cluster_tol: float = 1e-6          # relative multiplier clustering
    rank_svd_tol: float = 1e-8         # discard sigma < rank_svd_tol * sigma_max
    rank_gap_ratio: float = 10.0       # required retained/discarded sigma ratio
    band_tol: float = 1e-8             # | |r| - 1 | threshold for spectral bands
    band_refine_tol: float = 1e-10     # bisection resolution of band edges
    pole_tol: float = 1e-8             # pole-candidate threshold for normalized solutions
    winding_residual: float = 0.05     # |quadrature - nearest integer| target
    derivative_step: float = 1e-6      # central differences use h = step*(1+|lambda|)
    newton_max_iter: int = 40
    newton_tol: float = 1e-12          # |delta lambda| < newton_tol*(1+|lambda|)
    clearance_ratio: float = 1e-8      # boundary |f| dip (relative) triggering a nudge
    nudge_growth: float = 0.01         # cell expansion per nudge
    max_nudges: int = 8
    disc_floor: float = 1e-9           # min |discriminant| along monodromy circles
    match_radius_factor: float = 0.25  # fraction of min multiplier gap for tracking
    max_track_steps: int = 65536
    contour_budget: int = 200_000      # function evaluations per scan

    def with_ode_tol(self, tol: float) -> "Tolerances":
        return replace(self, ode_tol=tol)


DEFAULT = Tolerances()
