"""High-accuracy integration of L u = lambda u as a first-order system.

The state is (u, u', ..., u^(n-1)); columns of the fundamental matrix are the
solutions with unit initial data in one derivative slot each.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..config import DEFAULT, Tolerances
from ..operators import PeriodicOperator
from . import backend

TOL_RANGE = (1e-14, 1e-4)


class IntegrationError(RuntimeError):
    """Integration failure, reported with the lambda and x where it occurred."""

    def __init__(self, lam, x, reason="step size underflow"):
        super().__init__(f"{reason} at x={x} for lambda={lam}")
        self.lam = lam
        self.x = x
        self.reason = reason


@dataclass(frozen=True)
class IvpResult:
    state: np.ndarray
    est_error: float
    n_steps: int


@dataclass(frozen=True)
class FundamentalMatrix:
    """Columns are the fundamental solutions and their first n-1 derivatives."""

    at_x: float
    lam: complex
    entries: np.ndarray
    est_error: float

    def det_residual(self) -> float:
        """|det - 1|; meaningful while the entry dynamic range permits."""
        return abs(np.linalg.det(self.entries) - 1.0)


@lru_cache(maxsize=256)
def _harmonic_arrays(op: PeriodicOperator):
    harm_m = []
    harm_c = []
    for p in op.coefficients:
        items = sorted(p.terms.items())
        harm_m.append(np.array([m for m, _ in items], dtype=np.int64))
        harm_c.append(np.array([c for _, c in items], dtype=complex))
    return tuple(harm_m), tuple(harm_c)


def step_ceiling(op: PeriodicOperator, lam: complex, cfg: Tolerances = DEFAULT) -> float:
    """Cap on the step so the oscillation scale |lambda|^(1/n) is resolved."""
    mag = abs(lam)
    if mag <= 1.0:
        return cfg.step_ceiling
    return cfg.step_ceiling / mag ** (1.0 / op.order)


def _check_tol(tol: float):
    if not (TOL_RANGE[0] <= tol <= TOL_RANGE[1]):
        raise ValueError(f"tol must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}], got {tol}")


def propagate(
    op: PeriodicOperator,
    lam: complex,
    targets,
    Y0: np.ndarray | None = None,
    x0: float = 0.0,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
    step_log: list | None = None,
) -> tuple[np.ndarray, float, int]:
    """Propagate a state matrix through monotone target points.

    Returns (states, est_error, n_steps) with states[i] the n x m state at
    targets[i].  Raises IntegrationError on step underflow.
    """
    tol = cfg.ode_tol if tol is None else tol
    _check_tol(tol)
    n = op.order
    if Y0 is None:
        Y0 = np.eye(n, dtype=complex)
    Y0 = np.asarray(Y0, dtype=complex)
    if Y0.ndim == 1:
        Y0 = Y0[:, None]
    if Y0.shape[0] != n:
        raise ValueError(f"state must have {n} rows, got {Y0.shape[0]}")
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if len(targets) == 0:
        raise ValueError("no target points")
    deltas = np.diff(np.concatenate(([x0], targets)))
    if not (np.all(deltas >= 0) or np.all(deltas <= 0)):
        raise ValueError("targets must be monotone away from x0")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")

    harm_m, harm_c = _harmonic_arrays(op)
    omega0 = 2.0 * np.pi / op.period
    hmax = step_ceiling(op, lam, cfg)
    states, est, n_steps, status, fail_x = backend.integrate(
        harm_m, harm_c, omega0, complex(lam), Y0, float(x0), targets, tol, tol, hmax, step_log
    )
    if status == backend.STATUS_STEP_UNDERFLOW:
        raise IntegrationError(lam, fail_x)
    if status == backend.STATUS_OVERFLOW:
        raise IntegrationError(lam, fail_x, "solution magnitude beyond double range")
    return states, est, n_steps


def integrate_ivp(
    op: PeriodicOperator,
    lam: complex,
    init,
    x_end: float,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
) -> IvpResult:
    """Solve the initial-value problem from 0 to x_end (reverse allowed)."""
    init = np.asarray(init, dtype=complex)
    if init.ndim != 1 or init.shape[0] != op.order:
        raise ValueError(f"initial state must have length {op.order}")
    states, est, n_steps = propagate(op, lam, [x_end], init[:, None], 0.0, tol, cfg)
    return IvpResult(states[0][:, 0], est, n_steps)


def fundamental_matrix(
    op: PeriodicOperator,
    lam: complex,
    x: float,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
) -> FundamentalMatrix:
    """Fundamental matrix at x: column j has unit j-th initial derivative."""
    if x == 0.0:
        return FundamentalMatrix(0.0, complex(lam), np.eye(op.order, dtype=complex), 0.0)
    states, est, _ = propagate(op, lam, [x], None, 0.0, tol, cfg)
    return FundamentalMatrix(float(x), complex(lam), states[0], est)


def fundamental_at(
    op: PeriodicOperator,
    lam: complex,
    targets,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
) -> tuple[np.ndarray, float]:
    """Fundamental matrices at several monotone points in a single pass."""
    states, est, _ = propagate(op, lam, targets, None, 0.0, tol, cfg)
    return states, est


def analyticity_residual(
    op: PeriodicOperator,
    lam: complex,
    x: float,
    h: float = 1e-4,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
) -> float:
    """Cauchy-Riemann check of entry-wise analyticity in lambda.

    Compares the real-direction and imaginary-direction difference quotients;
    the residual is O(h^2) for entire entries.
    """
    fm = lambda z: fundamental_matrix(op, z, x, tol, cfg).entries  # noqa: E731
    d_re = (fm(lam + h) - fm(lam - h)) / (2.0 * h)
    d_im = (fm(lam + 1j * h) - fm(lam - 1j * h)) / (2j * h)
    scale = max(1.0, float(np.max(np.abs(d_re))))
    return float(np.max(np.abs(d_re - d_im))) / scale


def write_step_history_csv(
    path,
    op: PeriodicOperator,
    lam: complex,
    x_end: float,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
) -> int:
    """Dump accepted-step history (x, h, scaled error) as CSV; returns #rows."""
    log: list = []
    propagate(op, lam, [x_end], None, 0.0, tol, cfg, step_log=log)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "h", "scaled_error"])
        for row in log:
            writer.writerow([f"{row[0]:.17g}", f"{row[1]:.17g}", f"{row[2]:.17g}"])
    return len(log)
