"""Winding-number zero localization for entire functions.

Counts come from trapezoidal quadrature of f'/f around rectangle boundaries
(derivative by central differences), refined until the count sits near an
integer.  Cells with more than one zero are subdivided; isolated counts are
polished by Newton's method with multiplicity scaling.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances


class ContourBudgetError(RuntimeError):
    """Evaluation budget exhausted during a scan."""


class ContourClearanceError(RuntimeError):
    """A zero sits on (or hugs) the contour despite the allowed nudges."""


class WindingResidualError(RuntimeError):
    """Quadrature would not settle near an integer within the sample cap."""


@dataclass(frozen=True)
class Rect:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if not (self.re_hi > self.re_lo and self.im_hi > self.im_lo):
            raise ValueError("degenerate rectangle")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    @property
    def widths(self) -> tuple[float, float]:
        return self.re_hi - self.re_lo, self.im_hi - self.im_lo

    @property
    def diameter(self) -> float:
        w, h = self.widths
        return math.hypot(w, h)

    def corners(self) -> list[complex]:
        return [
            complex(self.re_lo, self.im_lo),
            complex(self.re_hi, self.im_lo),
            complex(self.re_hi, self.im_hi),
            complex(self.re_lo, self.im_hi),
        ]

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (
            self.re_lo - pad <= z.real <= self.re_hi + pad
            and self.im_lo - pad <= z.imag <= self.im_hi + pad
        )

    def split(self, fraction: float = 0.5) -> tuple["Rect", "Rect"]:
        w, h = self.widths
        if w >= h:
            mid = self.re_lo + fraction * w
            return (
                Rect(self.re_lo, mid, self.im_lo, self.im_hi),
                Rect(mid, self.re_hi, self.im_lo, self.im_hi),
            )
        mid = self.im_lo + fraction * h
        return (
            Rect(self.re_lo, self.re_hi, self.im_lo, mid),
            Rect(self.re_lo, self.re_hi, mid, self.im_hi),
        )

    def expanded(self, factor: float) -> "Rect":
        c = self.center
        w, h = self.widths
        return Rect(
            c.real - 0.5 * w * (1 + factor),
            c.real + 0.5 * w * (1 + factor),
            c.imag - 0.5 * h * (1 + factor),
            c.imag + 0.5 * h * (1 + factor),
        )


class FunctionCache:
    """Budgeted, memoizing wrapper around an expensive complex function."""

    def __init__(self, fn, budget: int):
        self.fn = fn
        self.budget = budget
        self.n_evals = 0
        self._store: dict[complex, complex] = {}

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        hit = self._store.get(z)
        if hit is not None:
            return hit
        if self.n_evals >= self.budget:
            raise ContourBudgetError(f"budget of {self.budget} evaluations exhausted")
        self.n_evals += 1
        v = complex(self.fn(z))
        self._store[z] = v
        return v


def _log_derivative(f: FunctionCache, z: complex, step_scale: float) -> complex:
    h = step_scale * (1.0 + abs(z))
    num = f(z + h) - f(z - h)
    den = f(z)
    if den == 0:
        raise ContourClearanceError(f"f vanishes at contour sample {z}")
    return num / (2.0 * h * den)


@dataclass
class WindingResult:
    count: int
    residual: float
    min_boundary_abs: float
    max_boundary_abs: float
    samples_per_edge: int


def winding_number(
    f: FunctionCache,
    rect: Rect,
    cfg: Tolerances = DEFAULT,
    min_samples: int = 8,
    max_samples: int = 512,
) -> WindingResult:
    """Trapezoidal winding count of f around the rectangle boundary.

    Sampling doubles until the quadrature lands within the configured
    residual of an integer and two consecutive refinements agree.
    """
    corners = rect.corners()
    prev_count = None
    n_per_edge = min_samples
    while True:
        samples: list[complex] = []
        for i in range(4):
            a, b = corners[i], corners[(i + 1) % 4]
            for k in range(n_per_edge):
                samples.append(a + (b - a) * (k / n_per_edge))
        vals = [f(z) for z in samples]
        abs_vals = [abs(v) for v in vals]
        lo, hi = min(abs_vals), max(abs_vals)
        if hi == 0.0 or lo < cfg.clearance_ratio * hi:
            raise ContourClearanceError(
                f"boundary |f| dips to {lo:.3g} (max {hi:.3g}) on {rect}"
            )
        g = [_log_derivative(f, z, cfg.derivative_step) for z in samples]
        total = 0j
        m = len(samples)
        for i in range(m):
            z0, z1 = samples[i], samples[(i + 1) % m]
            total += 0.5 * (g[i] + g[(i + 1) % m]) * (z1 - z0)
        count_c = total / (2j * math.pi)
        count = int(round(count_c.real))
        residual = abs(count_c - count)
        if residual < 0.25 * cfg.winding_residual:
            return WindingResult(count, residual, lo, hi, n_per_edge)
        if residual < cfg.winding_residual:
            if prev_count == count:
                return WindingResult(count, residual, lo, hi, n_per_edge)
            prev_count = count
        else:
            prev_count = None
        if n_per_edge >= max_samples:
            raise WindingResidualError(
                f"winding residual {residual:.3g} after {n_per_edge} samples/edge on {rect}"
            )
        n_per_edge *= 2


def winding_with_nudges(
    f: FunctionCache, rect: Rect, cfg: Tolerances = DEFAULT
) -> tuple[WindingResult, Rect]:
    """Winding count, expanding the cell slightly when a zero hugs the contour."""
    current = rect
    last: Exception | None = None
    for _ in range(cfg.max_nudges + 1):
        try:
            return winding_number(f, current, cfg), current
        except (ContourClearanceError, WindingResidualError) as exc:
            last = exc
            current = current.expanded(cfg.nudge_growth)
    raise ContourClearanceError(
        f"zero on contour after {cfg.max_nudges} nudges of {rect}: {last}"
    )


def newton_polish(
    f: FunctionCache,
    z0: complex,
    multiplicity: int,
    cfg: Tolerances = DEFAULT,
) -> tuple[complex, float, float]:
    """Newton iteration with multiplicity scaling; derivative by central
    differences.  Returns (root, |f(root)|, last step size)."""
    z = complex(z0)
    last = math.inf
    for _ in range(cfg.newton_max_iter):
        h = cfg.derivative_step * (1.0 + abs(z))
        fz = f(z)
        d = (f(z + h) - f(z - h)) / (2.0 * h)
        if d == 0:
            break
        step = multiplicity * fz / d
        z = z - step
        last = abs(step)
        if last < cfg.newton_tol * (1.0 + abs(z)):
            break
    return z, abs(f(z)), last


@dataclass(frozen=True)
class LocatedZero:
    location: complex
    multiplicity: int
    residual: float
    cell: Rect


@dataclass
class ScanReport:
    """Recursive winding-number scan of a rectangle."""

    region: Rect
    zeros: list[LocatedZero] = field(default_factory=list)
    cells_visited: int = 0
    boundary_clearance: float = math.inf
    n_evals: int = 0

    def total_count(self) -> int:
        return sum(z.multiplicity for z in self.zeros)


def _confirm_count(f, center, half_width, cfg) -> int:
    box = Rect(
        center.real - half_width,
        center.real + half_width,
        center.imag - half_width,
        center.imag + half_width,
    )
    result, _ = winding_with_nudges(f, box, cfg)
    return result.count


def scan_zeros(
    fn,
    region: Rect,
    cfg: Tolerances = DEFAULT,
    budget: int | None = None,
    cluster_size: float = 1e-6,
    max_stuck: int = 6,
) -> ScanReport:
    """Locate all zeros of an analytic function inside the region.

    Subdivision proceeds until each cell isolates one winding count or
    shrinks to the cluster scale (a numerically multiple zero: a cell whose
    count refuses to separate for `max_stuck` generations is treated as one
    multiple zero); isolated cells are polished by Newton with the count as
    multiplicity, and simple roots get their count re-confirmed on a small
    box around the polished location.
    """
    f = fn if isinstance(fn, FunctionCache) else FunctionCache(fn, budget or cfg.contour_budget)
    report = ScanReport(region=region)
    MAX_STUCK = max_stuck

    def subdivide(rect: Rect, count: int, stuck: int):
        # the split line may hit a zero; retry at shifted fractions
        for frac in (0.5, 0.53, 0.445, 0.565, 0.41):
            a, b = rect.split(frac)
            try:
                ra, used_a = winding_with_nudges(f, a, cfg)
            except (ContourClearanceError, WindingResidualError):
                continue
            break
        else:
            raise ContourClearanceError(f"no clean split of {rect} found")
        report.boundary_clearance = min(report.boundary_clearance, ra.min_boundary_abs)
        inferred = count - ra.count
        separated = 0 < ra.count < count
        child_stuck = 0 if separated else stuck + 1
        recurse(used_a, ra.count, child_stuck)
        if used_a is a and inferred >= 0:
            # child counts must sum to the parent count on clean splits
            recurse(b, inferred, child_stuck)
        else:
            recurse(b, None, child_stuck)

    def recurse(rect: Rect, known_count: int | None, stuck: int = 0):
        report.cells_visited += 1
        if known_count is None:
            w, h = rect.widths
            if max(w, h) > 8.0 * min(w, h):
                # slice elongated regions before attempting any quadrature
                a, b = rect.split()
                recurse(a, None, stuck)
                recurse(b, None, stuck)
                return
            result, used = winding_with_nudges(f, rect, cfg)
            count = result.count
            report.boundary_clearance = min(report.boundary_clearance, result.min_boundary_abs)
            rect = used
        else:
            count = known_count
        if count == 0:
            return
        terminal = (
            count == 1
            or rect.diameter <= cluster_size * (1.0 + abs(rect.center))
            or stuck >= MAX_STUCK
        )
        if not terminal:
            subdivide(rect, count, stuck)
            return
        root, resid, _ = newton_polish(f, rect.center, count, cfg)
        if not rect.contains(root, pad=0.1 * rect.diameter):
            if count == 1 and stuck < MAX_STUCK:
                subdivide(rect, count, stuck)
                return
            root = rect.center  # cluster centroid; polish declined to settle
            resid = abs(f(root))
        m = count
        if count == 1:
            half = max(
                cluster_size * (1.0 + abs(root)), 1e3 * cfg.newton_tol * (1.0 + abs(root))
            )
            half = min(half, 0.45 * min(rect.widths))
            try:
                m = _confirm_count(f, root, half, cfg)
            except (ContourClearanceError, WindingResidualError):
                m = count
            if m <= 0:
                m = count
        report.zeros.append(LocatedZero(complex(root), m, resid, rect))

    recurse(region, None)
    report.n_evals = f.n_evals
    # merge zeros that collapsed to the same point (shared subdivision edges)
    merged: list[LocatedZero] = []
    for z in sorted(report.zeros, key=lambda w: (w.location.real, w.location.imag)):
        if merged and abs(z.location - merged[-1].location) <= cluster_size * (
            1.0 + abs(z.location)
        ):
            prev = merged[-1]
            merged[-1] = LocatedZero(
                prev.location,
                max(prev.multiplicity, z.multiplicity),
                min(prev.residual, z.residual),
                prev.cell,
            )
        else:
            merged.append(z)
    report.zeros = merged
    return report


def winding_count_only(
    fn, region: Rect, cfg: Tolerances = DEFAULT, budget: int | None = None
) -> int:
    """Just the zero count (with multiplicity) inside the region."""
    f = fn if isinstance(fn, FunctionCache) else FunctionCache(fn, budget or cfg.contour_budget)
    result, _ = winding_with_nudges(f, region, cfg)
    return result.count
