"""Floquet matrix, multipliers, discriminant, normalized solutions, monodromy.

The multipliers of a record are merged from two independent integrations,
over [0, b] and [0, -b]: eigenvalues with modulus >= 1 are taken from the
forward period matrix and the rest as reciprocals of the backward one, which
keeps every multiplier relatively accurate across the e^{±|zeta| b} dynamic
range.  Their product staying near 1 is therefore a genuine cross-check of
the two integrations.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import DEFAULT, Tolerances
from .engine import propagate
from .exclusion import ExclusionRegion
from .operators import PeriodicOperator
from .oracle import principal_root

EPS = np.finfo(float).eps
COND_LIMIT = 1e-9  # matrix det / char-poly routes trusted while n ||T||^n eps <= this


class TrackingCollisionError(RuntimeError):
    """Two tracked multipliers came within the matching radius."""


class DiscriminantFloorError(RuntimeError):
    """A continuation path passed too close to a discriminant zero."""


class PoleCandidateError(RuntimeError):
    """Normalized-solution denominator too small: lambda is near a pole."""

    def __init__(self, lam, branch, delta):
        super().__init__(
            f"pole candidate at lambda={lam} (branch {branch}, |Delta|={abs(delta):.3g})"
        )
        self.lam = lam
        self.branch = branch
        self.delta = delta


def relative_distance(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _pairwise_min_gap(values: np.ndarray) -> float:
    gap = math.inf
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            gap = min(gap, relative_distance(values[i], values[j]))
    return gap


def match_to_previous(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Order `new` so entry i continues prev[i] (relative nearest-neighbor)."""
    n = len(prev)
    cost = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            cost[i, j] = relative_distance(prev[i], new[j])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(n, dtype=complex)
    out[rows] = new[cols]
    return out


@dataclass(frozen=True)
class FloquetRecord:
    """Period matrix data at one spectral point.

    multipliers[j] is paired with the unit-root index omega_pairing[j]
    (omega = exp(2 pi i k / n)); char_coeffs are monic descending.
    det_route / char_route record whether the direct matrix routes or the
    multiplier-product routes were used (the former only while conditioning
    permits).
    """

    lam: complex
    T: np.ndarray
    T_back: np.ndarray
    multipliers: np.ndarray
    omega_pairing: tuple[int, ...]
    pairing_advisory: bool
    char_coeffs: np.ndarray
    discriminant: complex
    discriminant_resultant: complex | None
    conditioning_flag: bool
    det_T: complex
    det_route: str
    char_route: str
    est_error: float

    @property
    def order(self) -> int:
        return self.T.shape[0]

    def char_poly_at_zero(self) -> complex:
        return complex(self.char_coeffs[-1])

    def multiplier_product(self) -> complex:
        return complex(np.prod(self.multipliers))


def _faddeev_char_coeffs(T: np.ndarray) -> np.ndarray:
    n = T.shape[0]
    coeffs = np.empty(n + 1, dtype=complex)
    coeffs[0] = 1.0
    M = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        M = T @ M
        c = -np.trace(M) / k
        coeffs[k] = c
        M = M + c * np.eye(n, dtype=complex)
    return coeffs


def sylvester_resultant(p: np.ndarray, q: np.ndarray) -> complex:
    """Resultant of two polynomials given by descending coefficients."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    dp = len(p) - 1
    dq = len(q) - 1
    size = dp + dq
    S = np.zeros((size, size), dtype=complex)
    for i in range(dq):
        S[i, i : i + dp + 1] = p
    for i in range(dp):
        S[dq + i, i : i + dq + 1] = q
    return complex(np.linalg.det(S))


def discriminant_from_char(coeffs: np.ndarray) -> complex:
    """Discriminant of a monic polynomial via the Sylvester resultant."""
    n = len(coeffs) - 1
    res = sylvester_resultant(coeffs, np.polyder(coeffs))
    return (-1) ** (n * (n - 1) // 2) * res


def _pair_product_discriminant(multipliers: np.ndarray) -> complex:
    n = len(multipliers)
    total = 1.0 + 0j
    for j in range(n):
        for k in range(j + 1, n):
            total *= (multipliers[k] - multipliers[j]) ** 2
    return total


def _modulus_phase_order(values: np.ndarray) -> np.ndarray:
    """Sort by modulus descending, phase as tie-break (stable across lists)."""
    phases = np.array([cmath.phase(v) for v in values])
    order = np.lexsort((phases, -np.abs(values)))
    return values[order]


def merged_multipliers(T: np.ndarray, T_back: np.ndarray) -> np.ndarray:
    """Multipliers merged from the forward and backward period matrices.

    The forward matrix computes large-modulus multipliers to full relative
    accuracy while the small ones drown in its absolute noise floor; the
    backward matrix (reciprocal spectrum) does the opposite.  Both lists are
    sorted by (modulus desc, phase); the merged set takes the top k from the
    forward list and the remaining n-k as reciprocals from the backward one,
    with k chosen so the product of the merged set stays closest to 1 -- the
    determinant is exactly 1, which adjudicates the split.
    """
    ev_f = np.linalg.eigvals(T)
    ev_b = np.linalg.eigvals(T_back)
    ev_b[np.abs(ev_b) < 1e-300] = 1e-300
    cand = 1.0 / ev_b
    n = len(ev_f)
    sf = _modulus_phase_order(ev_f)
    sc = _modulus_phase_order(cand)
    logs_f = np.log(np.maximum(np.abs(sf), 1e-300))
    logs_c = np.log(np.maximum(np.abs(sc), 1e-300))
    scores = [abs(np.sum(logs_f[:k]) + np.sum(logs_c[k:])) for k in range(n + 1)]
    best = min(scores)
    k0 = int(np.sum(np.abs(sf) >= 1.0))
    k = min(
        (kk for kk in range(n + 1) if scores[kk] <= best + 1e-9),
        key=lambda kk: (abs(kk - k0), kk),
    )
    return np.concatenate((sf[:k], sc[k:]))


def _pair_to_roots_of_unity(
    multipliers: np.ndarray, lam: complex, period: float
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Order multipliers so slot j tracks omega_j = exp(2 pi i j / n).

    Distance is |log r - omega zeta b| with the imaginary part wrapped to
    (-pi, pi]; ties break toward the smaller root index.
    """
    n = len(multipliers)
    zeta = principal_root(lam, n)
    cost = np.empty((n, n))
    for j in range(n):
        r = multipliers[j]
        lr = cmath.log(r)
        for k in range(n):
            target = cmath.exp(2j * math.pi * k / n) * zeta * period
            z = lr - target
            im = (z.imag + math.pi) % (2.0 * math.pi) - math.pi
            cost[j, k] = math.hypot(z.real, im) + k * 1e-12
    rows, cols = linear_sum_assignment(cost)
    # slot k of the output holds the multiplier assigned to omega_k
    inv = np.empty(n, dtype=int)
    inv[cols] = rows
    paired = multipliers[inv]
    return paired, tuple(range(n))


def floquet_record(
    op: PeriodicOperator,
    lam: complex,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
    exclusion_delta: float = 0.5,
) -> FloquetRecord:
    """Period matrix, multipliers, characteristic data and discriminant."""
    lam = complex(lam)
    n = op.order
    b = op.period
    fwd, est_f, _ = propagate(op, lam, [b], None, 0.0, tol, cfg)
    back, est_b, _ = propagate(op, lam, [-b], None, 0.0, tol, cfg)
    T = fwd[0]
    T_back = back[0]

    raw = merged_multipliers(T, T_back)
    multipliers, pairing = _pair_to_roots_of_unity(raw, lam, b)

    zeta = principal_root(lam, n)
    region = ExclusionRegion(exclusion_delta, b, n)
    advisory = bool(region.contains(zeta)[0])

    norm = float(np.max(np.sum(np.abs(T), axis=1)))
    cond_bound = n * max(norm, 1.0) ** n * EPS
    if cond_bound <= COND_LIMIT:
        det_T = complex(np.linalg.det(T))
        det_route = "matrix"
        char_coeffs = _faddeev_char_coeffs(T)
        char_route = "matrix"
    else:
        det_T = complex(np.prod(multipliers))
        det_route = "product"
        char_coeffs = np.asarray(np.poly(multipliers), dtype=complex)
        char_route = "product"

    disc = _pair_product_discriminant(multipliers)
    disc_res: complex | None = None
    conditioning = char_route != "matrix"
    if char_route == "matrix":
        disc_res = discriminant_from_char(char_coeffs)
        if relative_distance(disc, disc_res) > 1e-6:
            conditioning = True

    return FloquetRecord(
        lam=lam,
        T=T,
        T_back=T_back,
        multipliers=multipliers,
        omega_pairing=pairing,
        pairing_advisory=advisory,
        char_coeffs=char_coeffs,
        discriminant=disc,
        discriminant_resultant=disc_res,
        conditioning_flag=conditioning,
        det_T=det_T,
        det_route=det_route,
        char_route=char_route,
        est_error=est_f + est_b,
    )


def discriminant(op: PeriodicOperator, lam: complex, cfg: Tolerances = DEFAULT) -> complex:
    return floquet_record(op, lam, cfg=cfg).discriminant


# -- normalized (value-1 at the origin) Floquet solutions -----------------------


@dataclass(frozen=True)
class NormalizedFloquet:
    """Floquet solution normalized to value 1 at x = 0.

    coefficients[0] == 1 by construction; the function is the corresponding
    combination of the fundamental solutions.
    """

    op: PeriodicOperator
    lam: complex
    branch: int
    multiplier: complex
    coefficients: np.ndarray
    delta_value: complex

    def evaluate(self, xs, tol: float | None = None, cfg: Tolerances = DEFAULT) -> np.ndarray:
        """Values at monotone sample points (x = 0 gives exactly 1)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        states, _, _ = propagate(self.op, self.lam, xs, self.coefficients[:, None], 0.0, tol, cfg)
        return states[:, 0, 0]


def branch_deltas(record: FloquetRecord) -> np.ndarray:
    """det[T_11 - r_j I] per branch; zeros flag pole candidates."""
    T11 = record.T[1:, 1:]
    n1 = T11.shape[0]
    out = np.empty(len(record.multipliers), dtype=complex)
    for j, r in enumerate(record.multipliers):
        out[j] = np.linalg.det(T11 - r * np.eye(n1, dtype=complex))
    return out


def normalized_floquet(
    op: PeriodicOperator,
    lam: complex,
    branch: int = 0,
    tol: float | None = None,
    cfg: Tolerances = DEFAULT,
) -> NormalizedFloquet:
    """Solve for the branch eigenvector scaled to leading coefficient 1.

    Raises PoleCandidateError when the reduced determinant is below
    pole_tol * max(1, ||T_11||)^{n-1}: lambda is then a pole candidate of the
    normalized solution.
    """
    record = floquet_record(op, lam, tol, cfg)
    n = op.order
    if not 0 <= branch < n:
        raise ValueError(f"branch must be in 0..{n - 1}")
    r = record.multipliers[branch]
    T11 = record.T[1:, 1:]
    delta = complex(np.linalg.det(T11 - r * np.eye(n - 1, dtype=complex)))
    scale = max(1.0, float(np.linalg.norm(T11, 2))) ** (n - 1)
    if abs(delta) < cfg.pole_tol * scale:
        raise PoleCandidateError(lam, branch, delta)
    rhs = -record.T[1:, 0]
    c = np.linalg.solve(T11 - r * np.eye(n - 1, dtype=complex), rhs)
    coeffs = np.concatenate(([1.0 + 0j], c))
    return NormalizedFloquet(op, complex(lam), branch, complex(r), coeffs, delta)


# -- palindromic characteristic polynomial check --------------------------------


@dataclass(frozen=True)
class PalindromeReport:
    lambdas: tuple[complex, ...]
    residuals: tuple[float, ...]
    max_residual: float
    tolerance: float
    passed: bool


def palindrome_check(
    op: PeriodicOperator,
    lambdas=None,
    tol_factor: float = 1e-7,
    cfg: Tolerances = DEFAULT,
) -> PalindromeReport:
    """Check A_{2 nu - l} = A_l in the characteristic polynomial.

    Applies to real symmetric (even-order) operators, whose multipliers come
    in reciprocal pairs.
    """
    if op.form_tag != "symmetric_real":
        raise ValueError("palindrome check applies to symmetric_real operators")
    n = op.order
    if lambdas is None:
        res = np.linspace(-3.0, 3.0, 5)
        ims = np.linspace(-2.0, 2.0, 4)
        lambdas = [complex(a, c) for a in res for c in ims]
    residuals = []
    for lam in lambdas:
        rec = floquet_record(op, lam, cfg=cfg)
        asc = rec.char_coeffs[::-1]  # asc[l] = A_l
        scale = float(np.max(np.abs(asc)))
        worst = abs(asc[0] - 1.0)
        for l in range(1, n):
            worst = max(worst, abs(asc[n - l] - asc[l]))
        residuals.append(worst / scale)
    max_res = max(residuals)
    return PalindromeReport(
        tuple(map(complex, lambdas)),
        tuple(residuals),
        max_res,
        tol_factor,
        max_res <= tol_factor,
    )


# -- multiplier continuation ------------------------------------------------------


@dataclass(frozen=True)
class MonodromyResult:
    """Continuation of all multipliers along a closed loop in lambda."""

    permutation: tuple[int, ...]
    radius: float
    turns: int
    steps_used: int
    trace: np.ndarray  # (steps+1, n) tracked multiplier values
    min_discriminant: float

    def cycle_lengths(self) -> tuple[int, ...]:
        seen = set()
        out = []
        for i in range(len(self.permutation)):
            if i in seen:
                continue
            ln = 0
            j = i
            while j not in seen:
                seen.add(j)
                j = self.permutation[j]
                ln += 1
            out.append(ln)
        return tuple(sorted(out))

    def is_cycle(self) -> bool:
        return self.cycle_lengths() == (len(self.permutation),)


def _track_closed_loop(values_fn, steps: int, cfg: Tolerances):
    """Track eigenvalue motion over theta in [0, 2 pi]; raises on collision."""
    thetas = np.linspace(0.0, 2.0 * math.pi, steps + 1)
    start = values_fn(thetas[0])
    trace = [start]
    prev = start
    for th in thetas[1:]:
        new_raw = values_fn(th)
        matched = match_to_previous(prev, new_raw)
        gap = _pairwise_min_gap(prev)
        radius = cfg.match_radius_factor * gap
        worst = max(relative_distance(prev[i], matched[i]) for i in range(len(prev)))
        if worst > radius:
            raise TrackingCollisionError(
                f"step motion {worst:.3g} exceeds matching radius {radius:.3g}"
            )
        trace.append(matched)
        prev = matched
    return np.array(trace)


def track_values_loop(values_fn, steps: int, cfg: Tolerances = DEFAULT):
    """Adaptive loop tracking: doubles the step count on collisions.

    Returns (trace, permutation, steps_used); permutation[i] = j means the
    value starting in slot i ends on the starting value of slot j.
    """
    while True:
        try:
            trace = _track_closed_loop(values_fn, steps, cfg)
        except TrackingCollisionError:
            if steps * 2 > cfg.max_track_steps:
                raise
            steps *= 2
            continue
        start, end = trace[0], trace[-1]
        n = len(start)
        cost = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                cost[i, j] = relative_distance(end[i], start[j])
        rows, cols = linear_sum_assignment(cost)
        perm = [0] * n
        for i, j in zip(rows, cols):
            perm[i] = int(j)
        return trace, tuple(perm), steps


def monodromy_permutation(
    op: PeriodicOperator,
    R: float,
    steps: int = 64,
    turns: int = 1,
    cfg: Tolerances = DEFAULT,
) -> MonodromyResult:
    """Continue the multipliers along |lambda| = (R / b)^n through `turns` loops.

    The circle must stay clear of the discriminant zeros (min |D| above the
    configured floor); collisions trigger step doubling up to the cap.
    """
    n = op.order
    b = op.period
    radius = (R / b) ** n
    min_disc = [math.inf]

    def values(theta: float) -> np.ndarray:
        lam = radius * cmath.exp(1j * theta * turns)
        rec = floquet_record(op, lam, cfg=cfg)
        min_disc[0] = min(min_disc[0], abs(rec.discriminant))
        return rec.multipliers

    trace, perm, used = track_values_loop(values, steps, cfg)
    if min_disc[0] <= cfg.disc_floor:
        raise DiscriminantFloorError(
            f"|discriminant| dipped to {min_disc[0]:.3g} along the circle"
        )
    return MonodromyResult(perm, radius, turns, used, trace, min_disc[0])


def compose_permutations(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    """p then q."""
    return tuple(q[p[i]] for i in range(len(p)))
