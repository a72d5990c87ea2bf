"""Multipoint eigenvalue problem: u = 0 at 0, b, ..., (n-1)b.

Eigenvalues are the zeros of the determinant of fundamental-solution values
on that lattice; they are located by winding-number scans, their eigenspaces
extracted from the lattice matrix, and each eigenbasis resolved into pure and
generalized Floquet solutions of definite rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .contour import FunctionCache, Rect, ScanReport, scan_zeros, winding_count_only
from .engine import propagate
from .floquet import floquet_record, relative_distance
from .jordan import (
    RankAmbiguityError,
    chains_of_matrix,
    cluster_values,
    numerical_rank,
)
from .operators import PeriodicOperator
from .trigpoly import TrigPolynomial


@dataclass(frozen=True)
class MultipointMatrix:
    """Values of the fundamental solutions on the lattice kb, k = 0..n-1.

    The first row is exactly (1, 0, ..., 0); the determinant equals the
    (n-1) x (n-1) minor over rows k >= 1, columns j >= 2 up to rounding.
    """

    lam: complex
    M: np.ndarray
    H_value: complex
    H_reduced: complex
    est_error: float


def H_eval(
    op: PeriodicOperator, lam: complex, tol: float | None = None, cfg: Tolerances = DEFAULT
) -> MultipointMatrix:
    """Lattice-value matrix and its determinant, from one integration pass."""
    n = op.order
    b = op.period
    M = np.zeros((n, n), dtype=complex)
    M[0, 0] = 1.0
    est = 0.0
    if n >= 2:
        targets = [k * b for k in range(1, n)]
        states, est, _ = propagate(op, lam, targets, None, 0.0, tol, cfg)
        for k in range(1, n):
            M[k] = states[k - 1][0]  # first row of the fundamental matrix: values
    H_value = complex(np.linalg.det(M))
    H_reduced = complex(np.linalg.det(M[1:, 1:]))
    return MultipointMatrix(complex(lam), M, H_value, H_reduced, est)


def H_function(op: PeriodicOperator, tol: float | None = None, cfg: Tolerances = DEFAULT):
    """Plain lambda -> H(lambda) callable for scans."""

    def h(lam: complex) -> complex:
        return H_eval(op, lam, tol, cfg).H_value

    return h


@dataclass(frozen=True)
class SpectralHit:
    """One multipoint eigenvalue with multiplicities and eigenvectors.

    eigenbasis columns are coefficient vectors in the fundamental basis;
    rank_status is "ok" or "ambiguous" (sigma gap below the required ratio).
    """

    mu: complex
    m_a: int
    m_g: int
    eigenbasis: np.ndarray
    residual: float
    rank_status: str


def _eigenspace(op, mu, cfg) -> tuple[int, np.ndarray, str]:
    mat = H_eval(op, mu, cfg=cfg)
    status = "ok"
    try:
        r = numerical_rank(mat.M, cfg)
    except RankAmbiguityError:
        status = "ambiguous"
        s = np.linalg.svd(mat.M, compute_uv=False)
        r = int(np.sum(s > cfg.rank_svd_tol * s[0]))
    _, _, Vh = np.linalg.svd(mat.M)
    n = op.order
    m_g = n - r
    basis = Vh[r:].conj().T if m_g > 0 else np.zeros((n, 0), dtype=complex)
    return m_g, basis, status


def find_spectrum(
    op: PeriodicOperator,
    region: Rect,
    budget: int | None = None,
    cfg: Tolerances = DEFAULT,
    tol: float | None = None,
) -> tuple[list[SpectralHit], ScanReport]:
    """All multipoint eigenvalues in the region, with multiplicities.

    m_a comes from the winding count of the final isolating cell, m_g and the
    eigenbasis from the singular structure of the lattice matrix at the
    polished zero.
    """
    report = scan_zeros(H_function(op, tol, cfg), region, cfg, budget)
    hits = []
    for z in report.zeros:
        m_g, basis, status = _eigenspace(op, z.location, cfg)
        if m_g < 1:
            # a zero of H always carries at least one eigenfunction; a rank
            # decision that says otherwise is reported, not silently fixed
            status = "ambiguous"
            m_g = max(m_g, 1)
            if basis.shape[1] == 0:
                _, _, Vh = np.linalg.svd(H_eval(op, z.location, cfg=cfg).M)
                basis = Vh[-1:].conj().T
        hits.append(SpectralHit(z.location, z.multiplicity, m_g, basis, z.residual, status))
    hits.sort(key=lambda h: (h.mu.real, h.mu.imag))
    return hits, report


# -- eigenspace structure ---------------------------------------------------------


@dataclass(frozen=True)
class ClassifiedSolution:
    multiplier: complex
    rank: int
    coefficients: np.ndarray
    predecessor_in_eigenspace: bool
    lattice_residual: float


@dataclass(frozen=True)
class EigenspaceReport:
    mu: complex
    solutions: tuple[ClassifiedSolution, ...]
    covered_dimension: int
    max_lattice_residual: float

    def rank_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.solutions:
            out[s.rank] = out.get(s.rank, 0) + 1
        return out


def _subspace_intersection(A: np.ndarray, B: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of span(A) ∩ span(B) (columns orthonormal inputs)."""
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    M = A.conj().T @ B
    U, s, Vh = np.linalg.svd(M)
    keep = s > 1.0 - tol
    if not np.any(keep):
        return np.zeros((A.shape[0], 0), dtype=complex)
    return A @ U[:, : int(np.sum(keep))]


def _orth(V: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if V.shape[1] == 0:
        return V
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    keep = s > tol * max(float(s[0]), 1e-300)
    return U[:, : int(np.sum(keep))]


def classify_eigenspace(
    op: PeriodicOperator,
    hit: SpectralHit,
    cfg: Tolerances = DEFAULT,
    lattice_extent: int | None = None,
) -> EigenspaceReport:
    """Resolve the eigenspace into Floquet solutions of definite rank.

    Produces a basis of the eigenspace in which every member is a pure or
    generalized Floquet solution; for each rank >= 2 member the mapped-down
    predecessor is checked to lie in the eigenspace as well, and every member
    is checked to vanish on the extended lattice kb, k = 0..2n.
    """
    n = op.order
    b = op.period
    mu = hit.mu
    rec = floquet_record(op, mu, cfg=cfg)
    T = rec.T
    E = _orth(np.asarray(hit.eigenbasis, dtype=complex))
    if E.shape[1] == 0:
        raise ValueError("hit carries an empty eigenbasis")

    chains = chains_of_matrix(T, rec.multipliers, cfg)
    solutions: list[ClassifiedSolution] = []
    # group chains by multiplier cluster
    reps: list[complex] = []
    for ch in chains:
        if not any(relative_distance(ch.multiplier, r) < 10 * cfg.cluster_tol for r in reps):
            reps.append(ch.multiplier)
    for r in reps:
        members = [ch for ch in chains if relative_distance(ch.multiplier, r) < 10 * cfg.cluster_tol]
        gen_space = _orth(np.column_stack([v for ch in members for v in ch.vectors]))
        D_r = _subspace_intersection(E, gen_space)
        if D_r.shape[1] == 0:
            continue
        A = T - r * np.eye(n, dtype=complex)
        max_rank = max(ch.length for ch in members)
        # filtration of D_r by the power of A that annihilates
        prev_basis = np.zeros((n, 0), dtype=complex)
        P = np.eye(n, dtype=complex)
        norm_a = max(float(np.linalg.norm(A, 2)), 1e-300)
        for rank in range(1, max_rank + 1):
            P = P @ A
            ker = []
            for i in range(D_r.shape[1]):
                v = D_r[:, i]
                if np.linalg.norm(P @ v) <= 1e-7 * norm_a**rank * np.linalg.norm(v):
                    ker.append(v)
            if not ker:
                continue
            K = _orth(np.column_stack(ker))
            # new directions of exactly this rank
            resid = K - prev_basis @ (prev_basis.conj().T @ K)
            U, s, _ = np.linalg.svd(resid, full_matrices=False)
            new = U[:, : int(np.sum(s > 1e-8))]
            for i in range(new.shape[1]):
                v = new[:, i]
                if rank == 1:
                    pred_ok = True
                else:
                    w = A @ v  # predecessor of rank-1 lower
                    proj = E @ (E.conj().T @ w)
                    pred_ok = bool(
                        np.linalg.norm(w - proj) <= 1e-7 * max(np.linalg.norm(w), 1e-300)
                    )
                solutions.append(ClassifiedSolution(complex(r), rank, v, pred_ok, math.nan))
            prev_basis = _orth(np.column_stack([prev_basis, K])) if K.shape[1] else prev_basis

    # extended lattice vanishing for every classified member
    extent = 2 * n if lattice_extent is None else lattice_extent
    targets = [k * b for k in range(extent + 1)]
    out = []
    worst = 0.0
    for sol in solutions:
        states, _, _ = propagate(op, mu, targets, sol.coefficients[:, None], 0.0, None, cfg)
        vals = states[:, 0, 0]
        scale = max(float(np.max(np.abs(states[:, :, 0]))), 1e-300)
        resid = float(np.max(np.abs(vals))) / scale
        worst = max(worst, resid)
        out.append(
            ClassifiedSolution(
                sol.multiplier, sol.rank, sol.coefficients, sol.predecessor_in_eigenspace, resid
            )
        )
    return EigenspaceReport(mu, tuple(out), len(out), worst)


# -- continuous deformation of the zero set ---------------------------------------


class ZeroFlowCountError(RuntimeError):
    """Winding count over the fixed region jumped between steps."""


@dataclass(frozen=True)
class ZeroFlowResult:
    ts: tuple[float, ...]
    counts: tuple[int, ...]
    zero_paths: tuple[tuple[complex, ...], ...]  # one tuple per step, matched order


def scaled_operator(op: PeriodicOperator, t: float) -> PeriodicOperator:
    """Coefficientwise interpolation from the bare n-th derivative to op."""
    coeffs = tuple(p * t for p in op.coefficients)
    if all(p.is_zero() for p in coeffs):
        return PeriodicOperator(op.order, op.period, coeffs, "unperturbed")
    return PeriodicOperator(op.order, op.period, coeffs, "general")


def zero_flow(
    op: PeriodicOperator,
    region: Rect,
    steps: int = 11,
    budget: int | None = None,
    cfg: Tolerances = DEFAULT,
) -> ZeroFlowResult:
    """Track the multipoint zeros over the family t * coefficients, t in [0, 1].

    The winding count over the fixed region must stay constant (a jump means
    a zero crossed the contour and is reported as an error); zeros are
    matched step to step by nearest neighbor.
    """
    ts = np.linspace(0.0, 1.0, steps)
    counts = []
    paths: list[tuple[complex, ...]] = []
    prev: list[complex] | None = None
    for t in ts:
        opt = scaled_operator(op, float(t))
        hits, report = find_spectrum(opt, region, budget, cfg)
        locs = [h.mu for h in hits for _ in range(h.m_a)]
        counts.append(report.total_count())
        if prev is not None:
            if counts[-1] != counts[0]:
                raise ZeroFlowCountError(
                    f"count jumped from {counts[0]} to {counts[-1]} at t={t}: "
                    "a zero crossed the contour; the region must be re-nudged"
                )
            used = [False] * len(locs)
            matched = []
            for p in prev:
                best, best_d = None, math.inf
                for i, q in enumerate(locs):
                    if not used[i] and abs(q - p) < best_d:
                        best, best_d = i, abs(q - p)
                used[best] = True
                matched.append(locs[best])
            locs = matched
        paths.append(tuple(locs))
        prev = locs
    return ZeroFlowResult(tuple(map(float, ts)), tuple(counts), tuple(paths))


def lattice_count_stability(
    op: PeriodicOperator,
    region: Rect,
    shifts,
    budget: int | None = None,
    cfg: Tolerances = DEFAULT,
) -> list[int]:
    """Winding counts of the multipoint determinant for shifted operators."""
    from .operators import shift_operator

    counts = []
    for xi in shifts:
        fn = FunctionCache(H_function(shift_operator(op, xi), None, cfg), budget or cfg.contour_budget)
        counts.append(winding_count_only(fn, region, cfg))
    return counts
