"""Numerical Jordan structure of period matrices and Floquet solution chains.

Rank decisions use a singular-value threshold with a required gap ratio; an
undecidable gap is reported as an error rather than guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .floquet import floquet_record, relative_distance
from .operators import PeriodicOperator


class RankAmbiguityError(RuntimeError):
    """Singular-value gap too small to decide a numerical rank."""

    def __init__(self, sigmas, threshold, ratio):
        super().__init__(
            f"rank decision ambiguous: gap ratio {ratio:.3g} < required, "
            f"threshold {threshold:.3g}, sigmas {np.array2string(sigmas, precision=3)}"
        )
        self.sigmas = sigmas


def numerical_rank(A: np.ndarray, cfg: Tolerances = DEFAULT, scale: float | None = None) -> int:
    """Rank by singular-value cutoff rank_svd_tol * scale with a gap check.

    ``scale`` defaults to sigma_max(A); for matrix powers pass sigma_max of
    the base raised to the power, so a numerically-zero power is ranked 0.
    """
    s = np.linalg.svd(A, compute_uv=False)
    if len(s) == 0 or s[0] == 0.0:
        return 0
    thr = cfg.rank_svd_tol * (float(s[0]) if scale is None else float(scale))
    r = int(np.sum(s > thr))
    if 0 < r < len(s) and s[r] > 0:
        ratio = s[r - 1] / s[r]
        if ratio < cfg.rank_gap_ratio:
            raise RankAmbiguityError(s, thr, ratio)
    return r


def cluster_values(values: np.ndarray, cluster_tol: float) -> list[list[int]]:
    """Greedy relative clustering: indices i, j merge when
    |v_i - v_j| < cluster_tol * max(|v_i|, |v_j|) chains them together."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) < cluster_tol * max(abs(values[i]), abs(values[j])):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass(frozen=True)
class JordanCluster:
    value: complex
    algebraic: int
    geometric: int
    block_sizes: tuple[int, ...]
    member_indices: tuple[int, ...]


@dataclass(frozen=True)
class JordanProfile:
    lam: complex
    clusters: tuple[JordanCluster, ...]
    rank_tolerance_used: float

    @property
    def total_size(self) -> int:
        return sum(sum(c.block_sizes) for c in self.clusters)

    def is_diagonalizable(self) -> bool:
        return all(all(s == 1 for s in c.block_sizes) for c in self.clusters)

    def cluster_for(self, value: complex) -> JordanCluster:
        best = min(self.clusters, key=lambda c: relative_distance(c.value, value))
        return best


def _weyr_blocks(A: np.ndarray, algebraic: int, cfg: Tolerances) -> tuple[int, tuple[int, ...]]:
    """Geometric multiplicity and block sizes from ranks of powers."""
    n = A.shape[0]
    norm_a = float(np.linalg.norm(A, 2))
    ranks = [n]
    P = np.eye(n, dtype=complex)
    for k in range(1, algebraic + 1):
        P = P @ A
        ranks.append(numerical_rank(P, cfg, scale=max(norm_a, 1e-300) ** k))
        if ranks[-1] == ranks[-2]:
            break
    weyr = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]  # #blocks of size >= k
    weyr = [w for w in weyr if w > 0]
    if not weyr:
        raise RankAmbiguityError(np.linalg.svd(A, compute_uv=False), 0.0, 0.0)
    sizes = []
    for k in range(len(weyr), 0, -1):
        exact = weyr[k - 1] - (weyr[k] if k < len(weyr) else 0)
        sizes.extend([k] * exact)
    geometric = weyr[0]
    if sum(sizes) != algebraic:
        raise RankAmbiguityError(
            np.linalg.svd(A, compute_uv=False),
            cfg.rank_svd_tol,
            float(sum(sizes)) / max(algebraic, 1),
        )
    return geometric, tuple(sorted(sizes, reverse=True))


def jordan_profile_of_matrix(
    T: np.ndarray, eigenvalues: np.ndarray | None = None, lam: complex = 0j,
    cfg: Tolerances = DEFAULT,
) -> JordanProfile:
    """Cluster the eigenvalues and resolve each cluster's Jordan blocks."""
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(T)
    n = T.shape[0]
    clusters = []
    for group in cluster_values(eigenvalues, cfg.cluster_tol):
        vals = eigenvalues[group]
        rep = complex(np.mean(vals))
        algebraic = len(group)
        if algebraic == 1:
            clusters.append(JordanCluster(rep, 1, 1, (1,), tuple(group)))
            continue
        A = T - rep * np.eye(n, dtype=complex)
        geometric, sizes = _weyr_blocks(A, algebraic, cfg)
        clusters.append(JordanCluster(rep, algebraic, geometric, sizes, tuple(group)))
    profile = JordanProfile(complex(lam), tuple(clusters), cfg.rank_svd_tol)
    if profile.total_size != n:
        raise RankAmbiguityError(np.linalg.svd(T, compute_uv=False), cfg.rank_svd_tol, 0.0)
    return profile


def jordan_profile(
    op: PeriodicOperator, lam: complex, cfg: Tolerances = DEFAULT
) -> JordanProfile:
    """Jordan structure of the period matrix at lambda."""
    rec = floquet_record(op, lam, cfg=cfg)
    return jordan_profile_of_matrix(rec.T, rec.multipliers, lam, cfg)


# -- solution chains -------------------------------------------------------------


@dataclass(frozen=True)
class FloquetChain:
    """One Jordan chain: coefficient vectors of solutions g^1..g^len where
    g^l shifts by r g^l + g^{l-1} over a period (g^0 = 0)."""

    multiplier: complex
    vectors: tuple[np.ndarray, ...]  # vectors[l-1] is rank l

    @property
    def length(self) -> int:
        return len(self.vectors)


def _orth_basis(V: np.ndarray, rank: int) -> np.ndarray:
    if rank == 0:
        return np.zeros((V.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    return U[:, :rank]


def _nullspace(A: np.ndarray, cfg: Tolerances, scale: float | None = None) -> np.ndarray:
    n = A.shape[1]
    r = numerical_rank(A, cfg, scale)
    _, _, Vh = np.linalg.svd(A)
    return Vh[r:].conj().T if r < n else np.zeros((n, 0), dtype=complex)


def chains_of_matrix(
    T: np.ndarray,
    eigenvalues: np.ndarray | None = None,
    cfg: Tolerances = DEFAULT,
) -> list[FloquetChain]:
    """Jordan chains of T, one per block, via nested kernels of (T - r I)^k."""
    n = T.shape[0]
    profile = jordan_profile_of_matrix(T, eigenvalues, 0j, cfg)
    chains: list[FloquetChain] = []
    for cl in profile.clusters:
        if cl.block_sizes == (1,) * cl.geometric and cl.algebraic == cl.geometric:
            A = T - cl.value * np.eye(n, dtype=complex)
            null = _nullspace(A, cfg)
            for i in range(cl.geometric):
                chains.append(FloquetChain(cl.value, (null[:, i],)))
            continue
        A = T - cl.value * np.eye(n, dtype=complex)
        norm_a = float(np.linalg.norm(A, 2))
        p = max(cl.block_sizes)
        kernels = []
        P = np.eye(n, dtype=complex)
        for k in range(1, p + 1):
            P = P @ A
            kernels.append(_nullspace(P, cfg, scale=max(norm_a, 1e-300) ** k))
        counts = {}
        for s in cl.block_sizes:
            counts[s] = counts.get(s, 0) + 1
        tops: list[tuple[int, np.ndarray]] = []
        for k in range(p, 0, -1):
            want = sum(1 for s in cl.block_sizes if s == k)
            if want == 0:
                continue
            # new chain tops of height k must extend ker A^{k-1} together with
            # the height-k elements of the taller chains already chosen
            base_cols = []
            if k >= 2:
                base_cols.append(kernels[k - 2])
            for h, v in tops:
                w = v.copy()
                for _ in range(h - k):
                    w = A @ w
                base_cols.append(w[:, None])
            if base_cols:
                stack = np.hstack(base_cols)
                U, s, _ = np.linalg.svd(stack, full_matrices=False)
                keep = int(np.sum(s > max(float(s[0]), 1.0) * 1e-12)) if len(s) else 0
                C = U[:, :keep]
            else:
                C = np.zeros((n, 0), dtype=complex)
            Nk = kernels[k - 1]
            resid = Nk - C @ (C.conj().T @ Nk)
            U, s, _ = np.linalg.svd(resid, full_matrices=False)
            for i in range(want):
                tops.append((k, U[:, i]))
        for h, v in tops:
            vecs = [v]
            for _ in range(h - 1):
                vecs.append(A @ vecs[-1])
            vecs.reverse()  # rank 1 first
            chains.append(FloquetChain(cl.value, tuple(vecs)))
    return chains


def floquet_chains(
    op: PeriodicOperator, lam: complex, cfg: Tolerances = DEFAULT
) -> list[FloquetChain]:
    """Chains of generalized Floquet solutions at lambda (one per block)."""
    rec = floquet_record(op, lam, cfg=cfg)
    return chains_of_matrix(rec.T, rec.multipliers, cfg)


def chain_shift_residual(
    op: PeriodicOperator,
    lam: complex,
    chain: FloquetChain,
    n_samples: int = 16,
    cfg: Tolerances = DEFAULT,
) -> float:
    """Max residual of g^l(x + b) - r g^l(x) - g^{l-1}(x) at sample points,
    relative to the solution scale."""
    from .engine import propagate  # local import to keep module deps one-way

    b = op.period
    xs = np.linspace(0.0, b, n_samples, endpoint=False)
    targets = np.unique(np.concatenate((xs, xs + b)))
    index = {t: i for i, t in enumerate(targets)}
    V = np.stack(chain.vectors, axis=1)  # (n, len)
    states, _, _ = propagate(op, lam, targets, V, 0.0, None, cfg)
    values = states[:, 0, :]  # function values at each target per rank
    worst = 0.0
    scale = max(float(np.max(np.abs(values))), 1e-300)
    for x in xs:
        here = values[index[x]]
        there = values[index[x + b]]
        for l in range(chain.length):
            prev = here[l - 1] if l >= 1 else 0.0
            worst = max(worst, abs(there[l] - chain.multiplier * here[l] - prev) / scale)
    return worst
