"""Closed-form ground truth for the unperturbed and constant-coefficient cases.

Everything here is independent of the ODE engine: fundamental solutions as
series/exponential sums, multiplier formulas, the double-multiplier loci, the
multipoint determinant as an infinite product with a controlled tail, and the
constant-coefficient spectrum edge.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import zeta as hurwitz_zeta

OVERFLOW_EXP = 700.0
SERIES_SWITCH = 1.0  # exponential sum used for |zeta| * x above this


class OracleOverflowError(OverflowError):
    """|lambda^(1/n) x| too large for double-precision exponentials."""


def principal_root(lam: complex, n: int) -> complex:
    """Principal n-th root with argument in [0, 2 pi / n)."""
    lam = complex(lam)
    if lam == 0:
        return 0j
    ang = cmath.phase(lam) % (2.0 * math.pi)
    return abs(lam) ** (1.0 / n) * cmath.exp(1j * ang / n)


@dataclass(frozen=True)
class UnperturbedContext:
    """Order and period of the pure n-th derivative."""

    order: int
    period: float

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if not (self.period > 0):
            raise ValueError("period must be positive")

    @property
    def rho(self) -> complex:
        return cmath.exp(2j * math.pi / self.order)


def _series_value(n: int, x: float, lam: complex, j: int, deriv: int) -> complex:
    # sum_k x^(nk+j-1-deriv) lam^k / (nk+j-1-deriv)!  over nk+j-1 >= deriv
    total = 0j
    k = 0
    while n * k + j - 1 < deriv:
        k += 1
    e = n * k + j - 1 - deriv
    term = complex(lam) ** k * x**e / math.factorial(e)
    for _ in range(400):
        total += term
        # advance k -> k+1: multiply by lam x^n / rising factorial block
        denom = 1.0
        for i in range(e + 1, e + n + 1):
            denom *= i
        term = term * lam * x**n / denom
        e += n
        if abs(term) <= 1e-18 * (abs(total) + 1e-300):
            total += term
            break
    return total


def tilde_fundamental(
    ctx: UnperturbedContext, x: float, lam: complex, j: int, deriv: int = 0
) -> complex:
    """Value of the j-th unperturbed fundamental solution (or a derivative).

    Dual evaluation: the power series for |lambda|^(1/n) |x| <= 1 (no
    cancellation near lambda = 0, removable singularity handled by the series
    itself), the n-term exponential sum beyond.
    """
    n = ctx.order
    if not 1 <= j <= n:
        raise ValueError(f"j must be in 1..{n}")
    if deriv < 0:
        raise ValueError("derivative order must be >= 0")
    zeta = principal_root(lam, n)
    if abs(zeta) * abs(x) <= SERIES_SWITCH:
        return _series_value(n, float(x), complex(lam), j, deriv)
    rho = ctx.rho
    worst = abs(zeta) * abs(x)
    if worst > OVERFLOW_EXP:
        raise OracleOverflowError(
            f"|lambda^(1/n) x| = {worst:.3g} exceeds the double-precision range"
        )
    total = 0j
    power = deriv + 1 - j
    for l in range(n):
        w = rho**l * zeta
        total += w**power * cmath.exp(w * x)
    return total / n


def tilde_fundamental_matrix(ctx: UnperturbedContext, x: float, lam: complex) -> np.ndarray:
    """Matrix [u_j^(i-1)(x)] of the unperturbed fundamental system."""
    n = ctx.order
    out = np.empty((n, n), dtype=complex)
    for j in range(1, n + 1):
        for i in range(n):
            out[i, j - 1] = tilde_fundamental(ctx, x, lam, j, i)
    return out


def tilde_multipliers(ctx: UnperturbedContext, lam: complex) -> np.ndarray:
    """Multipliers exp(rho^j lambda^(1/n) b), j = 0..n-1 (principal root)."""
    n = ctx.order
    zeta = principal_root(lam, n)
    rho = ctx.rho
    out = np.empty(n, dtype=complex)
    for jj in range(n):
        w = rho**jj * zeta * ctx.period
        if w.real > OVERFLOW_EXP:
            raise OracleOverflowError(f"multiplier exponent {w.real:.3g} overflows")
        out[jj] = cmath.exp(w)
    return out


def tilde_double_points(ctx: UnperturbedContext, m: int, d: int) -> float:
    """Real locus where two unperturbed multipliers coincide."""
    n = ctx.order
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 1 <= d <= n - 1:
        raise ValueError(f"d must be in 1..{n - 1}")
    s = math.sin(math.pi * d / n)
    return (-1.0) ** d * math.pi**n * float(m) ** n / (s**n * ctx.period**n)


def tilde_zero_locus(ctx: UnperturbedContext, radius: float) -> list[tuple[float, int]]:
    """All double-multiplier loci with |value| <= radius, with multiplicities.

    Values coinciding to 1e-9 relative are merged; the multiplicity counts the
    (m, d) pairs producing the value.
    """
    n = ctx.order
    raw: list[float] = []
    for d in range(1, n):
        m = 1
        while True:
            v = tilde_double_points(ctx, m, d)
            if abs(v) > radius:
                break
            raw.append(v)
            m += 1
    raw.sort()
    grouped: list[tuple[float, int]] = []
    for v in raw:
        if grouped and abs(v - grouped[-1][0]) <= 1e-9 * max(abs(v), abs(grouped[-1][0])):
            grouped[-1] = (grouped[-1][0], grouped[-1][1] + 1)
        else:
            grouped.append((v, 1))
    return grouped


def _scaled_product(factors: np.ndarray) -> complex:
    """Product with overflow-safe intermediate scaling."""
    mant = 1.0 + 0j
    expo = 0
    for i in range(0, len(factors), 128):
        mant *= np.prod(factors[i : i + 128])
        if mant == 0:
            return 0j
        _, e = math.frexp(abs(mant))
        mant = mant / math.ldexp(1.0, e)
        expo += e
    return mant * math.ldexp(1.0, expo)


@dataclass(frozen=True)
class ZeroProductValue:
    """Truncated zero-locus product with its analytic tail handling."""

    value: complex
    tail_bound: float            # relative bound on the corrected value
    raw_truncation_bound: float  # multiplicative bound had the tail been dropped
    truncation: int


def tilde_H(ctx: UnperturbedContext, lam: complex, truncation: int = 10_000) -> ZeroProductValue:
    """Multipoint determinant of the unperturbed operator as a product.

    The product over m <= truncation is multiplied by the analytically summed
    tail exp(-sum_p (y_d^p / p) zeta(n p, M+1)); the reported tail_bound is
    the residual of that correction, and raw_truncation_bound records how big
    the dropped tail would have been without it.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    n = ctx.order
    b = ctx.period
    lam = complex(lam)
    prefactor = b ** (n * (n - 1) // 2)
    ms = np.arange(1, truncation + 1, dtype=float) ** n
    value = complex(prefactor)
    log_tail = 0j
    tail_bound = 0.0
    raw_log = 0.0
    for d in range(1, n):
        lam_1d = tilde_double_points(ctx, 1, d)
        y = lam / lam_1d
        value *= _scaled_product(1.0 - y / ms)
        ratio = abs(y) / float(truncation + 1) ** n
        if ratio >= 0.5:
            raise ValueError(
                f"truncation {truncation} too small for |lambda| = {abs(lam):.3g}"
            )
        zeta_1 = float(hurwitz_zeta(n, truncation + 1))
        raw_log += abs(y) * zeta_1
        term = y  # y^p
        p = 1
        while True:
            zp = float(hurwitz_zeta(n * p, truncation + 1))
            contrib = term / p * zp
            log_tail -= contrib
            bound = abs(term) * abs(y) / (p + 1) * float(
                hurwitz_zeta(n * (p + 1), truncation + 1)
            )
            if bound <= 1e-18:
                tail_bound += bound / (1.0 - ratio)
                break
            p += 1
            term = term * y
            if p > 200:
                tail_bound += bound / (1.0 - ratio)
                break
    value *= cmath.exp(log_tail)
    return ZeroProductValue(
        value=value,
        tail_bound=float(tail_bound) * 2.0 + 1e-16,
        raw_truncation_bound=math.expm1(raw_log),
        truncation=truncation,
    )


def _expm1_over_z(z: complex) -> complex:
    """(e^z - 1)/z, series-stable near 0."""
    if abs(z) < 1e-4:
        return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    return (cmath.exp(z) - 1.0) / z


def tilde_H_pairs(ctx: UnperturbedContext, lam: complex) -> complex:
    """Closed pair-product form of the unperturbed multipoint determinant."""
    n = ctx.order
    b = ctx.period
    rho = ctx.rho
    zeta = principal_root(lam, n)
    total = 1.0 + 0j
    for j in range(n):
        for k in range(j + 1, n):
            a_small = rho**j * b
            a_big = rho**k * b
            if max((a_small * zeta).real, (a_big * zeta).real) > OVERFLOW_EXP:
                raise OracleOverflowError("pair-product exponent overflows")
            # (e^{a2 z} - e^{a1 z}) / ((a2 - a1) z), stable at z = 0
            total *= cmath.exp(a_small * zeta) * _expm1_over_z((a_big - a_small) * zeta) * b
    return total


def tilde_discriminant(ctx: UnperturbedContext, lam: complex) -> complex:
    """Squared pair differences of the unperturbed multipliers."""
    rs = tilde_multipliers(ctx, lam)
    n = ctx.order
    total = 1.0 + 0j
    for j in range(n):
        for k in range(j + 1, n):
            total *= (rs[k] - rs[j]) ** 2
    return total


def tilde_discriminant_identity(
    ctx: UnperturbedContext, lam: complex, truncation: int = 10_000
) -> float:
    """Relative residual between the multiplier-pair discriminant and the
    sign * n^n lambda^(n-1) * (zero-locus product)^2 expression."""
    n = ctx.order
    lhs = tilde_discriminant(ctx, lam)
    h = tilde_H(ctx, lam, truncation).value
    sign = (-1.0) ** ((n - 1) * (n - 2) // 2)
    rhs = sign * float(n) ** n * complex(lam) ** (n - 1) * h * h
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


# -- constant coefficients ------------------------------------------------------


@dataclass(frozen=True)
class ConstCoeffContext:
    """Operator with constant coefficients gamma_0..gamma_{n-2}."""

    order: int
    period: float
    gammas: tuple[complex, ...]

    def __post_init__(self):
        if len(self.gammas) != self.order - 1:
            raise ValueError(f"need {self.order - 1} constants")


def _poly_roots_polished(coeffs_desc: np.ndarray) -> np.ndarray:
    """Companion-matrix roots with one Newton polish step."""
    roots = np.roots(coeffs_desc)
    dcoeffs = np.polyder(coeffs_desc)
    vals = np.polyval(coeffs_desc, roots)
    dvals = np.polyval(dcoeffs, roots)
    ok = np.abs(dvals) > 1e-300
    roots[ok] = roots[ok] - vals[ok] / dvals[ok]
    return roots


def const_coeff_roots(ctx: ConstCoeffContext, lam: complex) -> np.ndarray:
    """Roots w of w^n + sum gamma_k w^k = lambda."""
    n = ctx.order
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    for k, g in enumerate(ctx.gammas):
        coeffs[n - k] = g
    coeffs[n] += -complex(lam)
    return _poly_roots_polished(coeffs)


def const_coeff_multipliers(ctx: ConstCoeffContext, lam: complex) -> np.ndarray:
    """Multipliers e^{w_j b} over the characteristic roots w_j."""
    ws = const_coeff_roots(ctx, lam)
    if np.max(ws.real) * ctx.period > OVERFLOW_EXP:
        raise OracleOverflowError("constant-coefficient multiplier overflows")
    return np.exp(ws * ctx.period)


def const_coeff_spectrum_edge(half_order: int, alphas: Sequence[float]) -> float:
    """Left spectrum edge min_{eta <= 0} of the symbol in eta = w^2.

    The symbol is (-1)^nu eta^nu + sum alpha_k eta^k with real alphas; the
    minimum over (-inf, 0] is attained at eta = 0 or a real critical point.
    """
    nu = int(half_order)
    if nu < 1:
        raise ValueError("half_order must be >= 1")
    alphas = [float(a) for a in alphas]
    if len(alphas) != nu:
        raise ValueError(f"need {nu} coefficients alpha_0..alpha_{nu - 1}")
    coeffs = np.zeros(nu + 1)
    coeffs[0] = (-1.0) ** nu
    for k, a in enumerate(alphas):
        coeffs[nu - k] = a
    candidates = [0.0]
    if nu >= 2:
        for r in np.roots(np.polyder(coeffs)):
            if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real)) and r.real <= 0.0:
                candidates.append(float(r.real))
    return min(float(np.polyval(coeffs, eta)) for eta in candidates)
