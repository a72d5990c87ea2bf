"""Periodic differential operators of order n with trig-polynomial coefficients.

An operator is ``u -> u^(n) + sum_{k=0}^{n-2} p_k(x) u^(k)`` after
normalization; construction eliminates a nonzero order-(n-1) coefficient by
the standard exponential substitution, which is exact on trig polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .trigpoly import TrigPolynomial

REALNESS_TOL = 1e-12


class OperatorSpecError(ValueError):
    """Raised for invalid operator descriptions."""


@dataclass(frozen=True)
class PeriodicOperator:
    """Normalized operator u^(n) + sum p_k u^(k), k = 0..n-2.

    ``lambda_sign`` records the spectral-parameter bookkeeping introduced by
    adjoint normalization for odd order: the represented eigenproblem is the
    original one with lambda replaced by lambda_sign * lambda.
    """

    order: int
    period: float
    coefficients: tuple[TrigPolynomial, ...]
    form_tag: str = "general"
    lambda_sign: int = 1

    def __post_init__(self):
        if self.order < 2:
            raise OperatorSpecError(f"order must be >= 2, got {self.order}")
        if not (self.period > 0):
            raise OperatorSpecError(f"period must be positive, got {self.period}")
        if len(self.coefficients) != self.order - 1:
            raise OperatorSpecError(
                f"expected {self.order - 1} coefficients p_0..p_{self.order - 2}, "
                f"got {len(self.coefficients)}"
            )
        for k, p in enumerate(self.coefficients):
            if not isinstance(p, TrigPolynomial):
                raise OperatorSpecError(f"coefficient p_{k} is not a TrigPolynomial")
            if p.period != self.period:
                raise OperatorSpecError(
                    f"coefficient p_{k} period {p.period} != operator period {self.period}"
                )
        if self.form_tag not in ("general", "symmetric_real", "constant", "unperturbed"):
            raise OperatorSpecError(f"unknown form_tag {self.form_tag!r}")
        if self.form_tag == "symmetric_real":
            if self.order % 2:
                raise OperatorSpecError("symmetric_real requires even order")
            xs = np.linspace(0.0, self.period, 17)
            for k, p in enumerate(self.coefficients):
                vals = p(xs)
                if np.max(np.abs(vals.imag)) > REALNESS_TOL * max(1.0, np.max(np.abs(vals))):
                    raise OperatorSpecError(f"p_{k} is not real-valued on the sample grid")
        if self.form_tag == "constant":
            for k, p in enumerate(self.coefficients):
                if any(m != 0 for m in p.harmonics()):
                    raise OperatorSpecError(f"p_{k} is not constant")
        if self.form_tag == "unperturbed":
            if any(not p.is_zero() for p in self.coefficients):
                raise OperatorSpecError("unperturbed form requires all coefficients zero")

    def coefficient(self, k: int) -> TrigPolynomial:
        return self.coefficients[k]

    def coefficient_bound(self) -> float:
        """Upper bound on max_k sup |p_k|."""
        if not self.coefficients:
            return 0.0
        return max(p.sup_norm_bound() for p in self.coefficients)


def _classify_form(coefficients: Sequence[TrigPolynomial]) -> str:
    if all(p.is_zero() for p in coefficients):
        return "unperturbed"
    if all(all(m == 0 for m in p.harmonics()) for p in coefficients):
        return "constant"
    return "general"


def unperturbed(order: int, period: float = 1.0) -> PeriodicOperator:
    """The pure n-th derivative."""
    zero = TrigPolynomial.zero(period)
    return PeriodicOperator(order, period, (zero,) * (order - 1), "unperturbed")


def constant_operator(order: int, period: float, gammas: Sequence[complex]) -> PeriodicOperator:
    """Operator with constant coefficients gamma_0..gamma_{n-2}."""
    if len(gammas) != order - 1:
        raise OperatorSpecError(f"need {order - 1} constants, got {len(gammas)}")
    coeffs = tuple(TrigPolynomial.constant(period, g) for g in gammas)
    return PeriodicOperator(order, period, coeffs, _classify_form(coeffs))


# -- differential-operator expansion helpers ----------------------------------
#
# An operator is carried as the list [q_0, ..., q_n] of TrigPolynomial
# coefficients of D^0..D^n.  These helpers stay exact on the harmonic data.


def _shifted_derivative_powers(w: TrigPolynomial, order: int) -> list[list[TrigPolynomial]]:
    """Coefficient lists of (D + w)^k for k = 0..order."""
    period = w.period
    one = TrigPolynomial.constant(period, 1.0)
    zero = TrigPolynomial.zero(period)
    powers = [[one]]
    for _ in range(order):
        prev = powers[-1]
        nxt = [zero] * (len(prev) + 1)
        for j, q in enumerate(prev):
            nxt[j + 1] = nxt[j + 1] + q          # D * q D^j  ->  q D^{j+1}
            nxt[j] = nxt[j] + q.derivative() + w * q
        powers.append(nxt)
    return powers


def build_operator(
    order: int,
    period: float,
    coefficients: Mapping[int, TrigPolynomial] | Sequence[TrigPolynomial],
    form: str | None = None,
) -> PeriodicOperator:
    """Build and normalize an operator from raw coefficients.

    ``coefficients`` maps derivative index k to p_k (absent k means zero) and
    may include a nonzero p_{n-1}; the substitution
    ``u = v exp(-(1/n) int p_{n-1})`` rewrites the problem with p_{n-1} == 0.
    A p_{n-1} with nonzero mean is rejected: the factor would not be periodic
    and the rewritten problem would leave the periodic class.

    Parameters
    ----------
    order : operator order n >= 2.
    period : common period b > 0 of all coefficients.
    coefficients : map {k: TrigPolynomial} for 0 <= k <= n-1, or a sequence
        interpreted as p_0, p_1, ...
    form : optional form tag; inferred when omitted.  "symmetric_real"
        triggers the evenness/realness validation.
    """
    if order < 2:
        raise OperatorSpecError(f"order must be >= 2, got {order}")
    if not (period > 0):
        raise OperatorSpecError(f"period must be positive, got {period}")
    if not isinstance(coefficients, Mapping):
        coefficients = {k: p for k, p in enumerate(coefficients)}
    if not coefficients and order >= 2:
        coefficients = {}
    cmap: dict[int, TrigPolynomial] = {}
    for k, p in coefficients.items():
        k = int(k)
        if not 0 <= k <= order - 1:
            raise OperatorSpecError(f"coefficient index {k} outside 0..{order - 1}")
        if not isinstance(p, TrigPolynomial):
            raise OperatorSpecError(f"coefficient p_{k} is not a TrigPolynomial")
        if p.period != period:
            raise OperatorSpecError(
                f"coefficient p_{k} period {p.period} != operator period {period}"
            )
        if not p.is_zero():
            cmap[k] = p

    zero = TrigPolynomial.zero(period)
    p_top = cmap.pop(order - 1, zero)
    if not p_top.is_zero():
        if p_top.mean() != 0:
            raise OperatorSpecError(
                "p_{n-1} has nonzero mean; the eliminating substitution "
                "exp(-(1/n) int p_{n-1}) would not be periodic"
            )
        gprime = p_top * (-1.0 / order)
        powers = _shifted_derivative_powers(gprime, order)
        new = [zero] * (order + 1)
        full = [cmap.get(k, zero) for k in range(order - 1)] + [p_top, TrigPolynomial.constant(period, 1.0)]
        for k, q_k in enumerate(full):
            if q_k.is_zero():
                continue
            for j, c in enumerate(powers[k]):
                new[j] = new[j] + q_k * c
        if not new[order - 1].is_zero():
            raise AssertionError("order-(n-1) term failed to cancel")
        cmap = {k: p for k, p in enumerate(new[: order - 1]) if not p.is_zero()}

    coeffs = tuple(cmap.get(k, zero) for k in range(order - 1))
    if form in (None, "general"):
        tag = _classify_form(coeffs)
    elif form == "symmetric":
        tag = "symmetric_real"
    else:
        tag = form
    return PeriodicOperator(order, period, coeffs, tag)


def shift_operator(op: PeriodicOperator, xi: float) -> PeriodicOperator:
    """Operator with coefficients p_k(x + xi); xi is reduced mod the period."""
    coeffs = tuple(p.shift(xi) for p in op.coefficients)
    return PeriodicOperator(op.order, op.period, coeffs, op.form_tag, op.lambda_sign)


def adjoint_operator(op: PeriodicOperator) -> PeriodicOperator:
    """Formal adjoint, renormalized to leading coefficient +1.

    The adjoint has leading term (-1)^n d^n/dx^n; for odd n the whole operator
    is negated so the leading coefficient is +1 again, and the returned
    ``lambda_sign`` = (-1)^n records that its eigenproblem at lambda is the
    adjoint's at lambda_sign * lambda.
    """
    n = op.order
    zero = TrigPolynomial.zero(op.period)
    new = [zero] * n  # coefficients of u^(0)..u^(n-1) before sign fix
    for k in range(n - 1):
        pk = op.coefficients[k].conjugate()
        if pk.is_zero():
            continue
        sign = (-1) ** k
        for i in range(k + 1):
            # D^k[q u] contributes C(k,i) q^{(i)} u^{(k-i)}
            term = pk.derivative(i) * (sign * math.comb(k, i))
            new[k - i] = new[k - i] + term
    lead_sign = (-1) ** n
    if lead_sign < 0:
        new = [p * (-1.0) for p in new]
    if not new[n - 1].is_zero():
        raise AssertionError("adjoint produced a nonzero order-(n-1) term")
    coeffs = tuple(new[: n - 1])
    return PeriodicOperator(n, op.period, coeffs, _classify_form(coeffs), lead_sign)


@dataclass(frozen=True)
class SymmetricSpec:
    """Real symmetric operator u^(2 nu) + sum_k d^k/dx^k [a_k(x) u^(k)]."""

    half_order: int
    period: float
    a_coeffs: tuple[TrigPolynomial, ...] = field(default=())

    def __post_init__(self):
        if self.half_order < 1:
            raise OperatorSpecError("half_order must be >= 1")
        if len(self.a_coeffs) != self.half_order:
            raise OperatorSpecError(
                f"need {self.half_order} coefficients a_0..a_{self.half_order - 1}"
            )
        xs = np.linspace(0.0, self.period, 17)
        for k, a in enumerate(self.a_coeffs):
            if a.period != self.period:
                raise OperatorSpecError(f"a_{k} period mismatch")
            vals = a(xs)
            if np.max(np.abs(vals.imag)) > REALNESS_TOL * max(1.0, np.max(np.abs(vals))):
                raise OperatorSpecError(f"a_{k} is not real-valued")


def expand_symmetric(spec: SymmetricSpec) -> PeriodicOperator:
    """Expand the divergence form via the Leibniz rule into standard form.

    The order-(2 nu - 1) coefficient vanishes identically (the inner
    derivative orders never reach it); this is asserted harmonic-wise.
    """
    nu = spec.half_order
    n = 2 * nu
    zero = TrigPolynomial.zero(spec.period)
    new = [zero] * n
    for k in range(nu):
        a = spec.a_coeffs[k]
        if a.is_zero():
            continue
        for i in range(k + 1):
            # D^k[a u^(k)] contributes C(k,i) a^{(i)} u^{(2k-i)}
            new[2 * k - i] = new[2 * k - i] + a.derivative(i) * math.comb(k, i)
    if not new[n - 1].is_zero():
        raise AssertionError("expansion produced a nonzero order-(n-1) term")
    return PeriodicOperator(n, spec.period, tuple(new[: n - 1]), "symmetric_real")


# -- config-file schema --------------------------------------------------------

_FORM_FROM_CONFIG = {
    "general": "general",
    "symmetric": "symmetric_real",
    "constant": "constant",
    "unperturbed": "unperturbed",
}
_FORM_TO_CONFIG = {v: k for k, v in _FORM_FROM_CONFIG.items()}


def operator_from_config(doc: Mapping) -> PeriodicOperator:
    """Build an operator from the JSON config mapping.

    Schema: {"order": n, "period": b,
             "coefficients": [{"k": int, "harmonics": [{"m", "re", "im"}]}],
             "form": "general|symmetric|constant|unperturbed"}
    """
    try:
        order = int(doc["order"])
        period = float(doc["period"])
        entries = doc.get("coefficients", [])
        form = doc.get("form", "general")
    except (KeyError, TypeError, ValueError) as exc:
        raise OperatorSpecError(f"malformed operator config: {exc}") from exc
    if form not in _FORM_FROM_CONFIG:
        raise OperatorSpecError(f"unknown form {form!r}")
    cmap: dict[int, TrigPolynomial] = {}
    for entry in entries:
        try:
            k = int(entry["k"])
            harmonics = {
                int(h["m"]): complex(float(h["re"]), float(h.get("im", 0.0)))
                for h in entry.get("harmonics", [])
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise OperatorSpecError(f"malformed coefficient entry: {exc}") from exc
        if k in cmap:
            raise OperatorSpecError(f"duplicate coefficient index {k}")
        cmap[k] = TrigPolynomial(period, harmonics)
    return build_operator(order, period, cmap, form=_FORM_FROM_CONFIG[form])


def operator_to_config(op: PeriodicOperator) -> dict:
    """Inverse of operator_from_config (normalized form only)."""
    coeffs = []
    for k, p in enumerate(op.coefficients):
        if p.is_zero():
            continue
        coeffs.append(
            {
                "k": k,
                "harmonics": [
                    {"m": m, "re": c.real, "im": c.imag} for m, c in sorted(p.terms.items())
                ],
            }
        )
    return {
        "order": op.order,
        "period": op.period,
        "coefficients": coeffs,
        "form": _FORM_TO_CONFIG[op.form_tag],
    }
