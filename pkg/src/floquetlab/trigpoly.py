"""Trigonometric polynomials: finite Fourier sums on a fixed period.

These are the coefficient functions of the periodic operators.  Keeping them
as finite harmonic maps makes differentiation, shifting, conjugation and
products exact, which the rest of the toolkit relies on.
"""

from __future__ import annotations

import cmath
import math
from typing import Iterable, Mapping

import numpy as np

_DROP = 0.0  # harmonics with |amplitude| <= _DROP are removed (exact zeros only)


class TrigPolynomial:
    """A finite sum ``sum_m c_m exp(2 pi i m x / period)``.

    Immutable.  Arithmetic (+, -, *, scalar scaling), differentiation and
    shifting stay inside the class and are exact on the harmonic data.
    """

    __slots__ = ("period", "_terms")

    def __init__(self, period: float, terms: Mapping[int, complex] | Iterable[tuple[int, complex]] = ()):
        period = float(period)
        if not (period > 0.0) or not math.isfinite(period):
            raise ValueError(f"period must be a positive real, got {period}")
        object.__setattr__(self, "period", period)
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[int, complex] = {}
        for m, c in items:
            c = complex(c)
            if c != 0:
                clean[int(m)] = clean.get(int(m), 0j) + c
        clean = {m: c for m, c in clean.items() if abs(c) > _DROP}
        object.__setattr__(self, "_terms", dict(sorted(clean.items())))

    def __setattr__(self, name, value):
        raise AttributeError("TrigPolynomial is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, period: float) -> "TrigPolynomial":
        return cls(period, {})

    @classmethod
    def constant(cls, period: float, value: complex) -> "TrigPolynomial":
        return cls(period, {0: value})

    @classmethod
    def cosine(cls, period: float, amplitude: complex = 1.0, harmonic: int = 1) -> "TrigPolynomial":
        """``amplitude * cos(2 pi harmonic x / period)``."""
        a = complex(amplitude) / 2.0
        return cls(period, {harmonic: a, -harmonic: a})

    @classmethod
    def sine(cls, period: float, amplitude: complex = 1.0, harmonic: int = 1) -> "TrigPolynomial":
        """``amplitude * sin(2 pi harmonic x / period)``."""
        a = complex(amplitude) / 2j
        return cls(period, {harmonic: a, -harmonic: -a})

    # -- inspection ------------------------------------------------------------

    @property
    def terms(self) -> dict[int, complex]:
        return dict(self._terms)

    def harmonics(self) -> tuple[int, ...]:
        return tuple(self._terms)

    def amplitude(self, m: int) -> complex:
        return self._terms.get(int(m), 0j)

    def mean(self) -> complex:
        return self._terms.get(0, 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        """True iff the function is real-valued: c_{-m} == conj(c_m) exactly."""
        for m, c in self._terms.items():
            if self._terms.get(-m, 0j) != c.conjugate():
                return False
        return True

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TrigPolynomial)
            and self.period == other.period
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.period, tuple(self._terms.items())))

    def __repr__(self) -> str:
        return f"TrigPolynomial(period={self.period!r}, terms={self._terms!r})"

    # -- evaluation ------------------------------------------------------------

    def __call__(self, x):
        """Evaluate at a scalar or array of points."""
        w = 2.0 * math.pi / self.period
        if np.ndim(x) == 0:
            return sum(
                (c * cmath.exp(1j * w * m * float(x)) for m, c in self._terms.items()),
                0j,
            )
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for m, c in self._terms.items():
            out += c * np.exp(1j * w * m * x)
        return out

    # -- exact calculus --------------------------------------------------------

    def derivative(self, order: int = 1) -> "TrigPolynomial":
        """d^order/dx^order; harmonic m scales by (2 pi i m / period)^order."""
        w = 2.0 * math.pi / self.period
        return TrigPolynomial(
            self.period,
            {m: c * (1j * w * m) ** order for m, c in self._terms.items()},
        )

    def antiderivative(self) -> "TrigPolynomial":
        """Periodic antiderivative; requires zero mean (the m=0 harmonic)."""
        if self._terms.get(0, 0j) != 0:
            raise ValueError("antiderivative of a nonzero-mean harmonic is not periodic")
        w = 2.0 * math.pi / self.period
        return TrigPolynomial(
            self.period,
            {m: c / (1j * w * m) for m, c in self._terms.items()},
        )

    def shift(self, xi: float) -> "TrigPolynomial":
        """x -> x + xi; xi is reduced modulo the period first."""
        xi = math.fmod(float(xi), self.period)
        w = 2.0 * math.pi / self.period
        return TrigPolynomial(
            self.period,
            {m: c * cmath.exp(1j * w * m * xi) for m, c in self._terms.items()},
        )

    def conjugate(self) -> "TrigPolynomial":
        """Complex conjugate function: m -> conj(c_{-m})."""
        return TrigPolynomial(
            self.period,
            {-m: c.conjugate() for m, c in self._terms.items()},
        )

    # -- arithmetic ------------------------------------------------------------

    def _check_period(self, other: "TrigPolynomial"):
        if self.period != other.period:
            raise ValueError(f"period mismatch: {self.period} vs {other.period}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TrigPolynomial.constant(self.period, other)
        self._check_period(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0j) + c
        return TrigPolynomial(self.period, terms)

    __radd__ = __add__

    def __neg__(self):
        return TrigPolynomial(self.period, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPolynomial) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return TrigPolynomial(
                self.period, {m: c * other for m, c in self._terms.items()}
            )
        self._check_period(other)
        terms: dict[int, complex] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = m1 + m2
                terms[m] = terms.get(m, 0j) + c1 * c2
        return TrigPolynomial(self.period, terms)

    __rmul__ = __mul__

    def sup_norm_bound(self) -> float:
        """Upper bound sum |c_m| on max |value|."""
        return float(sum(abs(c) for c in self._terms.values()))
