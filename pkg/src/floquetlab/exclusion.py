"""Exclusion region: disks around the n-th roots of the double-multiplier loci.

Outside this set the multipliers are uniformly separated relative to their
size, which is what the pairing, localization and asymptotic-fit machinery
rely on.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExclusionRegion:
    """Union over integers m and index pairs j < k of disks of radius delta
    centered at pi m / (b sin(pi (k-j)/n)) * exp(-i pi (j+k-2)/n)."""

    delta: float
    period: float
    order: int

    def __post_init__(self):
        if not (self.delta > 0):
            raise ValueError("delta must be positive")
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if not (self.period > 0):
            raise ValueError("period must be positive")

    def _m_bound(self, radius: float) -> int:
        # |center| = pi |m| / (b sin(pi d / n)) and sin <= 1, so every center
        # within `radius` has |m| <= radius b / pi.
        return int(math.ceil((radius + self.delta) * self.period / math.pi)) + 1

    def centers_within(self, radius: float) -> np.ndarray:
        """All disk centers with modulus <= radius + delta."""
        n = self.order
        b = self.period
        out = set()
        mmax = self._m_bound(radius)
        for j in range(1, n + 1):
            for k in range(j + 1, n + 1):
                s = math.sin(math.pi * (k - j) / n)
                phase = cmath.exp(-1j * math.pi * (j + k - 2) / n)
                for m in range(-mmax, mmax + 1):
                    c = math.pi * m / (b * s) * phase
                    if abs(c) <= radius + self.delta:
                        out.add(c)
        return np.array(sorted(out, key=lambda z: (abs(z), z.real, z.imag)), dtype=complex)

    def distance_to_centers(self, z: complex) -> float:
        """Distance from z to the nearest disk center."""
        z = complex(z)
        centers = self.centers_within(abs(z) + 2.0 * self.delta + 1.0)
        if len(centers) == 0:
            return math.inf
        return float(np.min(np.abs(centers - z)))

    def contains(self, z: complex) -> tuple[bool, float]:
        """(membership, distance to the nearest center)."""
        d = self.distance_to_centers(z)
        return d < self.delta, d

    def free_annuli(self, r_max: float) -> list[tuple[float, float]]:
        """Modulus intervals in (0, r_max] meeting no disk.

        Constructive check of the annulus-gap property: blocked intervals
        [|c| - delta, |c| + delta] are merged and complemented.
        """
        radii = sorted({abs(c) for c in self.centers_within(r_max + self.delta)})
        blocked: list[tuple[float, float]] = []
        for r in radii:
            lo, hi = max(0.0, r - self.delta), r + self.delta
            if blocked and lo <= blocked[-1][1]:
                blocked[-1] = (blocked[-1][0], max(blocked[-1][1], hi))
            else:
                blocked.append((lo, hi))
        free = []
        prev = 0.0
        for lo, hi in blocked:
            if lo > prev:
                free.append((prev, min(lo, r_max)))
            prev = max(prev, hi)
            if prev >= r_max:
                break
        if prev < r_max:
            free.append((prev, r_max))
        return [(lo, hi) for lo, hi in free if hi > lo]
