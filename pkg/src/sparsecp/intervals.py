"""Finite unions of closed intervals over the extended real line."""

from __future__ import annotations

import math
from dataclasses import dataclass

_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint, sorted union of closed intervals ``[lo, hi]``.

    Endpoints may be ``-inf``/``+inf``. Degenerate single points
    ``[a, a]`` are kept: they carry zero Lebesgue measure but still
    matter for membership.
    """

    intervals: tuple[tuple[float, float], ...]

    @staticmethod
    def from_pairs(pairs) -> "IntervalSet":
        """Normalize arbitrary ``(lo, hi)`` pairs: sort, merge touching."""
        cleaned = []
        for lo, hi in pairs:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi):
                raise ValueError("interval endpoint is NaN")
            if lo > hi:
                raise ValueError(f"interval has lo={lo} > hi={hi}")
            cleaned.append((lo, hi))
        cleaned.sort()
        merged: list[list[float]] = []
        for lo, hi in cleaned:
            if merged and lo <= merged[-1][1] + _MERGE_TOL:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return IntervalSet(tuple((lo, hi) for lo, hi in merged))

    @staticmethod
    def empty() -> "IntervalSet":
        return IntervalSet(())

    @staticmethod
    def reals() -> "IntervalSet":
        return IntervalSet(((-math.inf, math.inf),))

    @staticmethod
    def point(a: float) -> "IntervalSet":
        return IntervalSet(((float(a), float(a)),))

    @staticmethod
    def union_of(sets) -> "IntervalSet":
        pairs = []
        for s in sets:
            pairs.extend(s.intervals)
        return IntervalSet.from_pairs(pairs)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lebesgue_length(self) -> float:
        total = 0.0
        for lo, hi in self.intervals:
            total += hi - lo
        return total

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lebesgue_length)

    def hull(self) -> tuple[float, float]:
        """Smallest single interval containing the set; (nan, nan) if empty."""
        if not self.intervals:
            return (math.nan, math.nan)
        return (self.intervals[0][0], self.intervals[-1][1])

    def contains(self, y: float, tol: float = 0.0) -> bool:
        for lo, hi in self.intervals:
            if lo - tol <= y <= hi + tol:
                return True
        return False

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.union_of([self, other])

    def issubset(self, other: "IntervalSet", tol: float = 1e-9) -> bool:
        """Every interval of self lies inside one interval of other."""
        for lo, hi in self.intervals:
            if not any(olo - tol <= lo and hi <= ohi + tol for olo, ohi in other.intervals):
                return False
        return True

    def approx_equal(self, other: "IntervalSet", tol: float = 1e-9) -> bool:
        if len(self.intervals) != len(other.intervals):
            return False
        for (lo, hi), (olo, ohi) in zip(self.intervals, other.intervals):
            if not (_close(lo, olo, tol) and _close(hi, ohi, tol)):
                return False
        return True

    def scaled(self, c: float) -> "IntervalSet":
        """Image under ``y -> c*y`` for c > 0 (lengths scale by c)."""
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return IntervalSet.from_pairs((c * lo, c * hi) for lo, hi in self.intervals)

    def endpoints(self) -> list[float]:
        out = []
        for lo, hi in self.intervals:
            if math.isfinite(lo):
                out.append(lo)
            if math.isfinite(hi):
                out.append(hi)
        return out

    def __iter__(self):
        return iter(self.intervals)


def _close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol
