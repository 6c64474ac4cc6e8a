"""Finite unions of closed intervals on the energy axis."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

TOUCH_TOL = 1e-10


@dataclass(frozen=True)
class BandSet:
    """Sorted, pairwise disjoint closed intervals [a_i, b_i] with b_i < a_{i+1}.

    ``meta`` carries provenance (theta resolution, tolerances) and does not
    take part in equality.
    """

    intervals: tuple[tuple[float, float], ...] = ()
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple[float, float]], merge_tol: float = TOUCH_TOL,
                       meta: dict | None = None) -> "BandSet":
        items = sorted((float(a), float(b)) for a, b in intervals)
        merged: list[list[float]] = []
        for a, b in items:
            if b < a:
                raise ValueError(f"interval [{a}, {b}] has lower > upper")
            if merged and a - merged[-1][1] <= merge_tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged), dict(meta or {}))

    @classmethod
    def empty(cls, meta: dict | None = None) -> "BandSet":
        return cls((), dict(meta or {}))

    def with_meta(self, **meta) -> "BandSet":
        return BandSet(self.intervals, {**self.meta, **meta})

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    @property
    def hull(self) -> tuple[float, float]:
        if not self.intervals:
            raise ValueError("empty band set has no hull")
        return self.intervals[0][0], self.intervals[-1][1]

    def contains(self, E: float, tol: float = 0.0) -> bool:
        return self.locate(E, tol) is not None

    def locate(self, E: float, tol: float = 0.0) -> int | None:
        """Index of the interval containing E (within tol), else None."""
        lowers = [a for a, _ in self.intervals]
        i = bisect.bisect_right(lowers, E + tol) - 1
        if i >= 0 and E <= self.intervals[i][1] + tol:
            return i
        return None

    def distance(self, E: float) -> float:
        """dist(E, set); inf for the empty set."""
        if not self.intervals:
            return math.inf
        best = math.inf
        for a, b in self.intervals:
            if a <= E <= b:
                return 0.0
            best = min(best, abs(E - a), abs(E - b))
        return best

    def intersect(self, other: "BandSet", touch_tol: float = TOUCH_TOL) -> "BandSet":
        # intervals whose ends miss by at most touch_tol meet in a point, as in from_intervals
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if lo <= hi:
                out.append((lo, hi))
            elif lo - hi <= touch_tol:
                mid = 0.5 * (lo + hi)
                out.append((mid, mid))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return BandSet.from_intervals(out, merge_tol=0.0)

    def union(self, other: "BandSet") -> "BandSet":
        return BandSet.from_intervals(self.intervals + other.intervals, merge_tol=0.0)

    def fatten(self, eps: float) -> "BandSet":
        """The closed eps-neighbourhood."""
        return BandSet.from_intervals(((a - eps, b + eps) for a, b in self.intervals), merge_tol=0.0)

    def clip(self, lo: float, hi: float) -> "BandSet":
        return self.intersect(BandSet(((lo, hi),)))

    def symmetric_difference_measure(self, other: "BandSet") -> float:
        return max(0.0, self.measure + other.measure - 2.0 * self.intersect(other).measure)

    def issubset(self, other: "BandSet", tol: float = 0.0) -> bool:
        for a, b in self.intervals:
            i = other.locate(a, tol)
            if i is None or b > other.intervals[i][1] + tol:
                return False
        return True

    def _sup_distance_to(self, other: "BandSet") -> float:
        """sup_{x in self} dist(x, other)."""
        if not self.intervals:
            return 0.0
        if not other.intervals:
            return math.inf
        candidates = [x for iv in self.intervals for x in iv]
        gaps = [(other.intervals[k][1] + other.intervals[k + 1][0]) / 2
                for k in range(len(other.intervals) - 1)]
        candidates += [g for g in gaps if self.contains(g)]
        return max(other.distance(x) for x in candidates)

    def hausdorff(self, other: "BandSet") -> float:
        if not self.intervals and not other.intervals:
            return 0.0
        return max(self._sup_distance_to(other), other._sup_distance_to(self))

    def as_array(self) -> np.ndarray:
        return np.array(self.intervals, dtype=float).reshape(-1, 2)
