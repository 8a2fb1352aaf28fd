"""Finite unions of half-open rational intervals with exact Lebesgue measure."""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Interval = tuple[Fraction, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


def _normalize(pieces: Iterable[Interval]) -> tuple[Interval, ...]:
    out: list[list[Fraction]] = []
    for a, b in sorted((Fraction(a), Fraction(b)) for a, b in pieces):
        if b <= a:
            continue
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1][1] = b
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


class IntervalSet:
    """A normalized union of half-open intervals ``[a, b)``.

    Normalization sorts the pieces, drops empty ones and merges overlapping
    or adjacent ones, so two sets are equal iff their interval tuples are.

    >>> s = IntervalSet([(0, Fraction(1, 2)), (Fraction(3, 4), 1)])
    >>> s.measure
    Fraction(3, 4)
    """

    __slots__ = ("intervals", "_starts")

    def __init__(self, pieces: Iterable[Interval] = (), *, _trusted: bool = False):
        self.intervals: tuple[Interval, ...] = tuple(pieces) if _trusted else _normalize(pieces)
        self._starts: list[Fraction] | None = None

    @classmethod
    def interval(cls, a, b) -> "IntervalSet":
        return cls([(a, b)])

    @classmethod
    def unit(cls) -> "IntervalSet":
        return cls([(ZERO, ONE)], _trusted=True)

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls((), _trusted=True)

    @classmethod
    def from_sorted(cls, pieces: Sequence[Interval]) -> "IntervalSet":
        """Build from pieces already sorted by left endpoint; only merging is done."""
        out: list[Interval] = []
        for a, b in pieces:
            if b <= a:
                continue
            if out and a <= out[-1][1]:
                if b > out[-1][1]:
                    out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
        return cls(out, _trusted=True)

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), ZERO)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __repr__(self) -> str:
        body = " ∪ ".join(f"[{a}, {b})" for a, b in self.intervals) or "∅"
        return f"IntervalSet({body})"

    def __contains__(self, x) -> bool:
        if self._starts is None:
            self._starts = [a for a, _ in self.intervals]
        i = bisect_right(self._starts, x) - 1
        return i >= 0 and x < self.intervals[i][1]

    def __or__(self, other: "IntervalSet") -> "IntervalSet":
        return self.union(other)

    def __and__(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other)

    def __sub__(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other.complement())

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        xs, ys = self.intervals, other.intervals
        out: list[Interval] = []
        i = j = 0
        while i < len(xs) and j < len(ys):
            a = max(xs[i][0], ys[j][0])
            b = min(xs[i][1], ys[j][1])
            if a < b:
                out.append((a, b))
            if xs[i][1] < ys[j][1]:
                i += 1
            else:
                j += 1
        # pieces of two normalized sets never touch after intersection
        return IntervalSet(out, _trusted=True)

    def complement(self) -> "IntervalSet":
        """Complement inside [0, 1)."""
        out: list[Interval] = []
        cursor = ZERO
        for a, b in self.intervals:
            if a > cursor:
                out.append((cursor, min(a, ONE)))
            cursor = max(cursor, b)
        if cursor < ONE:
            out.append((cursor, ONE))
        return IntervalSet(out, _trusted=True)

    def translate_mod1(self, shift) -> "IntervalSet":
        """Rigid rotation of a subset of [0, 1) by ``shift`` modulo 1."""
        shift = Fraction(shift) % 1
        pieces: list[Interval] = []
        for a, b in self.intervals:
            a, b = a + shift, b + shift
            if b <= ONE:
                pieces.append((a, b))
            elif a >= ONE:
                pieces.append((a - 1, b - 1))
            else:
                pieces.append((a, ONE))
                pieces.append((ZERO, b - 1))
        return IntervalSet(pieces)

    def affine_image(self, slope, offset) -> "IntervalSet":
        """Image under ``x -> slope*x + offset`` for positive ``slope``."""
        return IntervalSet([(slope * a + offset, slope * b + offset) for a, b in self.intervals], _trusted=True)
