"""Partitions, raw coding of orbits, exact preimages and cylinder refinements."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .dynamics import ROTATION, SHIFT, IntervalMap, TrajectorySource
from .errors import DomainError, ResourceError
from .intervals import ONE, ZERO, IntervalSet

#: Default cap on the refinement order accepted by :func:`refine`.
REFINE_CAP = 20


class Partition:
    """Ordered half-open intervals ``X_0, ..., X_{M-1}`` tiling [0, 1).

    Symbols are 0-based indices into this list.
    """

    def __init__(self, elements: Iterable[tuple], name: str | None = None):
        elems = [(Fraction(a), Fraction(b)) for a, b in elements]
        cursor = ZERO
        for a, b in elems:
            if a != cursor:
                raise DomainError(f"partition elements must tile [0,1) in order; gap or overlap at {cursor}")
            if b <= a:
                raise DomainError(f"partition element [{a}, {b}) has non-positive length")
            cursor = b
        if cursor != ONE:
            raise DomainError("partition must cover [0, 1)")
        self.elements: tuple[tuple[Fraction, Fraction], ...] = tuple(elems)
        self.name = name or "custom"
        self._starts = [a for a, _ in elems]

    @classmethod
    def from_cuts(cls, cuts: Sequence, name: str | None = None) -> "Partition":
        pts = [ZERO, *map(Fraction, cuts), ONE]
        return cls(zip(pts[:-1], pts[1:]), name)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.elements == other.elements

    def __repr__(self) -> str:
        return f"Partition({self.name}, M={len(self)})"

    def element_set(self, i: int) -> IntervalSet:
        return IntervalSet([self.elements[i]], _trusted=True)

    @property
    def cuts(self) -> list[Fraction]:
        return [a for a, _ in self.elements[1:]]

    @cached_property
    def dyadic_resolution(self) -> int | None:
        """Smallest ``K`` with every endpoint a multiple of ``2**-K``, or None."""
        k = 0
        for a, _ in self.elements:
            d = a.denominator
            if d & (d - 1):
                return None
            k = max(k, d.bit_length() - 1)
        return k

    @cached_property
    def _dyadic_table(self) -> np.ndarray:
        k = self.dyadic_resolution
        return np.array([self.locate(Fraction(v, 1 << k)) for v in range(1 << k)], dtype=np.int64)

    def locate(self, x: Fraction) -> int:
        return bisect_right(self._starts, x) - 1


def binary_partition() -> Partition:
    return Partition.from_cuts([Fraction(1, 2)], "binary")


def dyadic_partition(k: int) -> Partition:
    if k < 0:
        raise DomainError("dyadic:K needs K >= 0")
    n = 1 << k
    return Partition.from_cuts([Fraction(i, n) for i in range(1, n)], f"dyadic:{k}")


def _dyadic_blocks(a: Fraction, b: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Split [a, b) into maximal aligned dyadic intervals (a, b dyadic)."""
    out = []
    while a < b:
        size = ONE
        while a % size != 0 or a + size > b:
            size /= 2
        out.append((a, a + size))
        a += size
    return out


def bridge_partition(k: int) -> Partition:
    """``[1/2 - 2**-k, 1/2 + 2**-k)`` plus the dyadic completion of its complement.

    The complement is cut into maximal aligned dyadic intervals, so for k = 2
    the partition is [0, 1/4), [1/4, 3/4), [3/4, 1).
    """
    if k < 1:
        raise DomainError("bridge:k needs 2**-k <= 1/2, i.e. k >= 1")
    r = Fraction(1, 1 << k)
    lo, hi = Fraction(1, 2) - r, Fraction(1, 2) + r
    elems = _dyadic_blocks(ZERO, lo) + [(lo, hi)] + _dyadic_blocks(hi, ONE)
    return Partition(elems, f"bridge:{k}")


def parse_partition_spec(spec: str) -> Partition:
    """Builtin partition by name: ``binary``, ``dyadic:K`` or ``bridge:k``."""
    name, _, arg = spec.partition(":")
    try:
        if name == "binary" and not arg:
            return binary_partition()
        if name == "dyadic":
            return dyadic_partition(int(arg))
        if name == "bridge":
            return bridge_partition(int(arg))
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad partition spec {spec!r}") from None
    raise DomainError(f"unknown partition spec {spec!r}")


@dataclass(frozen=True)
class SymbolStream:
    alphabet: int
    symbols: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=np.int64)
        if s.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if s.size and (s.min() < 0 or s.max() >= self.alphabet):
            raise DomainError(f"symbols must lie in 0..{self.alphabet - 1}")
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)

    def __len__(self) -> int:
        return self.symbols.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, SymbolStream) and self.alphabet == other.alphabet
                and np.array_equal(self.symbols, other.symbols))

    def tolist(self) -> list[int]:
        return self.symbols.tolist()


def encode_point(partition: Partition, x) -> int:
    x = Fraction(x)
    if not 0 <= x < 1:
        raise DomainError(f"x = {x} is outside [0, 1)")
    return partition.locate(x)


def codes(source: TrajectorySource, partition: Partition, start: int, count: int) -> np.ndarray:
    """Symbols ``Ξ(T^t x)`` for ``start <= t < start + count``; ignores the cursor."""
    source.check_horizon(start, count)
    backend = source.map.backend
    if backend == SHIFT and partition.dyadic_resolution is not None:
        return _shift_codes(source, partition, start, count)
    if backend == ROTATION:
        return _rotation_codes(source, partition, start, count)
    return np.array([partition.locate(x) for x in source.points(start, count)], dtype=np.int64)


def _shift_codes(source: TrajectorySource, partition: Partition, start: int, count: int) -> np.ndarray:
    p = source.map.shift_prefix
    k = max(partition.dyadic_resolution, p)
    width = k - p
    bits = source.binary(p + start + count - 1 + width)
    head = 0
    for b in bits[:p]:
        head = 2 * head + int(b)
    tail = bits[p + start:].astype(np.int64)
    idx = np.full(count, head << width, dtype=np.int64)
    for j in range(width):
        idx |= tail[j:j + count] << (width - 1 - j)
    table = partition._dyadic_table if partition.dyadic_resolution == k else _table_at(partition, k)
    return table[idx]


def _table_at(partition: Partition, k: int) -> np.ndarray:
    return np.array([partition.locate(Fraction(v, 1 << k)) for v in range(1 << k)], dtype=np.int64)


def _rotation_codes(source: TrajectorySource, partition: Partition, start: int, count: int) -> np.ndarray:
    """Rotation symbols from a float pass, with exact recomputation near cuts.

    The float value of ``x0 + t*alpha mod 1`` is within ``margin`` of the
    truth; only points that close to a cut (or to 0) are decided exactly.
    """
    alpha = source.map.alpha
    x0 = source.x0
    t = np.arange(start, start + count, dtype=np.float64)
    xf = np.mod(np.mod(t * float(alpha), 1.0) + float(x0), 1.0)
    cuts = np.array([float(c) for c in partition.cuts], dtype=np.float64)
    sym = np.searchsorted(cuts, xf, side="right").astype(np.int64)
    margin = 8.0 * ((start + count) * 2.0 ** -52 + 2.0 ** -50)
    bounds = np.concatenate([[0.0, 1.0], cuts])
    near = np.min(np.abs(xf[:, None] - bounds[None, :]), axis=1) <= margin
    for i in np.flatnonzero(near):
        sym[i] = partition.locate((x0 + (start + int(i)) * alpha) % 1)
    return sym


def encode_trajectory(source: TrajectorySource, partition: Partition, horizon: int) -> SymbolStream:
    """Code of the next ``horizon`` orbit points; advances the cursor."""
    if horizon < 1:
        raise DomainError("horizon must be positive")
    out = codes(source, partition, source.position, horizon)
    source.position += horizon
    return SymbolStream(len(partition), out)


def preimage(m: IntervalMap, s: IntervalSet) -> IntervalSet:
    """Exact ``T^{-1}(s)``: the union over branches of affine preimages clipped to each domain."""
    pieces = []
    for br in m.branches:
        lo_img, hi_img = br(br.lo), br(br.hi)
        for a, b in s.intervals:
            if b <= lo_img:
                continue
            if a >= hi_img:
                break
            ua = (a - br.offset) / br.slope
            ub = (b - br.offset) / br.slope
            ua = max(ua, br.lo)
            ub = min(ub, br.hi)
            if ua < ub:
                pieces.append((ua, ub))
    return IntervalSet.from_sorted(pieces)


def measure(s: IntervalSet) -> Fraction:
    return s.measure


@dataclass(frozen=True)
class Cylinder:
    word: tuple[int, ...]
    support: IntervalSet

    @property
    def measure(self) -> Fraction:
        return self.support.measure


@dataclass(frozen=True)
class RefinementTable:
    order: int
    cylinders: tuple[Cylinder, ...]

    def __len__(self) -> int:
        return len(self.cylinders)

    def by_word(self) -> dict[tuple[int, ...], IntervalSet]:
        return {c.word: c.support for c in self.cylinders}

    @cached_property
    def _index(self) -> tuple[list[Fraction], list[tuple]]:
        rows = sorted((a, b, c.word) for c in self.cylinders for a, b in c.support)
        return [r[0] for r in rows], rows

    def locate(self, x) -> tuple[int, ...]:
        """Word of the cylinder containing ``x``."""
        starts, rows = self._index
        i = bisect_right(starts, Fraction(x)) - 1
        return rows[i][2]


def refine(m: IntervalMap, partition: Partition, n: int, cap: int = REFINE_CAP) -> RefinementTable:
    """All nonempty cylinders of words of length ``n + 1``.

    The order-``j`` table is built from order ``j - 1`` as
    ``{X_i ∩ T^{-1} C}`` over partition elements ``X_i`` and cylinders ``C``,
    discarding empty intersections, so cost tracks the number of admissible
    words rather than ``M**(n+1)``.
    """
    if n < 0:
        raise DomainError("refinement order must be non-negative")
    if n > cap:
        raise ResourceError(f"refinement order {n} exceeds cap {cap}")
    table = [Cylinder((i,), partition.element_set(i)) for i in range(len(partition))]
    for _ in range(n):
        nxt = []
        pulled = [(c.word, preimage(m, c.support)) for c in table]
        for i in range(len(partition)):
            elem = partition.element_set(i)
            for word, pre in pulled:
                support = elem & pre
                if support:
                    nxt.append(Cylinder((i,) + word, support))
        table = nxt
    return RefinementTable(n, tuple(sorted(table, key=lambda c: c.word)))


def join(first: Sequence[IntervalSet], second: Sequence[IntervalSet]) -> list[IntervalSet]:
    """Common refinement: all nonempty pairwise intersections."""
    out = []
    for a in first:
        for b in second:
            ab = a & b
            if ab:
                out.append(ab)
    return out
