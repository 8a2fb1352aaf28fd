"""Piecewise-affine interval maps and their exact trajectories.

Three trajectory backends are provided:

``rational-iteration``
    Step-by-step evaluation of the branch formulas on exact rationals.
``shift-stream``
    For maps acting on binary expansions by keeping the first ``p`` bits and
    deleting bit ``p + 1`` (the doubling map has ``p = 0``, the bridge map
    ``p = 1``).  Orbits are read directly off a lazily generated bit string, so
    codes over dyadic partitions cost O(1) per step.
``rotation-closed-form``
    ``x_t = x_0 + t * alpha (mod 1)`` with a rational ``alpha``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, PrecisionError
from .rng import BitStream, SeedSpec

RATIONAL = "rational-iteration"
SHIFT = "shift-stream"
ROTATION = "rotation-closed-form"
BACKENDS = (RATIONAL, SHIFT, ROTATION)

#: Extra fractional bits a dyadic initial point must carry beyond the horizon.
GUARD_BITS = 64


@dataclass(frozen=True)
class Branch:
    lo: Fraction
    hi: Fraction
    slope: Fraction
    offset: Fraction

    def __call__(self, x: Fraction) -> Fraction:
        return self.slope * x + self.offset


@dataclass(frozen=True)
class IntervalMap:
    """A piecewise-affine self-map of [0, 1) with rational coefficients.

    Branch domains must tile [0, 1) in order and every branch must map its
    domain into [0, 1).  Only increasing branches are accepted, which keeps
    images and preimages of half-open intervals half-open.
    """

    name: str
    branches: tuple[Branch, ...]
    backend: str = RATIONAL
    shift_prefix: int | None = None
    alpha: Fraction | None = None
    _starts: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if not self.branches:
            raise ValueError("a map needs at least one branch")
        cursor = Fraction(0)
        for br in self.branches:
            if br.lo != cursor or br.hi <= br.lo:
                raise ValueError(f"branch domains must tile [0,1) in order; bad branch {br}")
            if br.slope <= 0:
                raise ValueError("only increasing affine branches are supported")
            if br(br.lo) < 0 or br(br.hi) > 1:
                raise ValueError(f"branch {br} does not map into [0,1)")
            cursor = br.hi
        if cursor != 1:
            raise ValueError("branch domains must cover [0,1)")
        if self.backend == SHIFT and self.shift_prefix is None:
            raise ValueError("shift-stream backend requires a map with shift structure")
        if self.backend == ROTATION and self.alpha is None:
            raise ValueError("rotation-closed-form backend requires a rotation")
        object.__setattr__(self, "_starts", tuple(br.lo for br in self.branches))

    def branch_at(self, x: Fraction) -> Branch:
        return self.branches[bisect_right(self._starts, x) - 1]

    def with_backend(self, backend: str) -> "IntervalMap":
        return IntervalMap(self.name, self.branches, backend, self.shift_prefix, self.alpha)

    def __call__(self, x) -> Fraction:
        return eval_map(self, x)


def _branch(lo, hi, slope, offset) -> Branch:
    return Branch(Fraction(lo), Fraction(hi), Fraction(slope), Fraction(offset))


def eval_map(m: IntervalMap, x) -> Fraction:
    x = Fraction(x)
    if not 0 <= x < 1:
        raise DomainError(f"x = {x} is outside [0, 1)")
    return m.branch_at(x)(x)


def make_doubling(backend: str = RATIONAL) -> IntervalMap:
    """``x -> 2x mod 1``."""
    half = Fraction(1, 2)
    return IntervalMap(
        "doubling",
        (_branch(0, half, 2, 0), _branch(half, 1, 2, -1)),
        backend,
        shift_prefix=0,
    )


def make_bridge_map(backend: str = RATIONAL) -> IntervalMap:
    """The nonergodic map doubling each half of [0, 1) onto itself.

    ``2x`` on [0, 1/4), ``2x - 1/2`` on [1/4, 3/4), ``2x - 1`` on [3/4, 1).
    Both [0, 1/2) and [1/2, 1) are invariant; 1/2 is a repelling fixed point.
    """
    q = Fraction(1, 4)
    return IntervalMap(
        "bridge",
        (_branch(0, q, 2, 0), _branch(q, 3 * q, 2, Fraction(-1, 2)), _branch(3 * q, 1, 2, -1)),
        backend,
        shift_prefix=1,
    )


def golden_convergent(precision_bits: int) -> Fraction:
    """First continued-fraction convergent of (sqrt(5) - 1)/2 with denominator >= 2**precision_bits.

    The expansion is [0; 1, 1, 1, ...], so the convergents are ratios of
    consecutive Fibonacci numbers.
    """
    a, b = 1, 1  # F_1, F_2
    while b < (1 << precision_bits):
        a, b = b, a + b
    return Fraction(a, b)


def make_rotation(precision_bits: int = 64) -> IntervalMap:
    """Circle rotation by a rational stand-in for the golden mean.

    The rotation number is periodic with period equal to its denominator,
    which is at least ``2**precision_bits``; every supported horizon is far
    below that.
    """
    if precision_bits < 64:
        raise DomainError("precision_bits must be at least 64")
    alpha = golden_convergent(precision_bits)
    cut = 1 - alpha
    return IntervalMap(
        "rotation",
        (_branch(0, cut, 1, alpha), _branch(cut, 1, 1, alpha - 1)),
        ROTATION,
        alpha=alpha,
    )


SYSTEMS = {
    "doubling": lambda: make_doubling(SHIFT),
    "bridge": lambda: make_bridge_map(SHIFT),
    "rotation": make_rotation,
}


def system(name: str) -> IntervalMap:
    """Builtin system by name, with its default (fastest exact) backend."""
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise DomainError(f"unknown system {name!r}; expected one of {sorted(SYSTEMS)}") from None


def sample_initial(seed: SeedSpec, bits: int) -> Fraction:
    """Dyadic point whose ``bits`` fractional bits are the first outputs of the substream."""
    return Fraction(BitStream(seed).integer(bits), 1 << bits)


def _dyadic_exponent(x: Fraction) -> int | None:
    d = x.denominator
    if d & (d - 1):
        return None
    return d.bit_length() - 1


class TrajectorySource:
    """Cursor over the orbit ``x, Tx, T^2x, ...`` of one initial point.

    Build one with an explicit rational point, or with :meth:`seeded` to get
    a typical point drawn from a seed substream.  For the shift backend the
    point is a dyadic rational carrying ``bits`` fractional bits; the orbit
    is exact for ``bits - GUARD_BITS`` steps and asking for more raises
    :class:`PrecisionError`.
    """

    def __init__(self, map: IntervalMap, x0=None, *, bits: int | None = None,
                 _stream: BitStream | None = None, _prefix: Sequence[int] = ()):
        self.map = map
        self.position = 0
        self._stream = _stream
        self._prefix = np.asarray(_prefix, dtype=np.uint8)
        self._x0 = None if x0 is None else Fraction(x0)
        if self._x0 is not None and not 0 <= self._x0 < 1:
            raise DomainError(f"initial point {self._x0} is outside [0, 1)")
        if map.backend == SHIFT:
            if self._x0 is not None:
                exp = _dyadic_exponent(self._x0)
                if exp is None:
                    raise DomainError("shift-stream backend needs a dyadic initial point")
                bits = exp if bits is None else bits
                if bits < exp:
                    raise PrecisionError(f"{self._x0} needs {exp} bits but only {bits} were declared")
            elif bits is None:
                raise ValueError("seeded shift sources need an explicit bit budget")
        self.bits = bits

    @classmethod
    def seeded(cls, map: IntervalMap, seed: SeedSpec, horizon: int, prefix: Sequence[int] = ()) -> "TrajectorySource":
        """Typical initial point drawn from ``seed``.

        ``prefix`` forces the leading binary digits (e.g. ``(0,)`` samples
        uniformly from [0, 1/2)); the remaining digits come from the seed.
        """
        bits = len(prefix) + horizon + GUARD_BITS
        if map.backend == SHIFT:
            return cls(map, bits=bits, _stream=BitStream(seed), _prefix=prefix)
        if map.backend == ROTATION:
            bits = len(prefix) + GUARD_BITS
        stream = BitStream(seed)
        pre = 0
        for b in prefix:
            pre = 2 * pre + int(b)
        tail = bits - len(prefix)
        x0 = Fraction((pre << tail) | stream.integer(tail), 1 << bits)
        return cls(map, x0)

    @property
    def x0(self) -> Fraction:
        if self._x0 is None:
            self._x0 = Fraction(self.integer(), 1 << self.bits)
        return self._x0

    def binary(self, n: int) -> np.ndarray:
        """First ``n`` binary digits of the initial point (shift backend)."""
        if n > self.bits:
            raise PrecisionError(f"requested {n} bits of a {self.bits}-bit initial point")
        if self._stream is not None:
            k = min(n, self._prefix.size)
            return np.concatenate([self._prefix[:k], self._stream.take(n - k)])
        num = self._x0.numerator << (self.bits - _dyadic_exponent(self._x0))
        raw = np.frombuffer(num.to_bytes((self.bits + 7) // 8, "big"), dtype=np.uint8)
        return np.unpackbits(raw)[(-self.bits) % 8:][:n]

    def integer(self) -> int:
        """The initial point times ``2**bits`` (shift backend)."""
        if self._x0 is not None:
            return self._x0.numerator << (self.bits - _dyadic_exponent(self._x0))
        bits = self.binary(self.bits)
        return int.from_bytes(np.packbits(bits).tobytes(), "big") >> ((-self.bits) % 8)

    def check_horizon(self, start: int, count: int) -> None:
        if self.map.backend == SHIFT and start + count + GUARD_BITS > self.bits:
            raise PrecisionError(
                f"shift-stream source has {self.bits} bits; steps up to {start + count} need "
                f"{start + count + GUARD_BITS}"
            )

    def points(self, start: int, count: int) -> list[Fraction]:
        """Orbit points ``T^t x`` for ``start <= t < start + count``; ignores the cursor."""
        self.check_horizon(start, count)
        backend = self.map.backend
        if backend == SHIFT:
            return _shift_points(self.integer(), self.bits, self.map.shift_prefix, start, count)
        if backend == ROTATION:
            alpha = self.map.alpha
            x0 = self.x0
            return [(x0 + t * alpha) % 1 for t in range(start, start + count)]
        x = self.x0
        for _ in range(start):
            x = eval_map(self.map, x)
        out = []
        for _ in range(count):
            out.append(x)
            x = eval_map(self.map, x)
        return out


def _shift_points(X: int, B: int, p: int, start: int, count: int) -> list[Fraction]:
    width = B - p
    head = (X >> width) << width
    mask = (1 << width) - 1
    rest = X & mask
    den = 1 << B
    return [Fraction(head | ((rest << t) & mask), den) for t in range(start, start + count)]


def iterate(source: TrajectorySource, horizon: int) -> list[Fraction]:
    """The next ``horizon`` orbit points from the cursor; advances the cursor."""
    if horizon < 1:
        raise DomainError("horizon must be positive")
    out = source.points(source.position, horizon)
    source.position += horizon
    return out


def dyadic_orbit(m: IntervalMap, X: int, B: int, steps: int) -> list[int]:
    """Exact orbit of ``X / 2**B`` evaluated branch by branch on integer numerators.

    Valid for maps whose coefficients are dyadic with denominators dividing
    ``2**B``; equivalent to :func:`eval_map` but avoids rational normalization
    on very long numerators.
    """
    scale = 1 << B
    table = []
    for br in m.branches:
        if _dyadic_exponent(br.slope) is None or _dyadic_exponent(br.offset) is None or br.slope.denominator != 1:
            raise DomainError(f"{m.name} has non-dyadic coefficients")
        table.append((br.lo * scale, br.slope.numerator, br.offset * scale))
    starts = [int(lo) if lo.denominator == 1 else math.ceil(lo) for lo, _, _ in table]
    offsets = []
    for _, _, off in table:
        if off.denominator != 1:
            raise DomainError("initial point has too few bits for the map's offsets")
        offsets.append(int(off))
    slopes = [s for _, s, _ in table]
    out = [X]
    for _ in range(steps - 1):
        i = bisect_right(starts, X) - 1
        X = slopes[i] * X + offsets[i]
        out.append(X)
    return out
