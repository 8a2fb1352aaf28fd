"""Computable mixing diagnostics: correlation terms, Cesàro sums, Ulam matrices."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import beta

from .baselines import PrimitivityVerdict, StochasticMatrix, is_primitive, scc_labels
from .coding import Partition, _table_at, preimage
from .dynamics import GUARD_BITS, ROTATION, SHIFT, IntervalMap, TrajectorySource, eval_map
from .errors import DomainError, ResourceError
from .intervals import IntervalSet
from .rng import SeedSpec, raw_words, words_to_bits

#: Largest iterated preimage (in intervals) the exact mode will build.
EXACT_INTERVAL_CAP = 1 << 20


def _pull_back(m: IntervalMap, A: IntervalSet, cap: int):
    """Yield ``T^{-k} A`` for k = 0, 1, 2, ..."""
    cur = A
    while True:
        if len(cur) > cap:
            raise ResourceError(f"iterated preimage has {len(cur)} intervals (cap {cap})")
        yield cur
        cur = preimage(m, cur)


class StepDensity:
    """Piecewise-constant function on [0, 1) as sorted ``(a, b, value)`` pieces (zero elsewhere)."""

    __slots__ = ("pieces",)

    def __init__(self, pieces):
        self.pieces: tuple[tuple[Fraction, Fraction, Fraction], ...] = tuple(pieces)

    @classmethod
    def indicator(cls, s: IntervalSet) -> "StepDensity":
        return cls((a, b, Fraction(1)) for a, b in s)

    def __len__(self) -> int:
        return len(self.pieces)

    def integral(self, s: IntervalSet) -> Fraction:
        total = Fraction(0)
        for a, b, v in self.pieces:
            total += v * (IntervalSet([(a, b)], _trusted=True) & s).measure
        return total


def _sweep(pieces) -> StepDensity:
    events: dict[Fraction, Fraction] = {}
    for a, b, v in pieces:
        events[a] = events.get(a, 0) + v
        events[b] = events.get(b, 0) - v
    out: list[tuple[Fraction, Fraction, Fraction]] = []
    level = Fraction(0)
    xs = sorted(events)
    for x, nxt in zip(xs, xs[1:]):
        level += events[x]
        if level == 0:
            continue
        if out and out[-1][1] == x and out[-1][2] == level:
            out[-1] = (out[-1][0], nxt, level)
        else:
            out.append((x, nxt, level))
    return StepDensity(out)


def transfer(m: IntervalMap, f: StepDensity) -> StepDensity:
    """Transfer (Perron-Frobenius) operator: ``(P f)(y) = sum over preimages x of f(x) / T'(x)``.

    Step functions map to step functions whose breakpoints are images of the
    old breakpoints and branch endpoints, so the piece count stays bounded
    for these maps instead of growing like the iterated preimage of a set.
    """
    pieces = []
    for br in m.branches:
        for a, b, v in f.pieces:
            lo, hi = max(a, br.lo), min(b, br.hi)
            if lo < hi:
                pieces.append((br(lo), br(hi), v / br.slope))
    return _sweep(pieces)


def _push_forward(m: IntervalMap, B: IntervalSet, cap: int):
    """Yield ``P^k 1_B`` for k = 0, 1, 2, ..."""
    f = StepDensity.indicator(B)
    while True:
        if len(f) > cap:
            raise ResourceError(f"transferred density has {len(f)} pieces (cap {cap})")
        yield f
        f = transfer(m, f)


def correlation_exact(m: IntervalMap, A: IntervalSet, B: IntervalSet, k: int,
                      cap: int = EXACT_INTERVAL_CAP, method: str = "transfer") -> Fraction:
    """Exact ``μ(T^{-k} A ∩ B)``.

    ``method="transfer"`` evaluates ``∫_A P^k 1_B``; ``method="preimage"``
    builds ``T^{-k} A`` as an interval set and intersects it with ``B``.
    """
    if k < 0:
        raise DomainError("k must be non-negative")
    if method == "preimage":
        for j, pulled in enumerate(_pull_back(m, A, cap)):
            if j == k:
                return (pulled & B).measure
    if method != "transfer":
        raise DomainError(f"unknown method {method!r}")
    for j, f in enumerate(_push_forward(m, B, cap)):
        if j == k:
            return f.integral(A)


@dataclass(frozen=True)
class Estimate:
    value: float
    low: float
    high: float
    hits: int
    samples: int

    def __contains__(self, x) -> bool:
        return self.low <= x <= self.high


def clopper_pearson(hits: int, n: int, level: float = 0.99) -> tuple[float, float]:
    a = (1 - level) / 2
    low = 0.0 if hits == 0 else float(beta.ppf(a, hits, n - hits + 1))
    high = 1.0 if hits == n else float(beta.ppf(1 - a, hits + 1, n - hits))
    return low, high


def _sample_codes(m: IntervalMap, part: Partition, k: int, samples: int, seed: SeedSpec):
    """Symbols at times 0 and ``k`` for ``samples`` uniform dyadic points.

    Point ``s`` is built from 64-bit words ``s*w .. (s+1)*w - 1`` of the
    substream, with ``w`` words chosen so the orbit stays exact up to ``k``.
    """
    p = m.shift_prefix or 0
    w = -(-(k + p + GUARD_BITS) // 64)
    W = 64 * w
    words = raw_words(seed, samples * w)
    if m.backend == SHIFT and part.dyadic_resolution is not None:
        K = max(part.dyadic_resolution, p)
        bits = words_to_bits(words).reshape(samples, W).astype(np.int64)
        table = _table_at(part, K)

        def at(t):
            idx = np.zeros(samples, dtype=np.int64)
            for j in range(p):
                idx |= bits[:, j] << (K - 1 - j)
            for j in range(K - p):
                idx |= bits[:, p + t + j] << (K - p - 1 - j)
            return table[idx]

        return at(0), at(k)
    c0 = np.empty(samples, dtype=np.int64)
    ck = np.empty(samples, dtype=np.int64)
    den = 1 << W
    for s in range(samples):
        X = 0
        for word in words[s * w:(s + 1) * w].tolist():
            X = (X << 64) | word
        x = Fraction(X, den)
        c0[s] = part.locate(x)
        if m.backend == ROTATION:
            xk = (x + k * m.alpha) % 1
        elif m.backend == SHIFT:
            xk = TrajectorySource(m, x, bits=W).points(k, 1)[0]
        else:
            xk = x
            for _ in range(k):
                xk = eval_map(m, xk)
        ck[s] = part.locate(xk)
    return c0, ck


def correlation_mc(m: IntervalMap, A: IntervalSet, B: IntervalSet, k: int, samples: int,
                   seed: SeedSpec, level: float = 0.99) -> Estimate:
    """Fraction of uniform points ``x`` with ``x ∈ B`` and ``T^k x ∈ A``, with an exact binomial CI.

    Membership is decided by coding each orbit through the partition
    generated by the endpoints of ``A`` and ``B``.
    """
    if k < 0:
        raise DomainError("k must be non-negative")
    if not A or not B:
        return Estimate(0.0, 0.0, 0.0, 0, samples)
    cuts = sorted({a for iv in (A, B) for pair in iv for a in pair} - {Fraction(0), Fraction(1)})
    part = Partition.from_cuts(cuts)
    in_A = np.array([part.elements[i][0] in A for i in range(len(part))])
    in_B = np.array([part.elements[i][0] in B for i in range(len(part))])
    c0, ck = _sample_codes(m, part, k, samples, seed)
    hits = int(np.count_nonzero(in_B[c0] & in_A[ck]))
    low, high = clopper_pearson(hits, samples, level)
    return Estimate(hits / samples, low, high, hits, samples)


@dataclass(frozen=True)
class MixingSeries:
    """Terms ``|μ(T^{-k}A ∩ B) - μ(A)μ(B)|`` for k < n and their running means ``W_1..W_n``."""

    A: IntervalSet
    B: IntervalSet
    terms: tuple
    mode: str

    @property
    def cesaro(self) -> list:
        out, acc = [], 0
        for n, t in enumerate(self.terms, start=1):
            acc += t
            out.append(acc / n)
        return out

    def rows(self):
        """``(k, term, W_{k+1})`` triples."""
        return [(k, t, w) for k, (t, w) in enumerate(zip(self.terms, self.cesaro))]


def weak_mixing_series(m: IntervalMap, A: IntervalSet, B: IntervalSet, n: int, mode: str = "exact",
                       samples: int = 100_000, seed: SeedSpec = SeedSpec(0),
                       cap: int = EXACT_INTERVAL_CAP) -> MixingSeries:
    """Cesàro series of decorrelation terms.

    Exact terms use the transfer operator (see :func:`correlation_exact`).
    ``auto`` runs exactly until the transferred density hits the piece cap,
    then switches to Monte Carlo point estimates for the remaining ``k``.
    """
    if mode not in ("exact", "monte-carlo", "auto"):
        raise DomainError(f"unknown mode {mode!r}")
    product = A.measure * B.measure
    terms: list = []
    used = mode
    if mode in ("exact", "auto"):
        try:
            for k, f in enumerate(_push_forward(m, B, cap)):
                if k == n:
                    break
                terms.append(abs(f.integral(A) - product))
        except ResourceError:
            if mode == "exact":
                raise
            used = "auto"
    for k in range(len(terms), n):
        est = correlation_mc(m, A, B, k, samples, seed.substream(k))
        terms.append(abs(est.value - float(product)))
        used = "monte-carlo" if mode == "monte-carlo" else "auto"
    return MixingSeries(A, B, tuple(terms), used)


# -- Ulam matrices ----------------------------------------------------------------


@dataclass(frozen=True)
class UlamModel:
    bins: Partition
    matrix: StochasticMatrix


def ulam_matrix(m: IntervalMap, bins: Partition) -> UlamModel:
    """``P_ij = m(B_i ∩ T^{-1} B_j) / m(B_i)`` computed exactly."""
    pulled = [preimage(m, bins.element_set(j)) for j in range(len(bins))]
    rows = []
    for i in range(len(bins)):
        Bi = bins.element_set(i)
        rows.append([(Bi & pj).measure / Bi.measure for pj in pulled])
    return UlamModel(bins, StochasticMatrix(rows))


@dataclass(frozen=True)
class BlockReport:
    scc_count: int
    components: tuple[tuple[int, ...], ...]
    closed: tuple[int, ...]
    verdict: PrimitivityVerdict
    closed_supports: tuple[IntervalSet, ...]

    @property
    def connected(self) -> bool:
        return self.scc_count == 1

    def to_dict(self) -> dict:
        return {
            "scc_count": self.scc_count,
            "closed_sccs": len(self.closed),
            "components": [list(c) for c in self.components],
            "closed_components": [list(self.components[c]) for c in self.closed],
            "closed_supports": [[[str(a), str(b)] for a, b in s] for s in self.closed_supports],
            "primitive": self.verdict.primitive,
            "kappa_or_period": self.verdict.kappa_or_period,
        }


def ergodic_block_report(model: UlamModel) -> BlockReport:
    """Communicating classes of the Ulam chain; closed classes are candidate ergodic components."""
    support = model.matrix.support()
    n, labels = scc_labels(support)
    comps: list[list[int]] = [[] for _ in range(n)]
    for i, lab in enumerate(labels):
        comps[lab].append(i)
    comps.sort()
    closed = []
    for ci, comp in enumerate(comps):
        members = set(comp)
        if all(j in members for i in comp for j in np.flatnonzero(support[i])):
            closed.append(ci)
    supports = tuple(
        IntervalSet([model.bins.elements[i] for i in comps[ci]]) for ci in closed
    )
    return BlockReport(n, tuple(map(tuple, comps)), tuple(closed), is_primitive(model.matrix), supports)
