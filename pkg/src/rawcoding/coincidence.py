"""Time-aligned coinciding code windows among several trajectories.

A window of length ``L`` after ``t0`` means all codes agree at every time
``t0 + 1, ..., t0 + L``; its completion time is ``t_end = t0 + L``.  Time 0
is never part of a window.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .coding import Partition, SymbolStream, codes, parse_partition_spec
from .dynamics import SHIFT, TrajectorySource, dyadic_orbit, make_bridge_map, system
from .errors import DomainError, InputError
from .intervals import IntervalSet
from .rng import SeedSpec


def _as_arrays(streams) -> list[np.ndarray]:
    if len(streams) < 1:
        raise InputError("need at least one stream")
    arrays, alphabets = [], set()
    for s in streams:
        if isinstance(s, SymbolStream):
            alphabets.add(s.alphabet)
            arrays.append(s.symbols)
        else:
            arrays.append(np.asarray(s))
    if len(alphabets) > 1:
        raise InputError(f"streams use different alphabets: {sorted(alphabets)}")
    if len({a.size for a in arrays}) > 1:
        raise InputError("streams have different lengths")
    return arrays


def agreement_stream(streams: Sequence) -> np.ndarray:
    """Boolean array, true where all streams carry the same symbol."""
    arrays = _as_arrays(streams)
    first = arrays[0]
    agree = np.ones(first.size, dtype=bool)
    for other in arrays[1:]:
        agree &= other == first
    return agree


def _runs(agree: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start positions and lengths of maximal all-true blocks."""
    padded = np.concatenate([[0], agree.view(np.int8) if agree.dtype == bool else agree.astype(np.int8), [0]])
    edges = np.flatnonzero(np.diff(padded))
    starts, ends = edges[::2], edges[1::2]
    return starts, ends - starts


def first_window(agree: np.ndarray, L: int) -> int | None:
    """Smallest ``t0`` with ``agree[t0+1 : t0+L+1]`` all true."""
    if L < 1:
        raise DomainError("window length must be positive")
    if agree.size == 0:
        return None
    a = agree.copy()
    a[0] = False
    starts, lengths = _runs(a)
    hit = np.flatnonzero(lengths >= L)
    return int(starts[hit[0]]) - 1 if hit.size else None


def longest_run(agree: np.ndarray) -> int:
    _, lengths = _runs(agree)
    return int(lengths.max()) if lengths.size else 0


def find_window(streams: Sequence, L: int) -> int | None:
    """First ``t0`` such that all streams agree at times ``t0+1 .. t0+L``; None if absent."""
    return first_window(agreement_stream(streams), L)


def max_run(streams: Sequence) -> int:
    """Length of the longest block of consecutive all-agree positions (time 0 included)."""
    return longest_run(agreement_stream(streams))


@dataclass(frozen=True)
class CoincidenceReport:
    horizon: int
    L: int
    t0: int | None
    max_run: int
    agreement_count: int

    @property
    def t_end(self) -> int | None:
        return None if self.t0 is None else self.t0 + self.L

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "L": self.L,
            "found": self.t0 is not None,
            "t0": self.t0,
            "t_end": self.t_end,
            "max_run": self.max_run,
            "agreement_count": self.agreement_count,
        }


def coincidence_report(streams: Sequence, L: int) -> CoincidenceReport:
    agree = agreement_stream(streams)
    return CoincidenceReport(agree.size, L, first_window(agree, L), longest_run(agree), int(agree.sum()))


# -- quadrants ---------------------------------------------------------------

HALF = Fraction(1, 2)


def quadrant_of(points: Sequence) -> tuple[str, ...]:
    """Per coordinate ``"L"`` for [0, 1/2) and ``"R"`` for [1/2, 1)."""
    out = []
    for x in points:
        x = Fraction(x)
        if not 0 <= x < 1:
            raise DomainError(f"{x} is outside [0, 1)")
        out.append("L" if x < HALF else "R")
    return tuple(out)


# -- Monte Carlo hitting experiments ----------------------------------------


@dataclass(frozen=True)
class CoincidenceQuery:
    """One hitting experiment: ``samples`` tuples of ``N`` typical points.

    Sample ``s`` draws trajectory ``i`` from substream ``s * N + i`` of the
    master seed.  ``offset`` replaces independent draws by the tuple
    ``x, x + d, x + 2d, ...`` (mod 1); ``prefixes`` forces the leading binary
    digits of each coordinate (shift-stream systems only).
    """

    N: int
    L: int
    horizon: int
    system: str = "doubling"
    partition: Partition = field(default_factory=lambda: parse_partition_spec("binary"))
    seed: int = 0
    samples: int = 1
    offset: Fraction | None = None
    prefixes: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.N < 2:
            raise DomainError("N must be at least 2")
        if self.L < 1:
            raise DomainError("L must be positive")
        if self.horizon < self.L + 1:
            raise DomainError("horizon must be at least L + 1")
        if self.samples < 1:
            raise DomainError("samples must be positive")
        if self.prefixes is not None and len(self.prefixes) != self.N:
            raise DomainError("need one prefix per trajectory")

    def sources(self, sample: int) -> list[TrajectorySource]:
        m = system(self.system)
        base = self.N * sample
        if self.offset is not None:
            if m.backend == SHIFT:
                raise DomainError("offset tuples are not dyadic; use a rotation or rational backend")
            first = TrajectorySource.seeded(m, SeedSpec(self.seed, base), self.horizon)
            return [TrajectorySource(m, (first.x0 + i * Fraction(self.offset)) % 1) for i in range(self.N)]
        prefixes = self.prefixes or ((),) * self.N
        return [TrajectorySource.seeded(m, SeedSpec(self.seed, base + i), self.horizon, prefixes[i])
                for i in range(self.N)]


def lazy_first_window(sources: Sequence[TrajectorySource], partition: Partition, L: int,
                      horizon: int, first_chunk: int = 256) -> int | None:
    """``find_window`` over codes generated in growing chunks, stopping at the first hit."""
    n = min(horizon, max(first_chunk, 2 * L + 2))
    while True:
        agree = agreement_stream([codes(src, partition, 0, n) for src in sources])
        t0 = first_window(agree, L)
        if t0 is not None or n >= horizon:
            return t0
        n = min(horizon, 4 * n)


def log2_bin(t: int) -> int:
    return t.bit_length() - 1


@dataclass
class HittingStats:
    """Aggregated outcome of a hitting experiment.

    Counters are integers and ``t_end`` sums are exact, so merging partial
    results is associative and commutative.
    """

    samples: int = 0
    successes: int = 0
    t_end_sum: int = 0
    t_end_counts: Counter = field(default_factory=Counter)

    def add(self, t_end: int | None) -> None:
        self.samples += 1
        if t_end is not None:
            self.successes += 1
            self.t_end_sum += t_end
            self.t_end_counts[t_end] += 1

    def merge(self, other: "HittingStats") -> "HittingStats":
        return HittingStats(self.samples + other.samples, self.successes + other.successes,
                            self.t_end_sum + other.t_end_sum, self.t_end_counts + other.t_end_counts)

    @property
    def success_rate(self) -> Fraction:
        return Fraction(self.successes, self.samples) if self.samples else Fraction(0)

    @property
    def mean_t_end(self) -> Fraction | None:
        return Fraction(self.t_end_sum, self.successes) if self.successes else None

    @property
    def histogram(self) -> list[int]:
        """Counts of ``t_end`` in bins ``[2**j, 2**(j+1))``."""
        if not self.t_end_counts:
            return []
        bins = [0] * (log2_bin(max(self.t_end_counts)) + 1)
        for t, c in self.t_end_counts.items():
            bins[log2_bin(t)] += c
        return bins

    def to_dict(self) -> dict:
        mean = self.mean_t_end
        return {
            "samples": self.samples,
            "successes": self.successes,
            "success_rate": float(self.success_rate),
            "mean_t_end": None if mean is None else float(mean),
            "mean_t_end_exact": None if mean is None else str(mean),
            "histogram_log2": self.histogram,
        }


def _run_chunk(args) -> list[int | None]:
    query, lo, hi = args
    out = []
    for s in range(lo, hi):
        t0 = lazy_first_window(query.sources(s), query.partition, query.L, query.horizon)
        out.append(None if t0 is None else t0 + query.L)
    return out


def _chunks(samples: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(samples / (4 * workers)))
    return [(lo, min(samples, lo + size)) for lo in range(0, samples, size)]


def map_samples(fn, query, workers: int = 1) -> list:
    """Apply ``fn((query, lo, hi))`` over sample ranges and concatenate, in sample order."""
    ranges = _chunks(query.samples, workers)
    jobs = [(query, lo, hi) for lo, hi in ranges]
    if workers <= 1:
        parts = [fn(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, jobs))
    return [r for part in parts for r in part]


def hitting_experiment(query: CoincidenceQuery, workers: int = 1) -> HittingStats:
    """Monte Carlo estimate of the first-window completion time.

    Errors raised for any sample abort the whole experiment.
    """
    stats = HittingStats()
    for t_end in map_samples(_run_chunk, query, workers):
        stats.add(t_end)
    return stats


# -- bridge scenario -----------------------------------------------------------


@dataclass
class BridgeReport:
    k: int
    stats: HittingStats
    quadrant_invariant: bool
    steps_checked: int
    code_mismatches: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            **self.stats.to_dict(),
            "quadrant_invariant": self.quadrant_invariant,
            "quadrant_steps_checked": self.steps_checked,
            "code_mismatches": self.code_mismatches,
        }


def _bridge_chunk(args):
    """Hitting time plus an exact-iteration audit of each orbit pair up to it."""
    query, lo, hi = args
    exact = make_bridge_map()
    cut_ints = None
    out = []
    for s in range(lo, hi):
        sources = query.sources(s)
        t0 = lazy_first_window(sources, query.partition, query.L, query.horizon)
        t_end = None if t0 is None else t0 + query.L
        steps = query.horizon if t_end is None else t_end + 1
        ok, mismatches = True, 0
        for src in sources:
            B = src.bits
            if cut_ints is None:
                cut_ints = [int(c * (1 << B)) for c in query.partition.cuts]
            half = 1 << (B - 1)
            orbit = dyadic_orbit(exact, src.integer(), B, steps)
            left = orbit[0] < half
            ok &= all((X < half) == left for X in orbit)
            got = codes(src, query.partition, 0, steps)
            want = np.searchsorted(np.array(cut_ints, dtype=object), np.array(orbit, dtype=object), side="right")
            mismatches += int(np.count_nonzero(got != want.astype(np.int64)))
        out.append((t_end, ok, 2 * steps, mismatches))
    return out


def bridge_scenario(k: int, L: int, samples: int, horizon: int, seed: int, workers: int = 1) -> BridgeReport:
    """Pairs with one point in each invariant half, coded through ``bridge:k``.

    Every orbit pair is also iterated exactly (branch by branch) up to its
    window completion, checking that neither point leaves its half and that
    the exact codes match the shift-stream codes.
    """
    from .coding import bridge_partition

    query = CoincidenceQuery(N=2, L=L, horizon=horizon, system="bridge", partition=bridge_partition(k),
                             seed=seed, samples=samples, prefixes=((0,), (1,)))
    stats = HittingStats()
    ok, steps, mismatches = True, 0, 0
    for t_end, good, n, bad in map_samples(_bridge_chunk, query, workers):
        stats.add(t_end)
        ok &= good
        steps += n
        mismatches += bad
    return BridgeReport(k, stats, ok, steps, mismatches)


# -- rotation counterexample ---------------------------------------------------


def agreement_set(partition: Partition, offsets: Sequence) -> IntervalSet:
    """Points ``u`` whose codes at ``u + d`` (mod 1) coincide for all offsets ``d``."""
    out = IntervalSet.empty()
    for i in range(len(partition)):
        common = IntervalSet.unit()
        for d in offsets:
            common = common & partition.element_set(i).translate_mod1(-Fraction(d))
        out = out | common
    return out


def rotation_run_bound(alpha: Fraction, partition: Partition, offset, limit: int = 100_000) -> int:
    """Largest ``L`` with ``⋂_{j<L} (S - j*alpha)`` nonempty, ``S`` the agreement set.

    No pair ``(x, x + offset)`` of rotation orbits can agree for more than
    this many consecutive steps.
    """
    S = agreement_set(partition, [0, offset])
    cur, L = S, 0
    while cur:
        L += 1
        if L > limit:
            raise DomainError(f"run bound exceeds {limit}")
        cur = cur & S.translate_mod1(-L * alpha)
    return L


# -- exact baseline for doubling codes -------------------------------------------


def doubling_oracle(N: int, L: int, K: int, horizon: int | None = None, exact: bool = True):
    """Waiting-time oracle for doubling-map codes through ``dyadic:K``.

    Codes at time ``t`` are binary digits ``t+1 .. t+K`` of the point, so an
    ``L``-window of agreeing symbols after ``t0`` is a run of ``L + K - 1``
    agreeing digits occupying digit positions ``t0 + 2 .. t0 + L + K``.  With
    ``N`` independent uniform points each digit position agrees with
    probability ``2**(1 - N)``.  Returns ``(distribution, shift)`` where the
    distribution counts digit trials from position 2 on and
    ``t_end = trials + shift``.
    """
    from .baselines import run_waiting

    if K < 1:
        raise DomainError("need K >= 1")
    q = Fraction(1, 2 ** (N - 1))
    trials = (horizon - 1 if horizon is not None else 0) + K - 1
    return run_waiting(q, L + K - 1, max(trials, 1), exact=exact), 1 - K


def doubling_oracle_mean(N: int, L: int, K: int = 1) -> Fraction:
    from .baselines import mean_run_completion

    return mean_run_completion(Fraction(1, 2 ** (N - 1)), L + K - 1) + 1 - K
