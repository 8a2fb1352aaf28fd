"""Exact stochastic baselines: Bernoulli and Markov symbol sources,
coincidence rates, run waiting times and primitivity of stochastic matrices."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .coding import SymbolStream
from .errors import DomainError, InputError
from .rng import SeedSpec, raw_words

_TWO64 = 1 << 64


def _fractions(values) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


@dataclass(frozen=True)
class BernoulliSpec:
    probabilities: tuple[Fraction, ...]

    def __post_init__(self):
        p = _fractions(self.probabilities)
        if not p:
            raise InputError("need at least one probability")
        if any(x < 0 for x in p) or sum(p) != 1:
            raise InputError(f"probabilities must be non-negative and sum to 1, got {[str(x) for x in p]}")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def fair(cls, M: int = 2) -> "BernoulliSpec":
        return cls((Fraction(1, M),) * M)

    @property
    def alphabet(self) -> int:
        return len(self.probabilities)


class StochasticMatrix:
    """Row-stochastic matrix with exact rational entries."""

    def __init__(self, rows: Sequence[Sequence]):
        self.rows: tuple[tuple[Fraction, ...], ...] = tuple(_fractions(r) for r in rows)
        M = len(self.rows)
        if M == 0:
            raise InputError("empty matrix")
        for i, r in enumerate(self.rows):
            if len(r) != M:
                raise InputError(f"row {i} has {len(r)} entries, expected {M}")
            if any(x < 0 for x in r):
                raise InputError(f"row {i} has a negative entry")
            if sum(r) != 1:
                raise InputError(f"row {i} sums to {sum(r)}, not 1")

    @classmethod
    def identity(cls, M: int) -> "StochasticMatrix":
        return cls([[int(i == j) for j in range(M)] for i in range(M)])

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, StochasticMatrix) and self.rows == other.rows

    def __repr__(self) -> str:
        return f"StochasticMatrix({[[str(x) for x in r] for r in self.rows]})"

    def support(self) -> np.ndarray:
        return np.array([[x > 0 for x in r] for r in self.rows], dtype=bool)

    def is_doubly_stochastic(self) -> bool:
        return all(sum(self.rows[i][j] for i in range(self.size)) == 1 for j in range(self.size))

    def stationary(self) -> tuple[Fraction, ...]:
        """Exact stationary vector ``v P = v`` (unique for irreducible chains)."""
        M = self.size
        # (P^T - I) v = 0 with the last equation replaced by sum(v) = 1
        A = [[self.rows[j][i] - (1 if i == j else 0) for j in range(M)] for i in range(M)]
        A[-1] = [Fraction(1)] * M
        b = [Fraction(0)] * (M - 1) + [Fraction(1)]
        return tuple(solve_exact(A, b))


def solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    n = len(A)
    M = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise DomainError("singular system")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


@dataclass(frozen=True)
class MarkovChainSpec:
    matrix: StochasticMatrix
    initial: tuple[Fraction, ...]

    def __post_init__(self):
        init = _fractions(self.initial)
        if len(init) != self.matrix.size or any(x < 0 for x in init) or sum(init) != 1:
            raise InputError("initial distribution must be a probability vector matching the matrix size")
        object.__setattr__(self, "initial", init)


# -- formulas ------------------------------------------------------------------


def window_match_probability(spec: BernoulliSpec, word: Sequence[int]) -> Fraction:
    """Probability that a realization reproduces ``word`` on a fixed time window."""
    p = spec.probabilities
    out = Fraction(1)
    for s in word:
        if not 0 <= s < len(p):
            raise DomainError(f"symbol {s} outside alphabet of size {len(p)}")
        out *= p[s]
    return out


def coincidence_rate(spec: BernoulliSpec, N: int) -> Fraction:
    """Probability that ``N`` independent draws all coincide: ``sum_i p_i**N``."""
    if N < 2:
        raise DomainError("N must be at least 2")
    return sum((p ** N for p in spec.probabilities), Fraction(0))


@dataclass(frozen=True)
class RunWaitingDistribution:
    """Distribution of the trial index completing the first run of ``L`` successes.

    ``pmf[t]`` is ``P(t_end = t)`` for ``t = 0 .. horizon`` (zero below ``L``);
    the missing mass is the probability of no run within ``horizon`` trials.
    """

    q: Fraction
    L: int
    horizon: int
    pmf: tuple
    mean: Fraction

    @property
    def deficit(self):
        return 1 - sum(self.pmf)

    def closed_form_mean(self) -> Fraction:
        return mean_run_completion(self.q, self.L)

    def cdf(self, t: int):
        return sum(self.pmf[: t + 1])


def mean_run_completion(q: Fraction, L: int) -> Fraction:
    """``(1 - q**L) / ((1 - q) * q**L)``."""
    q = Fraction(q)
    return (1 - q ** L) / ((1 - q) * q ** L)


def _streak_chain(q: Fraction, L: int) -> list[list[Fraction]]:
    """Transient block ``Q`` of the streak chain on states 0..L-1 (state L absorbs)."""
    Q = [[Fraction(0)] * L for _ in range(L)]
    for s in range(L):
        Q[s][0] += 1 - q
        if s + 1 < L:
            Q[s][s + 1] += q
    return Q


def run_waiting(q, L: int, horizon: int, exact: bool = True) -> RunWaitingDistribution:
    """First completion time of a length-``L`` success run in i.i.d. trials.

    The distribution comes from propagating the state vector of the
    ``L + 1``-state streak chain; the mean from solving ``(I - Q) m = 1`` for
    the transient block ``Q``.  Neither uses the closed-form mean.
    """
    q = Fraction(q)
    if not 0 < q < 1:
        raise DomainError("success probability must lie strictly between 0 and 1")
    if L < 1:
        raise DomainError("L must be positive")
    Q = _streak_chain(q, L)
    A = [[(1 if i == j else 0) - Q[i][j] for j in range(L)] for i in range(L)]
    mean = solve_exact(A, [Fraction(1)] * L)[0]

    if exact:
        state = [Fraction(0)] * L
        zero = Fraction(0)
        qq, miss = q, 1 - q
    else:
        state = [0.0] * L
        zero = 0.0
        qq, miss = float(q), float(1 - q)
    state[0] = 1 if exact else 1.0
    pmf = [zero] * (horizon + 1)
    for t in range(1, horizon + 1):
        pmf[t] = state[L - 1] * qq
        new = [zero] * L
        new[0] = sum(state) * miss
        for s in range(L - 1):
            new[s + 1] = state[s] * qq
        state = new
    return RunWaitingDistribution(q, L, horizon, tuple(pmf), mean)


# -- sampled symbol sources ---------------------------------------------------


def _thresholds(probabilities: Sequence[Fraction]) -> np.ndarray:
    """Integer CDF cut points ``floor(cdf_i * 2**64)`` below ``2**64``.

    A 64-bit draw ``u`` maps to the number of cut points ``<= u``, which
    realizes each symbol with probability within ``2**-64`` of its target.
    """
    cuts, acc = [], Fraction(0)
    for p in probabilities[:-1]:
        acc += p
        c = math.floor(acc * _TWO64)
        if c >= _TWO64:
            break
        cuts.append(c)
    return np.array(cuts, dtype=np.uint64)


def bernoulli_stream(spec: BernoulliSpec, seed: SeedSpec, length: int) -> SymbolStream:
    cuts = _thresholds(spec.probabilities)
    u = raw_words(seed, length)
    return SymbolStream(spec.alphabet, np.searchsorted(cuts, u, side="right"))


def markov_stream(spec: MarkovChainSpec, seed: SeedSpec, length: int) -> SymbolStream:
    """First draw from the initial law, then one 64-bit draw per transition."""
    u = raw_words(seed, length).tolist()
    init = _thresholds(spec.initial).tolist()
    rows = [_thresholds(r).tolist() for r in spec.matrix.rows]
    out = np.empty(length, dtype=np.int64)
    if length:
        s = bisect_right(init, u[0])
        out[0] = s
        for t in range(1, length):
            s = bisect_right(rows[s], u[t])
            out[t] = s
    return SymbolStream(spec.matrix.size, out)


# -- primitivity --------------------------------------------------------------


@dataclass(frozen=True)
class PrimitivityVerdict:
    primitive: bool
    kappa: int | None
    scc_count: int
    period: int | None

    @property
    def kappa_or_period(self) -> int | None:
        return self.kappa if self.primitive else self.period


def period_of(support: np.ndarray) -> int:
    """gcd of cycle lengths of an irreducible support digraph (BFS level trick)."""
    M = support.shape[0]
    level = [-1] * M
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(support[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    g = 0
    for u, v in zip(*np.nonzero(support)):
        g = math.gcd(g, level[u] + 1 - level[v])
    return g


def scc_labels(support: np.ndarray) -> tuple[int, np.ndarray]:
    n, labels = connected_components(support.astype(np.int8), directed=True, connection="strong")
    return int(n), labels


def is_primitive(matrix: StochasticMatrix) -> PrimitivityVerdict:
    """Primitive iff irreducible and aperiodic; then report the least ``kappa`` with ``P**kappa > 0``.

    The power search stops at Wielandt's bound ``(M - 1)**2 + 1``.
    """
    support = matrix.support()
    M = matrix.size
    n, _ = scc_labels(support)
    if n != 1:
        return PrimitivityVerdict(False, None, n, None)
    period = period_of(support)
    if period != 1:
        return PrimitivityVerdict(False, None, 1, period)
    A = support.astype(np.int64)
    power = A.copy()
    for kappa in range(1, (M - 1) ** 2 + 2):
        if power.all():
            return PrimitivityVerdict(True, kappa, 1, 1)
        power = np.minimum(power @ A, 1)
    return PrimitivityVerdict(False, None, 1, period)
