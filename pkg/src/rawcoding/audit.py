"""Coincidence audit of externally produced symbol streams."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .baselines import BernoulliSpec, coincidence_rate
from .coding import SymbolStream
from .coincidence import agreement_stream, first_window, longest_run
from .errors import InputError


@dataclass(frozen=True)
class AuditReport:
    length: int
    L: int
    frequencies: tuple[tuple[float, ...], ...]
    pooled: BernoulliSpec
    agreement_fraction: float
    first_t0: int | None
    max_run: int
    observed_windows: int
    expected_windows: float
    coincidence_rate: Fraction

    @property
    def ratio(self) -> float | None:
        return self.observed_windows / self.expected_windows if self.expected_windows > 0 else None

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "L": self.L,
            "frequencies": [list(f) for f in self.frequencies],
            "pooled_frequencies": [str(p) for p in self.pooled.probabilities],
            "coincidence_rate": float(self.coincidence_rate),
            "agreement_fraction": self.agreement_fraction,
            "first_t0": self.first_t0,
            "max_run": self.max_run,
            "observed_windows": self.observed_windows,
            "expected_windows": self.expected_windows,
            "ratio": self.ratio,
        }


def count_windows(agree: np.ndarray, L: int) -> int:
    """Number of (overlapping) length-``L`` blocks of all-agree positions."""
    if agree.size < L:
        return 0
    c = np.concatenate([[0], np.cumsum(agree, dtype=np.int64)])
    return int(np.count_nonzero(c[L:] - c[:-L] == L))


def audit(streams: Sequence[SymbolStream], L: int) -> AuditReport:
    """Observed coinciding windows versus an independent Bernoulli fit.

    The baseline treats every stream as i.i.d. with the pooled symbol
    frequencies; the expected number of length-``L`` all-agree blocks is then
    ``(H - L + 1) * q**L`` with ``q = sum_i p_i**N``.
    """
    if len(streams) < 2:
        raise InputError("audit needs at least two streams")
    if L < 1:
        raise InputError("L must be positive")
    M = streams[0].alphabet
    H = len(streams[0])
    if H == 0:
        raise InputError("streams are empty")
    agree = agreement_stream(streams)
    freqs = []
    pooled: Counter = Counter()
    for s in streams:
        counts = np.bincount(s.symbols, minlength=M)
        freqs.append(tuple(float(c) / H for c in counts))
        pooled.update(dict(enumerate(counts.tolist())))
    total = H * len(streams)
    spec = BernoulliSpec(tuple(Fraction(pooled[i], total) for i in range(M)))
    q = coincidence_rate(spec, len(streams))
    expected = float(max(H - L + 1, 0) * q ** L)
    return AuditReport(
        length=H,
        L=L,
        frequencies=tuple(freqs),
        pooled=spec,
        agreement_fraction=float(agree.mean()),
        first_t0=first_window(agree, L),
        max_run=longest_run(agree),
        observed_windows=count_windows(agree, L),
        expected_windows=expected,
        coincidence_rate=q,
    )
