import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from rawcoding.baselines import (
    BernoulliSpec,
    MarkovChainSpec,
    StochasticMatrix,
    bernoulli_stream,
    coincidence_rate,
    is_primitive,
    markov_stream,
    mean_run_completion,
    run_waiting,
    window_match_probability,
)
from rawcoding.coincidence import log2_bin
from rawcoding.errors import DomainError, InputError
from rawcoding.rng import SeedSpec

F = Fraction


def brute_force_run_pmf(q, L, n):
    """P(first L-run completes at trial t), t <= n, by enumerating all outcome strings."""
    pmf = [F(0)] * (n + 1)
    for outcome in itertools.product((0, 1), repeat=n):
        w = F(1)
        for o in outcome:
            w *= q if o else 1 - q
        streak = 0
        for t, o in enumerate(outcome, start=1):
            streak = streak + 1 if o else 0
            if streak == L:
                pmf[t] += w
                break
    return pmf


class TestWindowMatch:
    def test_worked_example(self):
        spec = BernoulliSpec((F(3, 10), F(7, 10)))
        assert window_match_probability(spec, [0, 1, 0, 1, 1]) == F(3087, 100000)

    def test_fair(self):
        assert window_match_probability(BernoulliSpec.fair(), [1, 0, 1, 1, 0, 0, 1]) == F(1, 128)

    def test_zero_probability_symbol(self):
        assert window_match_probability(BernoulliSpec((1, 0)), [0, 0, 1]) == 0

    def test_bad_symbol(self):
        with pytest.raises(DomainError):
            window_match_probability(BernoulliSpec.fair(), [2])

    def test_spec_validation(self):
        with pytest.raises(InputError):
            BernoulliSpec((F(1, 2), F(1, 3)))
        with pytest.raises(InputError):
            BernoulliSpec((F(3, 2), F(-1, 2)))


class TestCoincidenceRate:
    @pytest.mark.parametrize("N,expected", [(2, F(1, 2)), (3, F(1, 4))])
    def test_fair_binary(self, N, expected):
        assert coincidence_rate(BernoulliSpec.fair(), N) == expected

    def test_degenerate(self):
        assert coincidence_rate(BernoulliSpec((1, 0)), 5) == 1

    def test_needs_two(self):
        with pytest.raises(DomainError):
            coincidence_rate(BernoulliSpec.fair(), 1)


class TestRunWaiting:
    @pytest.mark.parametrize("q", [F(1, 2), F(1, 4), F(1, 8)])
    @pytest.mark.parametrize("L", range(1, 9))
    def test_chain_mean_equals_closed_form(self, q, L):
        assert run_waiting(q, L, 1).mean == mean_run_completion(q, L)

    def test_known_means(self):
        assert run_waiting(F(1, 2), 4, 10).mean == 30
        assert run_waiting(F(1, 4), 6, 10).mean == 5460

    def test_geometric_for_L1(self):
        q = F(1, 3)
        d = run_waiting(q, 1, 20)
        assert d.mean == 3
        assert all(d.pmf[t] == (1 - q) ** (t - 1) * q for t in range(1, 21))

    @pytest.mark.parametrize("q,L", [(F(1, 2), 3), (F(1, 4), 2), (F(2, 3), 4)])
    def test_pmf_matches_enumeration(self, q, L):
        n = 12
        d = run_waiting(q, L, n)
        assert list(d.pmf) == brute_force_run_pmf(q, L, n)
        assert d.deficit == 1 - sum(brute_force_run_pmf(q, L, n))

    def test_float_mode_close_to_exact(self):
        exact = run_waiting(F(1, 2), 4, 200)
        approx = run_waiting(F(1, 2), 4, 200, exact=False)
        assert max(abs(float(a) - b) for a, b in zip(exact.pmf, approx.pmf)) < 1e-15

    @pytest.mark.parametrize("q", [0, 1])
    def test_degenerate_q(self, q):
        with pytest.raises(DomainError):
            run_waiting(q, 3, 10)


class TestStreams:
    def test_all_zero(self):
        s = bernoulli_stream(BernoulliSpec((1, 0)), SeedSpec(1), 1000)
        assert not s.symbols.any()

    def test_fair_frequency(self):
        s = bernoulli_stream(BernoulliSpec.fair(), SeedSpec(2), 10 ** 6)
        # 4 sigma = 4 * 0.5 / 1000 = 0.002
        assert abs(np.mean(s.symbols == 0) - 0.5) <= 0.002

    def test_deterministic(self):
        spec = BernoulliSpec((F(1, 3), F(1, 3), F(1, 3)))
        assert bernoulli_stream(spec, SeedSpec(3), 500) == bernoulli_stream(spec, SeedSpec(3), 500)

    def test_skewed_frequencies(self):
        spec = BernoulliSpec((F(1, 10), 0, F(9, 10)))
        s = bernoulli_stream(spec, SeedSpec(4), 200_000)
        counts = np.bincount(s.symbols, minlength=3) / 200_000
        assert counts[1] == 0
        assert abs(counts[0] - 0.1) < 4 * math.sqrt(0.09 / 200_000)

    def test_markov_identity_is_constant(self):
        spec = MarkovChainSpec(StochasticMatrix.identity(3), (1, 0, 0))
        assert set(markov_stream(spec, SeedSpec(5), 1000).tolist()) == {0}

    def test_markov_stationary_frequencies(self):
        P = StochasticMatrix([[F(1, 2), F(1, 4), F(1, 4)],
                              [F(1, 3), 0, F(2, 3)],
                              [F(1, 5), F(3, 5), F(1, 5)]])
        pi = P.stationary()
        assert sum(pi) == 1
        assert all(sum(pi[i] * P[i, j] for i in range(3)) == pi[j] for j in range(3))
        n = 10 ** 6
        s = markov_stream(MarkovChainSpec(P, pi), SeedSpec(6), n)
        freq = np.bincount(s.symbols, minlength=3) / n
        # binomial band widened by the variance inflation (1+|l2|)/(1-|l2|) ~ 3.4 < 4, l2 = -0.5448
        for j in range(3):
            p = float(pi[j])
            assert abs(freq[j] - p) <= 4 * math.sqrt(4 * p * (1 - p) / n)

    def test_bernoulli_windows_always_found(self):
        spec = BernoulliSpec.fair()
        for word in ([0, 1, 1, 0], [1, 1, 1, 1, 0]):
            H = math.ceil(100 / window_match_probability(spec, word))
            reps = 10_000
            s = bernoulli_stream(spec, SeedSpec(7, len(word)), reps * H).symbols.reshape(reps, H)
            hit = np.ones((reps, H - len(word) + 1), dtype=bool)
            for j, w in enumerate(word):
                hit &= s[:, j:H - len(word) + 1 + j] == w
            assert hit.any(axis=1).mean() >= 0.999


class TestPrimitivity:
    def test_positive(self):
        v = is_primitive(StochasticMatrix([[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]]))
        assert v.primitive and v.kappa == 1

    def test_identity(self):
        v = is_primitive(StochasticMatrix.identity(2))
        assert not v.primitive and v.scc_count == 2

    def test_flip(self):
        v = is_primitive(StochasticMatrix([[0, 1], [1, 0]]))
        assert not v.primitive and v.scc_count == 1 and v.period == 2

    def test_three_cycle_period(self):
        v = is_primitive(StochasticMatrix([[0, 1, 0], [0, 0, 1], [1, 0, 0]]))
        assert v.period == 3

    @pytest.mark.parametrize("M", [3, 4, 5])
    def test_wielandt_matrix_attains_bound(self, M):
        """Cycle 0->1->...->M-1->0 plus the chord M-1 -> 1 needs (M-1)^2 + 1 steps."""
        rows = [[0] * M for _ in range(M)]
        for i in range(M - 1):
            rows[i][i + 1] = 1
        rows[M - 1][0] = rows[M - 1][1] = F(1, 2)
        P = StochasticMatrix(rows)
        # independent oracle: exact rational matrix powers
        A = [list(r) for r in P.rows]
        power, kappa = A, 1
        while not all(x > 0 for r in power for x in r):
            power = [[sum(power[i][k] * A[k][j] for k in range(M)) for j in range(M)] for i in range(M)]
            kappa += 1
        assert kappa == (M - 1) ** 2 + 1
        assert is_primitive(P).kappa == kappa

    def test_positive_matrices_have_kappa_one(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            M = int(rng.integers(2, 6))
            raw = rng.integers(1, 10, size=(M, M))
            P = StochasticMatrix([[F(int(x), int(r.sum())) for x in r] for r in raw])
            assert is_primitive(P).kappa == 1

    def test_matrix_validation(self):
        with pytest.raises(InputError):
            StochasticMatrix([[F(1, 2), F(1, 3)], [1, 0]])


@pytest.mark.slow
def test_empirical_histogram_matches_oracle(doubling_pair_stats):
    """Total variation over log2 bins between MC t_end and the exact oracle."""
    stats = doubling_pair_stats
    oracle = run_waiting(F(1, 2), 4, 10_000 - 1, exact=False)
    bins = max(len(stats.histogram), log2_bin(len(oracle.pmf) - 1) + 1)
    want = np.zeros(bins)
    for t, p in enumerate(oracle.pmf):
        if t:
            want[log2_bin(t)] += p
    got = np.zeros(bins)
    got[: len(stats.histogram)] = np.array(stats.histogram) / stats.samples
    assert 0.5 * np.abs(got - want).sum() <= 0.02
