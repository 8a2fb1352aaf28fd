import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rawcoding.coding import binary_partition, bridge_partition, codes, dyadic_partition
from rawcoding.coincidence import (
    CoincidenceQuery,
    agreement_set,
    agreement_stream,
    bridge_scenario,
    coincidence_report,
    doubling_oracle_mean,
    find_window,
    hitting_experiment,
    lazy_first_window,
    max_run,
    quadrant_of,
    rotation_run_bound,
)
from rawcoding.dynamics import SHIFT, TrajectorySource, make_bridge_map, make_doubling, make_rotation, system
from rawcoding.errors import DomainError, InputError
from rawcoding.intervals import IntervalSet
from rawcoding.rng import SeedSpec

F = Fraction
S1 = (0, 1, 1, 0, 1, 0, 0)
S2 = (1, 1, 1, 0, 1, 1, 0)


def brute_find_window(streams, L):
    H = len(streams[0])
    for t0 in range(H):
        if t0 + L >= H:
            return None
        if all(len({s[t] for s in streams}) == 1 for t in range(t0 + 1, t0 + L + 1)):
            return t0
    return None


def brute_max_run(streams):
    best = cur = 0
    for col in zip(*streams):
        cur = cur + 1 if len(set(col)) == 1 else 0
        best = max(best, cur)
    return best


class TestAgreement:
    def test_examples(self):
        assert agreement_stream([(0, 1, 1, 0), (1, 1, 1, 0)]).tolist() == [False, True, True, True]
        assert agreement_stream([(0, 1), (0, 1), (1, 1)]).tolist() == [False, True]
        assert agreement_stream([(2, 0, 1)] * 3).all()

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            agreement_stream([(0, 1), (0,)])


class TestFindWindow:
    def test_example(self):
        assert find_window([S1, S2], 3) == 0

    def test_identical(self):
        assert find_window([S1, S1], 6) == 0

    def test_disjoint_constants(self):
        assert find_window([(0,) * 20, (1,) * 20], 1) is None

    def test_window_never_uses_time_zero(self):
        assert find_window([(0, 0, 1), (0, 0, 0)], 2) is None
        assert max_run([(0, 0, 1), (0, 0, 0)]) == 2

    def test_max_run_examples(self):
        assert max_run([S1, S2]) == 4
        assert max_run([(0,) * 5, (1,) * 5]) == 0
        assert max_run([S1, S1]) == len(S1)

    def test_exhaustive_against_brute_force(self):
        for n in range(1, 9):
            for a in itertools.product((0, 1), repeat=n):
                for b in itertools.product((0, 1), repeat=n):
                    for L in range(1, 5):
                        assert find_window([a, b], L) == brute_find_window([a, b], L)

    @settings(max_examples=300)
    @given(st.integers(2, 4).flatmap(lambda N: st.lists(
        st.lists(st.integers(0, 2), min_size=12, max_size=12), min_size=N, max_size=N)), st.integers(1, 6))
    def test_properties(self, streams, L):
        rep = coincidence_report(streams, L)
        assert rep.t0 == brute_find_window(streams, L)
        assert rep.max_run == brute_max_run(streams)
        # consistency, with time 0 excluded from windows
        agree = agreement_stream(streams)
        tail_run = max_run([s[1:] for s in streams])
        assert (rep.t0 is not None) == (tail_run >= L)
        if rep.t0 is not None:
            assert agree[rep.t0 + 1: rep.t0 + L + 1].all()
            assert rep.t0 == 0 or not agree[rep.t0: rep.t0 + L].all()
        # permutation invariance
        for perm in itertools.permutations(streams):
            assert coincidence_report(list(perm), L) == rep
        # monotonicity in L
        longer = find_window(streams, L + 1)
        if rep.t0 is not None and longer is not None:
            assert longer >= rep.t0


class TestQuadrant:
    def test_examples(self):
        assert quadrant_of((F(1, 5), F(7, 10))) == ("L", "R")
        assert quadrant_of((F(1, 2),)) == ("R",)
        assert quadrant_of((F(1, 10),) * 3) == ("L", "L", "L")

    def test_invariant_under_bridge_map(self, bridge):
        for i in range(200):
            pts = [TrajectorySource.seeded(bridge, SeedSpec(12, 2 * i + j), 60).x0 for j in range(2)]
            q0 = quadrant_of(pts)
            for _ in range(60):
                pts = [bridge(x) for x in pts]
                assert quadrant_of(pts) == q0


class TestHitting:
    def test_identical_tuple_hits_at_zero(self, binary):
        m = system("doubling")
        for i in range(20):
            srcs = [TrajectorySource.seeded(m, SeedSpec(3, i), 1000) for _ in range(3)]
            assert lazy_first_window(srcs, binary, 8, 1000) == 0

    def test_lazy_matches_full_horizon(self, binary):
        m = system("doubling")
        for i in range(50):
            srcs = [TrajectorySource.seeded(m, SeedSpec(4, 2 * i + j), 5000) for j in range(2)]
            full = find_window([codes(s, binary, 0, 5000) for s in srcs], 7)
            assert lazy_first_window(srcs, binary, 7, 5000) == full

    def test_bridge_pair_near_fixed_point(self):
        k, L = 2, 4
        bridge = make_bridge_map()
        part = bridge_partition(k)
        d = F(1, 2 ** (k + L + 1))
        srcs = [TrajectorySource(bridge, F(1, 2) - d), TrajectorySource(bridge, F(1, 2) + d)]
        streams = [codes(s, part, 0, L + 1) for s in srcs]
        assert find_window(streams, L) == 0
        # exact iteration: both orbits stay inside the bridge element for L steps
        for s in srcs:
            assert all(part.locate(x) == part.locate(F(1, 2)) for x in s.points(0, L + 1))

    def test_query_validation(self):
        with pytest.raises(DomainError):
            CoincidenceQuery(N=1, L=2, horizon=10)
        with pytest.raises(DomainError):
            CoincidenceQuery(N=2, L=10, horizon=10)

    def test_worker_count_does_not_change_result(self):
        q = CoincidenceQuery(N=2, L=5, horizon=2000, seed=3, samples=200)
        assert hitting_experiment(q, workers=1) == hitting_experiment(q, workers=3)

    def test_histogram_mass(self):
        st_ = hitting_experiment(CoincidenceQuery(N=2, L=12, horizon=3000, seed=1, samples=300))
        assert sum(st_.histogram) == st_.successes
        assert 0 <= st_.success_rate <= 1
        assert st_.successes < st_.samples  # mean 8190 > horizon, so some misses

    def test_dyadic_partition_oracle(self):
        """Codes through dyadic:2 overlap in digits; the shifted run oracle still applies."""
        q = CoincidenceQuery(N=2, L=4, horizon=10_000, partition=dyadic_partition(2), seed=21, samples=20_000)
        mean = float(hitting_experiment(q).mean_t_end)
        assert doubling_oracle_mean(2, 4, 2) == 61
        # sd of t_end is about 60, so the standard error is ~0.42
        assert abs(mean - 61) < 4 * 0.45


class TestBridgeScenario:
    def test_small_run(self):
        rep = bridge_scenario(k=2, L=4, samples=50, horizon=20_000, seed=5)
        assert rep.quadrant_invariant
        assert rep.code_mismatches == 0
        assert rep.stats.success_rate == 1

    def test_rate_matches_exact_baseline(self):
        # left orbit in [1/4,1/2) and right orbit in [1/2,3/4) each need one digit: q = 1/4
        rep = bridge_scenario(k=2, L=4, samples=400, horizon=50_000, seed=6)
        from rawcoding.baselines import mean_run_completion

        assert mean_run_completion(F(1, 4), 4) == 340
        assert abs(float(rep.stats.mean_t_end) - 340) < 4 * 340 / 20


class TestRotationBound:
    def test_agreement_set_for_two_fifths(self, binary):
        assert agreement_set(binary, [0, F(2, 5)]) == IntervalSet([(0, F(1, 10)), (F(1, 2), F(3, 5))])

    def test_bound_against_brute_force(self, rotation, binary):
        """L* from arc intersection equals the longest run over a fine grid of starting points."""
        for d in (F(2, 5), F(1, 10), F(1, 50)):
            L_star = rotation_run_bound(rotation.alpha, binary, d)
            S = agreement_set(binary, [0, d])
            best = 0
            for i in range(20_000):
                u = F(i, 20_000)
                run = 0
                while run <= L_star + 1 and (u + run * rotation.alpha) % 1 in S:
                    run += 1
                best = max(best, run)
            assert best == L_star

    def test_runs_never_exceed_bound(self, rotation, binary):
        d = F(1, 50)
        L_star = rotation_run_bound(rotation.alpha, binary, d)
        for i in range(10):
            x = TrajectorySource.seeded(rotation, SeedSpec(2, i), 1).x0
            srcs = [TrajectorySource(rotation, x), TrajectorySource(rotation, (x + d) % 1)]
            assert max_run([codes(s, binary, 0, 100_000) for s in srcs]) <= L_star
