from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from rawcoding.intervals import IntervalSet

GRID = 64


def _sets(max_pieces=5):
    pair = st.tuples(st.integers(0, GRID), st.integers(0, GRID))
    return st.lists(pair, max_size=max_pieces).map(
        lambda ps: IntervalSet([(Fraction(a, GRID), Fraction(b, GRID)) for a, b in ps])
    )


def _cells(s):
    """Brute-force membership on the midpoints of a 1/(2*GRID) lattice."""
    return {i for i in range(2 * GRID) if Fraction(2 * i + 1, 4 * GRID) in s}


def test_measure_examples():
    s = IntervalSet([(0, Fraction(1, 2)), (Fraction(3, 4), 1)])
    assert s.measure == Fraction(3, 4)
    assert IntervalSet.empty().measure == 0


def test_adjacent_intervals_merge():
    h = Fraction(1, 2)
    assert IntervalSet([(0, h), (h, 1)]) == IntervalSet.unit()
    assert len(IntervalSet([(0, h), (h, 1)])) == 1


def test_half_open_membership():
    s = IntervalSet.interval(Fraction(1, 4), Fraction(1, 2))
    assert Fraction(1, 4) in s
    assert Fraction(1, 2) not in s


def test_translate_wraps():
    s = IntervalSet.interval(Fraction(1, 2), Fraction(7, 8))
    assert s.translate_mod1(Fraction(1, 4)) == IntervalSet([(0, Fraction(1, 8)), (Fraction(3, 4), 1)])


@settings(max_examples=200)
@given(_sets(), _sets())
def test_boolean_ops_match_brute_force(a, b):
    assert _cells(a | b) == _cells(a) | _cells(b)
    assert _cells(a & b) == _cells(a) & _cells(b)
    assert _cells(a - b) == _cells(a) - _cells(b)
    assert _cells(a.complement()) == set(range(2 * GRID)) - _cells(a)


@given(_sets())
def test_measure_matches_lattice_count(a):
    assert a.measure == Fraction(len(_cells(a)), 2 * GRID)


@given(_sets(), st.integers(0, GRID))
def test_translation_preserves_measure(a, k):
    assert a.translate_mod1(Fraction(k, GRID)).measure == a.measure
