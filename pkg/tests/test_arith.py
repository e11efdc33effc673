import math
from fractions import Fraction

from hypothesis import given, strategies as st

from loglaw import arith


def test_golden_convergents_are_fibonacci():
    cv = arith.convergents([1] * 10)
    assert [q for _, q in cv] == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_continued_fraction_round_trip():
    x = Fraction(355, 113)
    cf = arith.continued_fraction_of(x)
    assert cf == [7, 16]
    assert arith.continued_fraction_value(cf, 3) == x


def test_liouville_quotients_stop_past_the_denominator_limit():
    a = arith.liouville_quotients()
    assert a[:4] == [1, 4, 27, 256]
    qs = [q for _, q in arith.convergents(a)]
    assert qs[-2] <= arith.Q_LIMIT < qs[-1]


def test_u64_round_trip():
    for x in (0.0, 0.25, 0.5, 0.999):
        assert arith.from_u64(arith.to_u64(x)) == x


def _brute_first_entry(alpha, theta, center, radius, n_max):
    a = arith.to_u64(alpha)
    u = arith.to_u64(theta)
    for n in range(n_max):
        x = arith.from_u64((u + n * a) % 2**64)
        d = abs(x - center) % 1.0
        if min(d, 1 - d) < radius:
            return n
    return None


@given(st.floats(0.01, 0.99), st.floats(0, 0.999), st.floats(0, 0.999), st.floats(0.002, 0.2))
def test_rotation_first_entry_matches_enumeration(alpha, theta, center, radius):
    n = arith.rotation_first_entry(arith.to_u64(alpha), arith.to_u64(theta), center, radius)
    brute = _brute_first_entry(alpha, theta, center, radius, 20_000)
    if brute is not None:
        assert n == brute
    else:
        assert n is None or n >= 20_000


def test_quarter_rotation_hits_half_after_two_steps():
    assert arith.rotation_first_entry(arith.to_u64(0.25), 0, 0.5, 0.1) == 2


def test_golden_phase_is_exact():
    g = arith.golden_u64()
    assert abs(g / 2**64 - (math.sqrt(5) - 1) / 2) < 1e-16
