import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasispec.potential import Rational
from quasispec.rationals import IrrationalTarget, RationalInputError, convergents, parse_alpha


def _pairs(cs):
    return [(c.p, c.q) for c in cs]


def test_golden_mean():
    assert _pairs(convergents("golden", 7)) == [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13)]


def test_sqrt2_minus_one():
    assert _pairs(convergents("sqrt2m1", 5)) == [(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)]


def test_near_rational_rejected():
    with mpmath.workprec(256):
        x = mpmath.mpf(1) / 3 + mpmath.mpf("1e-30")
    with pytest.raises(RationalInputError, match="Rational"):
        convergents(x, 40)


def test_exact_rational_rejected():
    with pytest.raises(RationalInputError):
        convergents(Fraction(3, 7), 10)


def test_count_validated():
    with pytest.raises(ValueError):
        convergents("golden", 0)


def test_decimal_string_input():
    assert _pairs(convergents("0.41421356237309504880168872420969807856967187537694", 5)) == \
        [(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)]


def _check_ladder(target: IrrationalTarget):
    assert all(isinstance(c, Rational) for c in target.convergents)
    qs = [c.q for c in target.convergents]
    assert all(b > a for a, b in zip(qs[1:], qs[2:]))
    with mpmath.workprec(target.prec):
        for k, c in enumerate(target.convergents):
            assert math.gcd(c.p, c.q) == 1
            diff = target.value - mpmath.mpf(c.p) / c.q
            assert abs(diff) < mpmath.mpf(1) / c.q ** 2
            if k >= 2:
                a = target.cf_terms[k]
                prev, prev2 = target.convergents[k - 1], target.convergents[k - 2]
                assert c.p == a * prev.p + prev2.p and c.q == a * prev.q + prev2.q
            if k >= 1:
                prev = target.value - mpmath.mpf(target.convergents[k - 1].p) / target.convergents[k - 1].q
                assert diff * prev < 0


@pytest.mark.parametrize("token", ["golden", "sqrt2m1"])
def test_ladder_invariants(token):
    _check_ladder(IrrationalTarget.from_value(token, 30))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=3, max_size=12))
def test_ladder_invariants_random_cf(terms):
    # value with continued fraction [0; terms..., 1, 1, 1, ...]: irrational, known partial quotients
    with mpmath.workprec(512):
        x = (mpmath.sqrt(5) - 1) / 2
        for a in reversed(terms):
            x = 1 / (a + x)
    t = IrrationalTarget.from_value(x, len(terms) + 3)
    assert list(t.cf_terms[1:len(terms) + 1]) == terms
    _check_ladder(t)


def test_large_denominators_exact():
    t = IrrationalTarget.from_value("golden", 46)
    fib = [0, 1]
    while len(fib) < 48:
        fib.append(fib[-1] + fib[-2])
    assert t.convergents[-1].q == fib[46]
    assert t.convergents[-1].q > 10 ** 9


def test_best_convergent():
    t = IrrationalTarget.from_value("golden")
    assert (t.best_convergent(20).p, t.best_convergent(20).q) == (8, 13)
    with pytest.raises(ValueError):
        t.best_convergent(0)
    assert [c.q for c in t.up_to(8)] == [1, 1, 2, 3, 5, 8]


def test_parse_alpha_tokens():
    assert float(parse_alpha("golden")) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-16)
    assert float(parse_alpha(Fraction(1, 4))) == 0.25
