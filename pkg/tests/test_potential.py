import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasispec.potential import (AnalyticPotential, DomainError, Rational, as_fraction,
                                 potential_sequence, potential_table, random_trig_potential,
                                 truncation_degree)


def test_eval_cosine_at_zero():
    assert AnalyticPotential.cosine(1.0).eval(0.0) == pytest.approx(1.0, abs=1e-15)


def test_eval_amo_at_pi():
    assert AnalyticPotential.cosine(2.0).eval(math.pi).real == pytest.approx(-2.0, abs=1e-15)


def test_eval_in_strip():
    # e^{iz} + e^{-iz} at z = -i ln 2 is 2 + 1/2
    v = AnalyticPotential.cosine(2.0).eval(-1j * math.log(2.0))
    assert abs(v - 2.5) < 1e-14


def test_eval_outside_strip_raises():
    f = AnalyticPotential.cosine(2.0, strip_width=0.5)
    with pytest.raises(DomainError):
        f.eval(0.6j)


def test_real_axis_values_are_real():
    f = AnalyticPotential.from_nonnegative({0: 0.3, 1: 0.5 - 0.2j, 3: 0.1j})
    x = np.linspace(0, 2 * math.pi, 64)
    vals = f.eval(x)
    assert np.max(np.abs(vals.imag)) <= 1e-12 * f.l1_norm
    assert np.allclose(vals.real, f.real_values(x), atol=1e-14)


def test_hermitian_round_trip():
    f = AnalyticPotential.from_nonnegative({1: 0.5 - 0.2j, 2: 1.5j})
    for k in (1, 2):
        assert f.coefficient(-k) == f.coefficient(k).conjugate()


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        AnalyticPotential({1: 1.0, -1: 2.0})


def test_declared_degree_enforced():
    with pytest.raises(ValueError):
        AnalyticPotential({2: 1.0, -2: 1.0}, declared_degree=1)


def test_periodicity_on_grid():
    f = random_trig_potential(np.random.default_rng(3), 3)
    x = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    a, b = f.eval(x), f.eval(x + 2 * math.pi)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_sequence_amo_half():
    V = potential_sequence(AnalyticPotential.cosine(2.0), Rational(1, 2), 0.0, 6)
    assert np.array_equal(V, np.array([-2.0, 2.0] * 3))


def test_sequence_zero():
    assert np.all(potential_sequence(AnalyticPotential.zero(), 0.618, 0.3, 10) == 0.0)


def test_sequence_amo_third():
    V = potential_sequence(AnalyticPotential.cosine(2.0), Rational(1, 3), 0.0, 3)
    assert np.allclose(V, [-1.0, -1.0, 2.0], atol=1e-14)


def test_sequence_matches_direct_eval():
    f = AnalyticPotential.cosine(3.0)
    V = potential_sequence(f, 0.3, 0.7, 5)
    direct = [3.0 * math.cos(2 * math.pi * 0.3 * n + 0.7) for n in range(1, 6)]
    assert np.allclose(V, direct, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(-50, 50), st.integers(1, 60), st.floats(0, 2 * math.pi))
def test_rational_sequence_bitwise_periodic(p, q, theta):
    pq = Rational(p, q)
    f = AnalyticPotential.from_nonnegative({1: 0.7, 2: 0.2 + 0.1j})
    V = potential_sequence(f, pq, theta, 3 * pq.q + 5000 * pq.q)
    assert np.array_equal(V[: pq.q], V[-pq.q:])


def test_rational_reduces():
    r = Rational(6, -8)
    assert (r.p, r.q) == (-3, 4)
    assert str(r) == "-3/4"
    with pytest.raises(ZeroDivisionError):
        Rational(1, 0)


def test_as_fraction_float_exact():
    assert as_fraction(0.5).denominator == 2


def test_table_rows_match_sequence():
    f = AnalyticPotential.cosine(2.0)
    thetas = np.array([0.0, 0.4, 1.3])
    T = potential_table(f, Rational(2, 7), thetas, 7)
    for i, t in enumerate(thetas):
        assert np.array_equal(T[i], potential_sequence(f, Rational(2, 7), t, 7))


def test_truncation_degree_trig():
    assert truncation_degree(AnalyticPotential.cosine(2.0), 4.0, math.exp(-1)) == 1
    f3 = AnalyticPotential.trig({1: 0.5, 3: 0.25})
    assert truncation_degree(f3, 4.0, math.exp(-1)) == 3


def test_truncation_degree_analytic_tail_below_tolerance():
    eta, R, tol = 0.5, 4.0, math.exp(-1)
    f = AnalyticPotential.from_nonnegative({k: math.exp(-k) for k in range(0, 40)}, strip_width=eta)
    d = truncation_degree(f, R, tol)
    C1 = 2 + R + f.strip_max()

    def bound(deg, n):
        return (C1 + R) ** n * math.exp(-deg * n * eta) / (1 - math.exp(-eta)) * 2

    for n in (1, 2, 5, 10):
        assert bound(d, n) <= tol ** n
    assert bound(d - 1, 1) > tol
    # the actual coefficient tail of f beyond d, summed directly, is far below the bound
    tail = sum(2 * abs(f.coefficient(k)) for k in range(d + 1, 40))
    assert tail <= tol


def test_truncation_degree_bad_strip():
    f = AnalyticPotential.from_nonnegative({1: 0.1}, strip_width=0.0)
    with pytest.raises(ValueError):
        truncation_degree(f, 1.0, 0.5)


def test_spec_round_trip(tmp_path):
    f = AnalyticPotential.trig({0: 0.1, 1: 0.5 - 0.25j, 2: 0.125})
    path = tmp_path / "f.yaml"
    import yaml

    path.write_text(yaml.safe_dump(f.to_spec()))
    g = AnalyticPotential.load(path)
    assert g == f
    assert g.degree == 2


def test_spec_cosine_shorthand():
    assert AnalyticPotential.from_spec({"cosine": 8}) == AnalyticPotential.cosine(8.0)


def test_spec_hermitian_completion():
    f = AnalyticPotential.from_spec({"coeffs": [[1, 0.5, 0.25]]})
    assert f.coefficient(-1) == complex(0.5, -0.25)


def test_strip_max_cosine():
    # max over real t of |2 cos(t - i eta)| is 2 cosh(eta)
    f = AnalyticPotential.cosine(2.0, strip_width=0.7)
    assert f.strip_max() == pytest.approx(2 * math.cosh(0.7), rel=1e-9)
    assert abs(f.eval(-0.7j) - 2 * cmath.cosh(0.7)) < 1e-12
