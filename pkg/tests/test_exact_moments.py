import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from betajacobi.errors import ParameterError, PoleError
from betajacobi.exact_moments import (
    RationalPoly, as_fraction, duality_check, expand_entry11, expand_trace, expect, expect_limit,
    limit_moment, mean_moment, mean_trace_moment, rate_check,
)
from betajacobi.limit_measure import LimitParams, moments_u
from betajacobi.tridiag import from_bidiagonal_product, power_entry11

fracs = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def test_as_fraction():
    assert as_fraction("3/4") == F(3, 4)
    assert as_fraction(2) == F(2)


def test_low_orders():
    assert expand_entry11(2, 0) == RationalPoly.constant(2, 1)
    m = 3
    p1 = RationalPoly.var(m, "p", 1)
    assert expand_entry11(m, 1) == p1
    q1 = RationalPoly.var(m, "q", 1)
    s1, t1 = p1, q1 * (1 - p1)
    # J(1,1) = s_1 and J(1,2)^2 = s_1 t_1
    assert expand_entry11(m, 2) == s1 * s1 + s1 * t1


def test_structural_size_guard():
    with pytest.raises(ParameterError):
        expand_entry11(3, 4)


@pytest.mark.parametrize("k", range(9))
def test_numeric_substitution_matches_power(k):
    rng = random.Random(k)
    m = k // 2 + 2
    poly = expand_entry11(m, k)
    for _ in range(20):
        p = [F(rng.randint(1, 99), 100) for _ in range(m)]
        q = [F(rng.randint(1, 99), 100) for _ in range(m)]
        val = float(poly.evaluate(p, q))
        s = [float(p[i] * (1 - (q[i - 1] if i else 0))) for i in range(m)]
        t = [float(q[i] * (1 - p[i])) for i in range(m - 1)]
        J = from_bidiagonal_product(s, t)
        assert abs(val - power_entry11(J, k)) <= 1e-12


@pytest.mark.parametrize("k", range(9))
def test_degree_bound(k):
    poly = expand_entry11(k // 2 + 2, k)
    assert poly.degree() <= 2 * k
    assert all(c != 0 for c in poly.terms.values())


def test_uniform_in_structural_size():
    for k in range(7):
        base = k // 2 + 2
        a = expand_entry11(base, k)
        b = expand_entry11(base + 2, k)
        val = lambda poly, m: poly.evaluate([F(1, i + 2) for i in range(m)], [F(1, i + 3) for i in range(m)])
        assert val(a, base) == val(b, base + 2)


def test_m1_examples():
    assert mean_moment(1, 4, F(1, 2), 0, 0) == F(1, 2)
    assert mean_moment(0, 7, F(1, 3), 1, 2) == 1


@given(st.integers(2, 20), fracs.filter(lambda x: x > 0), fracs.filter(lambda x: x > -1),
       fracs.filter(lambda x: x > -1))
def test_m1_closed_form(N, kappa, a, b):
    expect_m1 = ((N - 1) * kappa + a + 1) / (2 * (N - 1) * kappa + a + b + 2)
    assert mean_moment(1, N, kappa, a, b) == expect_m1


def test_duality_fixtures():
    r = duality_check(4, 6, F(1, 3), F(1, 2), F(2))
    assert r.equal and r.lhs == F(1197481213, 10105147533)
    r = duality_check(2, 5, F(2), F(1), F(1))
    assert r.equal and r.lhs == F(139, 378)


@given(st.integers(1, 4), fracs, fracs.filter(lambda x: x != 0), fracs, fracs)
def test_duality_random(k, N, kappa, a, b):
    try:
        r = duality_check(k, N, kappa, a, b)
    except PoleError:
        return
    assert r.equal


def test_pole_error_names_factor():
    with pytest.raises(PoleError, match="p_1"):
        mean_moment(1, 2, -1, 0, 0)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_trace_identity(N):
    for k in range(5):
        for pt in [(F(1, 2), F(0), F(0)), (F(3, 7), F(1, 2), F(2))]:
            assert mean_trace_moment(k, N, *pt) == mean_moment(k, N, *pt)


def test_trace_poly_is_not_entry11():
    # the identity holds in expectation only
    assert expand_trace(3, 2) != expand_entry11(3, 2)


@pytest.mark.parametrize("pt", [(1, 0, 0), (2, 1, F(1, 2)), (F(1, 3), 3, 0)])
def test_limit_moments_match_recursion(pt):
    c, a, b = map(F, pt)
    u = moments_u(LimitParams(float(a), float(b), float(c)), 6)
    for k in range(7):
        assert float(limit_moment(k, c, a, b)) == pytest.approx(u[k], rel=1e-13)


def test_rate_symmetric_is_exact():
    rep = rate_check(1, 1, 0, 0, [10, 100, 1000])
    assert all(r.diff == 0 for r in rep.rows) and rep.bounded
    assert all(r.limit == F(1, 2) for r in rep.rows)


@pytest.mark.parametrize("k,pt", [(1, (1, 1, 0)), (2, (1, 0, 0)), (3, (2, F(1, 2), 1))])
def test_rate_is_order_one_over_N(k, pt):
    rep = rate_check(k, *pt, [10, 100, 1000])
    assert rep.bounded
    s = {r.N: r.scaled for r in rep.rows}
    assert 0.5 <= s[100] / s[1000] <= 2
    assert s[1000] > 0


def test_rational_poly_algebra():
    m = 2
    x, y = RationalPoly.var(m, "p", 1), RationalPoly.var(m, "q", 2)
    assert (x + y) * (x - y) == x * x - y * y
    assert (x - x) == RationalPoly.constant(m, 0) and len(x - x) == 0
    assert (2 - x).evaluate([F(1, 2), 0], [0, 0]) == F(3, 2)
