import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import Polynomial

from betajacobi.errors import ParameterError
from betajacobi.limit_measure import LimitCoefficients, LimitParams, gamma_n, sigma2_tilde_P, z_star
from betajacobi.orthopoly import (
    DEGREE_CAP, L_transform, alpha_tilde_sq, check_eigen_relation, coefficient_matrix,
    diagonalization_check, gram_matrix, norm_sq_exact, norm_sq_product, normalize,
    orthonormal_primitives, orthonormal_sequence, p_sequence, p_sequence_exact, primitive,
    q_by_divided_difference, q_sequence,
)

SYM = LimitParams(0, 0, 1)
POINTS = [SYM, LimitParams(1, 0.5, 2), LimitParams(-0.4, 3, 0.1), LimitParams(3, -0.4, 10)]
GRID = [LimitParams(a, b, c) for a, b, c in
        itertools.product((-0.4, 0, 1, 3), (-0.4, 0, 1, 3), (0.1, 1, 10))]


def test_first_polynomials():
    ps = p_sequence(SYM, 3)
    assert ps[0] == Polynomial([1.0])
    assert np.allclose(ps[1].coef, [-0.5, 1.0], atol=1e-16)
    assert all(p.degree() == n and p.coef[-1] == 1.0 for n, p in enumerate(ps))


def test_a_star_by_hand():
    co = LimitCoefficients(SYM)
    assert co.lam_star(0) == pytest.approx(0.3, abs=1e-16)
    assert co.mu_star(0) == pytest.approx(0.2, abs=1e-16)


def test_float_and_exact_sequences_agree():
    fl = p_sequence(POINTS[1], 8)
    ex = p_sequence_exact(POINTS[1], 8)
    for p, q in zip(fl, ex):
        assert np.allclose(p.coef, [float(v) for v in q], rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("p", POINTS)
def test_gram_identity(p):
    G = gram_matrix(p, 8)
    assert np.abs(G - np.eye(9)).max() <= 1e-9


@pytest.mark.parametrize("p", POINTS)
def test_norm_product_formula(p):
    for n in range(9):
        assert float(norm_sq_exact(p, n)) == pytest.approx(norm_sq_product(p, n), rel=1e-10)


def test_normalize_examples():
    p0, n0 = normalize(Polynomial([1.0]), SYM)
    assert n0 == 1.0 and p0 == Polynomial([1.0])
    co = LimitCoefficients(SYM)
    _, n1 = normalize(p_sequence(SYM, 1)[1], SYM)
    assert n1 == pytest.approx(co.lam_star(1) * co.mu_star(0), rel=1e-15)


def test_normalize_rejects_wrong_polynomial():
    from betajacobi.errors import ConsistencyError

    with pytest.raises(ConsistencyError):
        normalize(Polynomial([-0.4, 1.0]), SYM)


@pytest.mark.parametrize("p", POINTS)
def test_alpha_tilde_equals_twice_z_star(p):
    for n in range(9):
        assert alpha_tilde_sq(p, n) == pytest.approx(2 * z_star(p), rel=1e-10)


def test_q_initial_terms():
    qs = q_sequence(SYM, 3)
    co = LimitCoefficients(SYM)
    assert qs[0] == Polynomial([0.0]) and qs[1] == Polynomial([1.0])
    assert np.allclose(qs[2].coef, [-co.a_star(2), 1.0], atol=1e-16)


@pytest.mark.parametrize("p", POINTS)
def test_q_matches_divided_difference(p):
    qs = q_sequence(p, 6)
    for n in range(1, 7):
        dd = q_by_divided_difference(p, n)
        assert np.allclose(qs[n].coef, dd.coef, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("p", POINTS)
def test_three_term_relation_orthonormal(p):
    co = LimitCoefficients(p)
    pt = orthonormal_sequence(p, 7)
    for n in range(1, 7):
        lhs = co.b_star(n + 1) * pt[n + 1]
        rhs = Polynomial([0, 1.0]) * pt[n] - co.a_star(n + 1) * pt[n] - co.b_star(n) * pt[n - 1]
        scale = np.abs(rhs.coef).max()
        diff = (lhs - rhs).coef
        assert np.abs(diff).max() <= 1e-10 * scale


def test_primitive_convention():
    for P, p in zip(orthonormal_primitives(POINTS[2], 6), orthonormal_sequence(POINTS[2], 6)):
        assert P(0.0) == 0.0
        assert np.array_equal(P.deriv().coef, p.coef)


def test_L_of_constant():
    for p in POINTS:
        L = L_transform(Polynomial([1.0]), p)
        g0 = gamma_n(p, 0)
        assert L.degree() == 1
        assert L.coef[1] == pytest.approx(-g0, rel=1e-14)


def test_L_p1_symmetric():
    p1 = p_sequence(SYM, 1)[1]
    res = L_transform(p1, SYM) + 10 * primitive(p1)
    assert np.abs(res.coef[1:]).max(initial=0.0) <= 1e-10


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8),
       st.lists(st.floats(-3, 3), min_size=1, max_size=8),
       st.floats(-2, 2), st.floats(-2, 2))
def test_L_linear(pc, qc, al, be):
    P, Q = Polynomial(pc), Polynomial(qc)
    lhs = L_transform(al * P + be * Q, POINTS[1])
    rhs = al * L_transform(P, POINTS[1]) + be * L_transform(Q, POINTS[1])
    n = max(lhs.coef.size, rhs.coef.size)
    d = np.pad(lhs.coef, (0, n - lhs.coef.size)) - np.pad(rhs.coef, (0, n - rhs.coef.size))
    assert np.abs(d).max() <= 1e-12 * max(1.0, np.abs(rhs.coef).max())


def test_check_eigen_relation_symmetric():
    rows = check_eigen_relation(SYM, 10)
    assert [r.gamma_n for r in rows[:3]] == [4, 10, 18]
    assert rows[0].residual <= 1e-15
    assert all(r.passed and r.residual <= 1e-9 for r in rows)
    assert set(rows[0].as_dict()) >= {"n", "gamma_n", "residual", "norm_sq", "alpha_tilde_sq"}


@pytest.mark.parametrize("p", GRID)
def test_check_eigen_relation_grid(p):
    assert all(r.passed for r in check_eigen_relation(p, 10, oracles=False))


@pytest.mark.parametrize("p", POINTS)
def test_diagonalization(p):
    rep = diagonalization_check(p, 4)
    assert rep.passed
    assert rep.max_offdiag <= 1e-8
    assert np.allclose(np.diag(rep.product), [sigma2_tilde_P(p, n) for n in range(4)], atol=1e-8)
    C = coefficient_matrix(p, 4)
    assert np.all(np.triu(C, 1) == 0)


def test_degree_cap():
    with pytest.raises(ParameterError):
        p_sequence(SYM, DEGREE_CAP + 1)
    with pytest.raises(ParameterError):
        check_eigen_relation(SYM, DEGREE_CAP)
