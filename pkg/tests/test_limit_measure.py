import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import solve_continuous_lyapunov

from betajacobi.errors import ParameterError
from betajacobi.limit_measure import (
    LimitCoefficients, LimitParams, gamma_n, jacobi_matrix_nu, jacobi_matrix_nu_star, moments_u,
    moments_u_exact, nu_star_moments, sigma2_tilde_P, sigma_matrix, z_star,
)
from betajacobi.tridiag import power_entry11, power_moments

GRID = [LimitParams(a, b, c) for a, b, c in
        itertools.product((-0.4, 0, 1, 3), (-0.4, 0, 1, 3), (0.1, 1, 10))]

params_st = st.builds(LimitParams, st.floats(-0.99, 10), st.floats(-0.99, 10), st.floats(0.01, 20))


def test_symmetric_point_moments():
    u = moments_u(LimitParams(0, 0, 1), 3)
    assert u[0] == 1
    assert u[1] == pytest.approx(0.5, abs=1e-16)
    assert u[2] == pytest.approx(0.35, abs=1e-16)
    assert u[3] == pytest.approx(0.275, abs=1e-16)


def test_exact_moments_by_hand():
    u = moments_u_exact(LimitParams(0, 0, 1), 3)
    assert u == [1, Fraction(1, 2), Fraction(7, 20), Fraction(11, 40)]


def test_z_star_values():
    p = LimitParams(0, 0, 1)
    assert z_star(p) == pytest.approx(0.15, abs=1e-16)
    co = LimitCoefficients(p)
    assert co.hat_lambda0 == 0.5 and co.mu(1) == pytest.approx(0.2, abs=1e-16)


@pytest.mark.parametrize("p", GRID)
def test_recursion_matches_spectral_route(p):
    u = moments_u(p, 20)
    spectral = power_moments(jacobi_matrix_nu(p), 20)
    assert np.abs(u - spectral).max() <= 1e-12


@pytest.mark.parametrize("p", GRID)
def test_first_difference_is_z_star(p):
    u = moments_u(p, 2)
    assert abs((u[1] - u[2]) - z_star(p)) <= 1e-14


def test_z_star_decreases_in_a():
    vals = [z_star(LimitParams(a, 0.5, 1.0)) for a in (0, 5, 50)]
    assert vals[0] > vals[1] > vals[2] > 0


@given(params_st)
def test_moment_sequence_shape(p):
    u = moments_u(p, 12)
    assert u[0] == 1
    assert np.all((u[1:] > 0) & (u[1:] < 1))
    assert np.all(np.diff(u[1:]) < 0)


@given(params_st, st.integers(1, 30))
def test_coefficients_in_unit_interval(p, n):
    co = LimitCoefficients(p)
    for v in (co.hat_lambda0, co.lam(n), co.mu(n), co.lam_star(n - 1), co.mu_star(n - 1)):
        assert 0 < v < 1


def _minors_positive(H):
    n = len(H)
    M = [row[:] for row in H]
    for i in range(n):  # exact Gaussian elimination: pivots are ratios of leading minors
        if M[i][i] <= 0:
            return False
        for r in range(i + 1, n):
            f = M[r][i] / M[i][i]
            for c in range(i, n):
                M[r][c] -= f * M[i][c]
    return True


@pytest.mark.parametrize("p", [LimitParams(0, 0, 1), LimitParams(-0.4, 3, 0.1), LimitParams(2, 0.5, 10)])
def test_hankel_positivity(p):
    u = moments_u_exact(p, 12)
    H = [[u[i + j] for j in range(6)] for i in range(6)]
    K = [[u[i + j + 1] - u[i + j + 2] for j in range(6)] for i in range(6)]
    assert _minors_positive(H) and _minors_positive(K)


@pytest.mark.parametrize("p", GRID[::5])
def test_dual_measure_moments(p):
    dual = power_moments(jacobi_matrix_nu_star(p), 15)
    assert np.abs(dual - nu_star_moments(p, 15)).max() <= 1e-12


def test_gamma_values():
    p = LimitParams(0, 0, 1)
    assert [gamma_n(p, n) for n in range(3)] == [4, 10, 18]


def test_sigma_examples():
    p = LimitParams(0, 0, 1)
    assert sigma_matrix(p, 1)[0, 0] == pytest.approx(0.0375, abs=1e-16)
    assert sigma2_tilde_P(p, 0) == pytest.approx(0.0375, abs=1e-16)
    assert sigma2_tilde_P(p, 1) == pytest.approx(0.015, abs=1e-16)


@pytest.mark.parametrize("p", GRID)
def test_sigma11_identity(p):
    s = sigma_matrix(p, 3)
    assert abs(s[0, 0] - z_star(p) / (2 * p.c + p.a + p.b + 2)) <= 1e-14
    assert abs(s[0, 0] - sigma2_tilde_P(p, 0)) <= 1e-14


def lyapunov_sigma(p, M):
    """Stationary covariance of the linearised moment fluctuations.

    The generator acts on x^k by k (a+k) x^{k-1} - k (a+b+k+1) x^k plus the
    interaction terms; fluctuations of <., x^k> obey dX = A X dt + dM with
    d<M_k, M_l> = 2kl (u_{k+l-1} - u_{k+l}) dt.
    """
    a, b, c = p.a, p.b, p.c
    u = moments_u(p, 2 * M + 1)
    A = np.zeros((M + 1, M + 1))  # index 0 is the constant (no fluctuation)
    for k in range(1, M + 1):
        A[k, k - 1] += k * (a + 1) + k * (k - 1)
        A[k, k] -= k * (a + b + 2) + k * (k - 1)
        # 2c int int (h(x)-h(y))/(x-y) with h = x(1-x) k x^{k-1}; linearise the product measure
        h = np.zeros(k + 2)
        h[k] += k
        h[k + 1] -= k
        for j in range(1, h.size):
            for i in range(j):
                A[k, i] += c * h[j] * u[j - 1 - i]
                A[k, j - 1 - i] += c * h[j] * u[i]
        # the self-interaction correction (c/N) is O(1/N) and drops out
    A = A[1:, 1:]
    Q = np.array([[2 * k * l * (u[k + l - 1] - u[k + l]) for l in range(1, M + 1)]
                  for k in range(1, M + 1)])
    return solve_continuous_lyapunov(A, -Q)


@pytest.mark.parametrize("p", [LimitParams(0, 0, 1), LimitParams(1, 0.5, 2), LimitParams(-0.4, 3, 0.1),
                               LimitParams(3, -0.4, 10)])
def test_sigma_matches_lyapunov_oracle(p):
    S = sigma_matrix(p, 5)
    L = lyapunov_sigma(p, 5)
    assert np.abs(S - L).max() <= 1e-12 * max(1.0, np.abs(L).max())


@given(params_st)
def test_sigma_symmetric_psd(p):
    S = sigma_matrix(p, 4)
    assert np.abs(S - S.T).max() <= 1e-10
    assert np.linalg.eigvalsh(S).min() >= -1e-10


def test_param_validation():
    with pytest.raises(ParameterError):
        LimitParams(-1, 0, 1)
    with pytest.raises(ParameterError):
        LimitParams(0, 0, 0)
    with pytest.raises(ParameterError):
        moments_u(LimitParams(0, 0, 1), -1)
    with pytest.raises(ParameterError):
        sigma_matrix(LimitParams(0, 0, 1), 0)


def test_rule_matrix_is_infinite():
    J = jacobi_matrix_nu(LimitParams(0, 0, 1))
    assert not J.is_finite
    assert power_entry11(J, 3) == pytest.approx(0.275, abs=1e-15)
