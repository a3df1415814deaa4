"""The high-temperature limit measure nu_c and its x(1-x)-reweighted dual.

Neither measure is represented by a density. Both enter only through their
Jacobi matrices and moment sequences, which is all the polynomial
computations downstream need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConsistencyError, ParameterError
from .tridiag import JacobiMatrix

__all__ = [
    "LimitParams",
    "LimitCoefficients",
    "moments_u",
    "moments_u_exact",
    "nu_star_moments",
    "nu_star_moments_exact",
    "z_star",
    "sigma_matrix",
    "sigma2_tilde_P",
    "gamma_n",
    "jacobi_matrix_nu",
    "jacobi_matrix_nu_star",
]


@dataclass(frozen=True)
class LimitParams:
    """Parameters (a, b, c) of the limit; a, b > -1 and c > 0."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > -1 and self.b > -1):
            raise ParameterError(f"need a, b > -1, got a={self.a}, b={self.b}")
        if not self.c > 0:
            raise ParameterError(f"need c > 0, got c={self.c}")


def _abc(params):
    return float(params.a), float(params.b), float(params.c)


def to_fraction(x) -> Fraction:
    """Exact rational for x; floats go through their shortest repr, so 0.1 -> 1/10."""
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return Fraction(repr(float(x)))


def exact_abc(params):
    return to_fraction(params.a), to_fraction(params.b), to_fraction(params.c)


def _unit(name, n, x):
    if not 0.0 < x < 1.0:
        raise ConsistencyError(f"{name}({n}) = {x} lies outside (0, 1)")
    return x


class LimitCoefficients:
    """Coefficient rules of J_c (limit measure) and J*_c (its dual).

    With ``exact=True`` the parameters are converted to :class:`Fraction`
    (exactly, for float inputs) and every rational coefficient stays exact.
    """

    def __init__(self, params, exact: bool = False):
        if exact:
            self.a, self.b, self.c = exact_abc(params)
        else:
            self.a, self.b, self.c = _abc(params)

    @property
    def hat_lambda0(self) -> float:
        a, b, c = self.a, self.b, self.c
        return _unit("hat_lambda", 0, (c + a + 1) / (2 * c + a + b + 2))

    def lam(self, n: int) -> float:
        a, b, c = self.a, self.b, self.c
        s = 2 * n + 2 * c + a + b
        return _unit("lambda", n, (n + c + a + 1) / (s + 2) * (n + c + a + b + 1) / (s + 1))

    def mu(self, n: int) -> float:
        a, b, c = self.a, self.b, self.c
        s = 2 * n + 2 * c + a + b
        return _unit("mu", n, (n + c) / (s + 1) * (n + c + b) / s)

    def lam_star(self, n: int) -> float:
        a, b, c = self.a, self.b, self.c
        s = 2 * n + 2 * c + a + b
        return _unit("lambda_star", n, (n + c + a + 1) / (s + 2) * (n + c + a + b + 2) / (s + 3))

    def mu_star(self, n: int) -> float:
        a, b, c = self.a, self.b, self.c
        s = 2 * n + 2 * c + a + b
        return _unit("mu_star", n, (n + c + 1) / (s + 3) * (n + c + b + 2) / (s + 4))

    def b_star_sq(self, n: int):
        """Squared off-diagonal entry n >= 1 of J*_c."""
        return self.mu_star(n - 1) * self.lam_star(n)

    def a_star(self, n: int) -> float:
        """Diagonal entry n >= 1 of J*_c."""
        return self.lam_star(n - 1) + self.mu_star(n - 1)

    def b_star(self, n: int) -> float:
        """Off-diagonal entry n >= 1 of J*_c."""
        return math.sqrt(self.b_star_sq(n))

    def rule_nu(self, n: int):
        if n == 1:
            a_n = self.hat_lambda0
            b_n = math.sqrt(self.hat_lambda0 * self.mu(1))
        else:
            a_n = self.lam(n - 1) + self.mu(n - 1)
            b_n = math.sqrt(self.lam(n - 1) * self.mu(n))
        return a_n, b_n

    def rule_nu_star(self, n: int):
        return self.a_star(n), self.b_star(n)


def jacobi_matrix_nu(params) -> JacobiMatrix:
    """Semi-infinite J_c whose spectral measure is nu_c."""
    return JacobiMatrix.from_rule(LimitCoefficients(params).rule_nu)


def jacobi_matrix_nu_star(params) -> JacobiMatrix:
    """Semi-infinite J*_c whose spectral measure is nu*_c."""
    return JacobiMatrix.from_rule(LimitCoefficients(params).rule_nu_star)


def moments_u(params, K: int) -> np.ndarray:
    """Moments u_0..u_K of nu_c from the stationary moment recursion."""
    if K < 0:
        raise ParameterError("K must be >= 0")
    a, b, c = _abc(params)
    u = np.empty(K + 1)
    u[0] = 1.0
    for k in range(1, K + 1):
        conv_lo = np.dot(u[:k], u[k - 1 :: -1])  # sum_{i<k} u_i u_{k-1-i}
        conv_hi = np.dot(u[1:k], u[k - 1 : 0 : -1])  # sum_{1<=j<k} u_j u_{k-j}
        u[k] = ((a + k) * u[k - 1] + c * conv_lo - c * conv_hi) / (2 * c + a + b + k + 1)
    return u


_EXACT_U: dict = {}


def moments_u_exact(params, K: int) -> list[Fraction]:
    """Same recursion as :func:`moments_u` carried out in exact rationals.

    Results are memoised per (a, b, c) and extended on demand.
    """
    if K < 0:
        raise ParameterError("K must be >= 0")
    a, b, c = exact_abc(params)
    u = _EXACT_U.setdefault((a, b, c), [Fraction(1)])
    for k in range(len(u), K + 1):
        lo = sum(u[i] * u[k - 1 - i] for i in range(k))
        hi = sum(u[j] * u[k - j] for j in range(1, k))
        u.append(((a + k) * u[k - 1] + c * lo - c * hi) / (2 * c + a + b + k + 1))
    return u[: K + 1]


def nu_star_moments_exact(params, K: int) -> list[Fraction]:
    u = moments_u_exact(params, K + 2)
    z = u[1] - u[2]
    return [(u[n + 1] - u[n + 2]) / z for n in range(K + 1)]


def nu_star_moments(params, K: int) -> np.ndarray:
    """Moments of nu*_c: (u_{n+1} - u_{n+2}) / (u_1 - u_2), n = 0..K."""
    u = moments_u(params, K + 2)
    return (u[1 : K + 2] - u[2 : K + 3]) / (u[1] - u[2])


def z_star(params, tol: float = 1e-14) -> float:
    """Normalising constant Z*_c = <nu_c, x(1-x)>, from two closed forms."""
    a, b, c = _abc(params)
    explicit = (c + a + 1) * (c + b + 1) * (c + a + b + 2) / (
        (2 * c + a + b + 2) ** 2 * (2 * c + a + b + 3)
    )
    co = LimitCoefficients(params)
    via_matrix = co.hat_lambda0 * (1 - co.hat_lambda0 - co.mu(1))
    if abs(explicit - via_matrix) > tol * max(1.0, abs(explicit)):
        raise ConsistencyError(f"Z* formulas disagree: {explicit!r} vs {via_matrix!r}")
    return explicit


def gamma_n(params, n: int) -> float:
    """Relaxation rate (n + 1)(n + 2c + a + b + 2)."""
    a, b, c = _abc(params)
    return (n + 1) * (n + 2 * c + a + b + 2)


def sigma_matrix(params, M: int, tol: float = 1e-10) -> np.ndarray:
    """Limiting covariance (sigma_{k,l})_{k,l=1..M} of sqrt(N) <L_N, x^k>.

    Filled one column l at a time by the recursion in k; symmetry and
    positive semidefiniteness are asserted, never imposed.
    """
    if M < 1:
        raise ParameterError("M must be >= 1")
    a, b, c = _abc(params)
    u = moments_u(params, 2 * M)
    S = np.zeros((M + 1, M + 1))
    for l in range(1, M + 1):
        for k in range(1, M + 1):
            acc = l * (u[l] - u[k + l])
            if k > 1:
                acc -= b * S[1:k, l].sum()
                acc -= 2 * c * np.dot(u[1:k], S[k - 1 : 0 : -1, l])
            S[k, l] = acc / (k + 2 * c + a + b + 1)
    S = S[1:, 1:]
    asym = np.abs(S - S.T).max()
    if asym > tol:
        raise ConsistencyError(f"sigma recursion is not symmetric (max deviation {asym:.3e})")
    lo = np.linalg.eigvalsh(0.5 * (S + S.T)).min()
    if lo < -tol:
        raise ConsistencyError(f"sigma matrix has negative eigenvalue {lo:.3e}")
    return S


def sigma2_tilde_P(params, n: int) -> float:
    """Limiting variance Z*_c / ((n + 1)(n + 2c + a + b + 2)) for the n-th orthonormal primitive."""
    if n < 0:
        raise ParameterError("n must be >= 0")
    return z_star(params) / gamma_n(params, n)
