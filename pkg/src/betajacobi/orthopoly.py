"""Orthogonal polynomials of nu*_c, their primitives, and the L transform.

Polynomials are :class:`numpy.polynomial.Polynomial` in the monomial basis.
Every integral against nu_c or nu*_c is taken exactly through the moment
sequences; no quadrature is involved.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConsistencyError, ParameterError
from .limit_measure import (
    LimitCoefficients,
    exact_abc,
    gamma_n,
    moments_u,
    moments_u_exact,
    nu_star_moments,
    nu_star_moments_exact,
    sigma2_tilde_P,
    sigma_matrix,
    z_star,
)

__all__ = [
    "DEGREE_CAP",
    "integrate_moments",
    "p_sequence",
    "q_sequence",
    "normalize",
    "norm_sq_product",
    "norm_sq_exact",
    "p_sequence_exact",
    "gram_matrix",
    "alpha_tilde_sq",
    "q_by_divided_difference",
    "orthonormal_sequence",
    "primitive",
    "orthonormal_primitives",
    "coefficient_matrix",
    "L_transform",
    "EigenRelationRow",
    "check_eigen_relation",
    "diagonalization_check",
]

DEGREE_CAP = 64
X = Polynomial([0.0, 1.0])


def integrate_moments(p: Polynomial, moments) -> float:
    """<mu, p> given the moments of mu (must cover deg p)."""
    coef = np.asarray(p.coef, dtype=float)
    if coef.size > len(moments):
        raise ParameterError(f"need {coef.size} moments, have {len(moments)}")
    return float(np.dot(coef, moments[: coef.size]))


def _check_cap(n, cap):
    if n > cap:
        raise ParameterError(f"degree {n} exceeds the cap {cap}")


def _three_term(params, n_max, first, second, cap):
    _check_cap(n_max, cap)
    co = LimitCoefficients(params)
    seq = [first, second]
    for n in range(1, n_max):
        nxt = (X - co.a_star(n + 1)) * seq[n] - co.b_star(n) ** 2 * seq[n - 1]
        seq.append(nxt)
    return seq[: n_max + 1]


def p_sequence(params, n_max: int, cap: int = DEGREE_CAP) -> list[Polynomial]:
    """Monic orthogonal polynomials p_0..p_{n_max} of nu*_c."""
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    co = LimitCoefficients(params)
    return _three_term(params, n_max, Polynomial([1.0]), X - co.a_star(1), cap)


def q_sequence(params, n_max: int, cap: int = DEGREE_CAP) -> list[Polynomial]:
    """Same recurrence as p_n, started from q_0 = 0 and q_1 = 1."""
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    return _three_term(params, n_max, Polynomial([0.0]), Polynomial([1.0]), cap)


# Exact counterparts. Monomial-basis inner products on [0, 1] lose roughly
# 2 log10(4) digits per degree in floating point, so the moment-based
# oracles below run in Fractions. Coefficient lists are ascending.

def _mul_exact(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        if pi:
            for j, qj in enumerate(q):
                out[i + j] += pi * qj
    return out


def _integrate_exact(p, moments):
    return sum(ci * moments[i] for i, ci in enumerate(p))


_EXACT_P: dict = {}


def p_sequence_exact(params, n_max: int) -> list[list[Fraction]]:
    """Monic p_0..p_{n_max} with exact rational coefficients (memoised per parameters)."""
    key = exact_abc(params)
    seq = _EXACT_P.get(key)
    if seq is None:
        co = LimitCoefficients(params, exact=True)
        seq = _EXACT_P[key] = [[Fraction(1)], [-co.a_star(1), Fraction(1)]]
    if len(seq) <= n_max:
        co = LimitCoefficients(params, exact=True)
        for n in range(len(seq) - 1, n_max):
            shifted = [Fraction(0)] + seq[n]
            a = co.a_star(n + 1)
            b2 = co.b_star_sq(n)
            nxt = [shifted[i] - a * (seq[n][i] if i < len(seq[n]) else 0)
                   - b2 * (seq[n - 1][i] if i < len(seq[n - 1]) else 0)
                   for i in range(n + 2)]
            seq.append(nxt)
    return seq[: n_max + 1]


def norm_sq_exact(params, n: int) -> Fraction:
    """<nu*_c, p_n^2> from the moments, exactly."""
    p = p_sequence_exact(params, n)[n]
    return _integrate_exact(_mul_exact(p, p), nu_star_moments_exact(params, 2 * n))


def gram_matrix(params, n_max: int) -> np.ndarray:
    """Gram matrix of the orthonormal p~_0..p~_{n_max} under nu*_c (moment oracle)."""
    ps = p_sequence_exact(params, n_max)
    mom = nu_star_moments_exact(params, 2 * n_max)
    raw = [[_integrate_exact(_mul_exact(p, q), mom) for q in ps] for p in ps]
    norms = np.sqrt([float(raw[i][i]) for i in range(n_max + 1)])
    G = np.array([[float(raw[i][j]) for j in range(n_max + 1)] for i in range(n_max + 1)])
    return G / np.outer(norms, norms)


def alpha_tilde_sq(params, n: int) -> float:
    """<nu_c, 2x(1-x) p~_n^2> computed from the moments of nu_c."""
    p = p_sequence_exact(params, n)[n]
    u = moments_u_exact(params, 2 * n + 2)
    w = _mul_exact([Fraction(0), Fraction(2), Fraction(-2)], _mul_exact(p, p))
    return float(_integrate_exact(w, u) / norm_sq_exact(params, n))


def q_by_divided_difference(params, n: int) -> Polynomial:
    """x -> <nu*_c, (p_n(x) - p_n(y)) / (x - y)>_y, evaluated exactly."""
    p = p_sequence_exact(params, n)[n]
    mom = nu_star_moments_exact(params, max(n - 1, 0))
    out = [Fraction(0)] * max(n, 1)
    for j in range(1, n + 1):
        for i in range(j):
            out[i] += p[j] * mom[j - 1 - i]
    return Polynomial([float(v) for v in out])


def norm_sq_product(params, n: int) -> float:
    """prod_{i=1}^{n} lambda*_i mu*_{i-1}, the squared norm of monic p_n."""
    co = LimitCoefficients(params)
    out = 1.0
    for i in range(1, n + 1):
        out *= co.lam_star(i) * co.mu_star(i - 1)
    return out


def normalize(p: Polynomial, params, tol: float = 1e-10):
    """Return ``(p / ||p||, ||p||^2)`` in L^2(nu*_c).

    The squared norm comes from the recurrence coefficients and is checked
    against the moment-based inner product.
    """
    n = p.degree()
    norm_sq = norm_sq_product(params, n)
    coef = [Fraction(float(v)) for v in p.coef]
    direct = float(_integrate_exact(_mul_exact(coef, coef), nu_star_moments_exact(params, 2 * n)))
    if abs(direct - norm_sq) > tol * norm_sq:
        raise ConsistencyError(
            f"norm of p_{n}: recurrence gives {norm_sq!r}, moments give {direct!r}"
        )
    return p / np.sqrt(norm_sq), norm_sq


def orthonormal_sequence(params, n_max: int) -> list[Polynomial]:
    return [normalize(p, params)[0] for p in p_sequence(params, n_max)]


def primitive(p: Polynomial) -> Polynomial:
    """The primitive P with P' = p and P(0) = 0."""
    return p.integ(lbnd=0.0, k=0.0)


def orthonormal_primitives(params, n_max: int) -> list[Polynomial]:
    """Zero-constant primitives of the orthonormal polynomials, degrees 1..n_max+1."""
    return [primitive(p) for p in orthonormal_sequence(params, n_max)]


def coefficient_matrix(params, M: int) -> np.ndarray:
    """Lower triangular C with (P~_0, ..., P~_{M-1}) = C (x, ..., x^M)."""
    C = np.zeros((M, M))
    for n, P in enumerate(orthonormal_primitives(params, M - 1)):
        coef = P.coef
        C[n, : coef.size - 1] = coef[1:]
    return C


def _divided_difference_integral(r: Polynomial, moments) -> Polynomial:
    # x -> int (r(x) - r(y)) / (x - y) dmu(y), using (x^j - y^j)/(x - y) = sum_i x^i y^(j-1-i)
    coef = r.coef
    deg = coef.size - 1
    out = np.zeros(max(deg, 1))
    for j in range(1, deg + 1):
        for i in range(j):
            out[i] += coef[j] * moments[j - 1 - i]
    return Polynomial(out)


def divided_difference_integral(p: Polynomial, moments) -> Polynomial:
    return _divided_difference_integral(p, moments)


def L_transform(p: Polynomial, params) -> Polynomial:
    """L(p) = 2c int (x(1-x)p(x) - y(1-y)p(y))/(x-y) dnu_c(y)
              + (a+1)p - (a+b+2)x p + x(1-x)p'."""
    a, b, c = float(params.a), float(params.b), float(params.c)
    r = X * (1 - X) * p
    u = moments_u(params, r.degree() + 1)
    integral = _divided_difference_integral(r, u)
    return 2 * c * integral + (a + 1) * p - (a + b + 2) * X * p + X * (1 - X) * p.deriv()


@dataclass
class EigenRelationRow:
    n: int
    gamma_n: float
    residual: float
    norm_sq: float
    alpha_tilde_sq: float
    passed: bool

    def as_dict(self):
        return dict(self.__dict__)


def check_eigen_relation(params, n_max: int, tol: float = 1e-9, oracles: bool = True) -> list[EigenRelationRow]:
    """Residual of L(p_n) + gamma_n P_n outside the constant term, per n.

    The residual is the largest degree >= 1 coefficient magnitude divided by
    the largest coefficient magnitude of gamma_n P_n. Each row also carries
    ||p_n||^2 and alpha~_n^2 = <nu_c, 2x(1-x) p~_n^2>, which should be 2 Z*_c.
    With ``oracles=False`` the exact-rational cross-checks are skipped: the
    norm comes from the recurrence alone and alpha~_n^2 is reported as NaN.
    """
    _check_cap(n_max + 2, DEGREE_CAP)
    ps = p_sequence(params, n_max)
    rows = []
    for n, p in enumerate(ps):
        g = gamma_n(params, n)
        P = primitive(p)
        res = L_transform(p, params) + g * P
        scale = np.abs(g * P.coef).max()
        residual = float(np.abs(res.coef[1:]).max() / scale) if res.coef.size > 1 else 0.0
        if oracles:
            _, norm_sq = normalize(p, params)
            alpha = alpha_tilde_sq(params, n)
        else:
            norm_sq, alpha = norm_sq_product(params, n), float("nan")
        rows.append(EigenRelationRow(n, g, residual, norm_sq, alpha, residual <= tol))
    return rows


@dataclass
class DiagonalizationReport:
    C: np.ndarray
    sigma: np.ndarray
    product: np.ndarray
    targets: np.ndarray
    max_offdiag: float
    max_diag_error: float
    passed: bool = field(default=False)


def diagonalization_check(params, M: int, tol: float = 1e-8) -> DiagonalizationReport:
    """C Sigma C^T should be diag(sigma^2_{P~_0}, ..., sigma^2_{P~_{M-1}})."""
    C = coefficient_matrix(params, M)
    S = sigma_matrix(params, M)
    prod = C @ S @ C.T
    targets = np.array([sigma2_tilde_P(params, n) for n in range(M)])
    off = prod - np.diag(np.diag(prod))
    max_off = float(np.abs(off).max()) if M > 1 else 0.0
    max_diag = float(np.abs(np.diag(prod) - targets).max())
    return DiagonalizationReport(C, S, prod, targets, max_off, max_diag,
                                 max_off <= tol and max_diag <= tol)
