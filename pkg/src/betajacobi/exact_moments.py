"""Exact expectations of (J_{N,beta})^k(1,1) over the rationals.

The (1,1) entry of J^k is a polynomial in the independent beta variables
p_i, q_i. Its expectation is a sum of products of beta moments, each a
rational function of (N, kappa, a, b) with kappa = beta / 2. Everything
here uses :class:`fractions.Fraction`; there is no floating-point shortcut.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import ParameterError, PoleError

__all__ = [
    "RationalPoly",
    "as_fraction",
    "expand_entry11",
    "expand_trace",
    "expect",
    "expect_limit",
    "mean_moment",
    "mean_trace_moment",
    "limit_moment",
    "duality_check",
    "rate_check",
]


def as_fraction(x) -> Fraction:
    """Parse ints, Fractions, floats (exactly) and ``"num/den"`` strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


class RationalPoly:
    """Sparse polynomial in p_1..p_m, q_1..q_m with Fraction coefficients.

    Keys are exponent tuples of length 2m: the p exponents, then the q
    exponents. Zero coefficients are never stored.
    """

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms=None):
        self.m = m
        self.terms = {}
        for key, coef in (terms or {}).items():
            if coef:
                self.terms[key] = Fraction(coef)

    @classmethod
    def constant(cls, m, value):
        return cls(m, {(0,) * (2 * m): Fraction(value)})

    @classmethod
    def var(cls, m, kind: str, i: int):
        """The variable p_i or q_i (1-based)."""
        if not 1 <= i <= m:
            raise ParameterError(f"variable index {i} outside 1..{m}")
        key = [0] * (2 * m)
        key[(i - 1) if kind == "p" else (m + i - 1)] = 1
        return cls(m, {tuple(key): Fraction(1)})

    def _coerce(self, other):
        if isinstance(other, RationalPoly):
            if other.m != self.m:
                raise ParameterError("mismatched variable sets")
            return other
        return RationalPoly.constant(self.m, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for key, coef in other.terms.items():
            v = out.get(key, 0) + coef
            if v:
                out[key] = v
            else:
                out.pop(key, None)
        return RationalPoly(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return RationalPoly(self.m, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = tuple(x + y for x, y in zip(k1, k2))
                v = out.get(key, 0) + c1 * c2
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return RationalPoly(self.m, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        return self.terms == other.terms

    def __len__(self):
        return len(self.terms)

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def evaluate(self, p_values, q_values):
        """Substitute numbers (any field) for p_1.. and q_1..; missing ones must not occur."""
        vals = list(p_values) + [0] * (self.m - len(p_values))
        vals += list(q_values) + [0] * (self.m - len(q_values))
        total = 0
        for key, coef in self.terms.items():
            term = coef
            for v, e in zip(vals, key):
                if e:
                    term = term * v ** e
            total = total + term
        return total

    def __repr__(self):
        return f"RationalPoly(m={self.m}, terms={len(self.terms)})"


def _s_t_polys(m: int, size: int):
    """s_n = p_n (1 - q_{n-1}) with q_0 = 0, t_n = q_n (1 - p_n)."""
    p = [RationalPoly.var(m, "p", i) for i in range(1, m + 1)]
    q = [RationalPoly.var(m, "q", i) for i in range(1, m + 1)]
    s = [p[0]] + [p[n] * (1 - q[n - 1]) for n in range(1, size)]
    t = [q[n] * (1 - p[n]) for n in range(size - 1)]
    return s, t


@lru_cache(maxsize=None)
def _entry11(m: int, k: int) -> RationalPoly:
    size = min(m, k // 2 + 1)
    s, t = _s_t_polys(m, size)
    diag = [s[0]] + [s[n] + t[n - 1] for n in range(1, size)]
    off_sq = [s[n] * t[n] for n in range(size - 1)]
    # row vector e_1^T Jhat^k, Jhat = D J D^{-1} with unit superdiagonal and b_n^2 below
    zero = RationalPoly(m)
    r = [RationalPoly.constant(m, 1)] + [zero] * (size - 1)
    for _ in range(k):
        nxt = []
        for j in range(size):
            acc = r[j] * diag[j]
            if j > 0:
                acc = acc + r[j - 1]
            if j + 1 < size:
                acc = acc + r[j + 1] * off_sq[j]
            nxt.append(acc)
        r = nxt
    return r[0]


def expand_entry11(N_structural: int, k: int) -> RationalPoly:
    """Symbolic (J^k)(1,1) over p_1..p_m, q_1..q_m with m = N_structural.

    A closed walk of length k from index 1 never goes deeper than k // 2 + 1,
    so once ``N_structural >= k // 2 + 2`` the expansion does not depend on N.
    """
    if k < 0:
        raise ParameterError("k must be >= 0")
    if N_structural < k // 2 + 2:
        raise ParameterError(f"structural size {N_structural} < k//2 + 2 = {k // 2 + 2}")
    return _entry11(N_structural, k)


@lru_cache(maxsize=None)
def expand_trace(N: int, k: int) -> RationalPoly:
    """Symbolic tr(J^k) for the genuine N x N model (p_1..p_N, q_1..q_{N-1})."""
    if N < 1 or k < 0:
        raise ParameterError("need N >= 1 and k >= 0")
    s, t = _s_t_polys(N, N)
    zero = RationalPoly(N)
    one = RationalPoly.constant(N, 1)
    Jh = [[zero] * N for _ in range(N)]
    for n in range(N):
        Jh[n][n] = s[n] + (t[n - 1] if n > 0 else zero)
        if n + 1 < N:
            Jh[n][n + 1] = one
            Jh[n + 1][n] = s[n] * t[n]
    P = [[one if i == j else zero for j in range(N)] for i in range(N)]
    for _ in range(k):
        P = [[sum((P[i][l] * Jh[l][j] for l in range(N) if Jh[l][j].terms), zero)
              for j in range(N)] for i in range(N)]
    return sum((P[i][i] for i in range(N)), zero)


def _beta_moment_exact(alpha: Fraction, beta: Fraction, e: int, label: str) -> Fraction:
    out = Fraction(1)
    for r in range(e):
        den = alpha + beta + r
        if den == 0:
            raise PoleError(f"pole in E[{label}^{e}]: alpha + beta + {r} = 0 "
                            f"(alpha={alpha}, beta={beta})")
        out *= (alpha + r) / den
    return out


def _expect(poly: RationalPoly, p_shape, q_shape) -> Fraction:
    m = poly.m
    cache = {}

    def mom(idx, e):
        key = (idx, e)
        if key not in cache:
            if idx < m:
                i = idx + 1
                al, be = p_shape(i)
                cache[key] = _beta_moment_exact(al, be, e, f"p_{i}")
            else:
                i = idx - m + 1
                al, be = q_shape(i)
                cache[key] = _beta_moment_exact(al, be, e, f"q_{i}")
        return cache[key]

    total = Fraction(0)
    for key, coef in poly.terms.items():
        term = coef
        for idx, e in enumerate(key):
            if e:
                term *= mom(idx, e)
                if not term:
                    break
        total += term
    return total


def expect(poly: RationalPoly, N, kappa, a, b) -> Fraction:
    """E[poly] with p_i ~ Beta((N-i)k + a + 1, (N-i)k + b + 1) and
    q_i ~ Beta((N-i)k, (N-i-1)k + a + b + 2), all independent."""
    N, kappa, a, b = map(as_fraction, (N, kappa, a, b))
    return _expect(
        poly,
        lambda i: ((N - i) * kappa + a + 1, (N - i) * kappa + b + 1),
        lambda i: ((N - i) * kappa, (N - i - 1) * kappa + a + b + 2),
    )


def expect_limit(poly: RationalPoly, c, a, b) -> Fraction:
    """E[poly] for the i.i.d. limit: p ~ Beta(c + a + 1, c + b + 1), q ~ Beta(c, c + a + b + 2)."""
    c, a, b = map(as_fraction, (c, a, b))
    return _expect(poly, lambda i: (c + a + 1, c + b + 1), lambda i: (c, c + a + b + 2))


def mean_moment(k: int, N, kappa, a, b) -> Fraction:
    """m_k(N, kappa, a, b) = E[(J_{N,2kappa})^k(1,1)], a rational function of its arguments."""
    return expect(expand_entry11(k // 2 + 2, k), N, kappa, a, b)


def mean_trace_moment(k: int, N: int, kappa, a, b) -> Fraction:
    """E[N^{-1} tr (J_{N,2kappa})^k] from the full symbolic matrix."""
    return expect(expand_trace(N, k), N, kappa, a, b) / N


def limit_moment(k: int, c, a, b) -> Fraction:
    """E[(J_c^(inf))^k(1,1)] = <nu_c, x^k>."""
    return expect_limit(expand_entry11(k // 2 + 2, k), c, a, b)


@dataclass
class DualityResult:
    k: int
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def duality_check(k: int, N, kappa, a, b) -> DualityResult:
    """Compare m_k(N, k, a, b) with m_k(-kN, 1/k, -a/k, -b/k) exactly."""
    N, kappa, a, b = map(as_fraction, (N, kappa, a, b))
    if kappa == 0:
        raise PoleError("kappa = 0 has no dual point")
    lhs = mean_moment(k, N, kappa, a, b)
    rhs = mean_moment(k, -kappa * N, 1 / kappa, -a / kappa, -b / kappa)
    return DualityResult(k, lhs, rhs)


@dataclass
class RateRow:
    N: int
    mean: Fraction
    limit: Fraction
    diff: float
    scaled: float


@dataclass
class RateReport:
    k: int
    rows: list
    bounded: bool


def rate_check(k: int, c, a, b, N_list) -> RateReport:
    """Tabulate |m_k(N, c/N, a, b) - m_k^inf| and N times it over ``N_list``.

    ``bounded`` holds when max_N N|diff| <= 2 * (N|diff| at the largest N).
    """
    c, a, b = map(as_fraction, (c, a, b))
    lim = limit_moment(k, c, a, b)
    rows = []
    for N in sorted(N_list):
        m = mean_moment(k, N, c / N, a, b)
        d = abs(m - lim)
        rows.append(RateRow(int(N), m, lim, float(d), float(N * d)))
    scaled = [r.scaled for r in rows]
    bounded = max(scaled) <= 2 * scaled[-1] if scaled[-1] > 0 else max(scaled) == 0
    return RateReport(k, rows, bounded)
