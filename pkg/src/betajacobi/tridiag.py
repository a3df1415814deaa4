"""Symmetric tridiagonal (Jacobi) matrices and their spectral measures.

A Jacobi matrix is stored through its diagonal ``a_1, a_2, ...`` and its
positive off-diagonal ``b_1, b_2, ...``. Semi-infinite matrices are given by
a coefficient rule ``n -> (a_n, b_n)`` (1-based) and truncated on demand.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .errors import ConvergenceError, ParameterError

__all__ = [
    "JacobiMatrix",
    "DiscreteMeasure",
    "from_bidiagonal_product",
    "eig_with_first_components",
    "eigvalsh_batch",
    "spectral_measure",
    "power_entry11",
    "power_moments",
    "MAX_QL_ITER",
]

MAX_QL_ITER = 50


class JacobiMatrix:
    """Immutable symmetric tridiagonal matrix, finite or rule-generated."""

    __slots__ = ("_diag", "_off", "_rule")

    def __init__(self, diag=None, offdiag=None, rule: Callable | None = None):
        if rule is None:
            d = np.array(diag, dtype=float).ravel()
            o = np.array(offdiag if offdiag is not None else [], dtype=float).ravel()
            if d.size < 1:
                raise ParameterError("a Jacobi matrix needs at least one diagonal entry")
            if o.size != d.size - 1:
                raise ParameterError(
                    f"offdiag length {o.size} does not match diag length {d.size}"
                )
            if np.any(~np.isfinite(d)) or np.any(~np.isfinite(o)):
                raise ParameterError("non-finite Jacobi coefficient")
            if np.any(o < 0):
                raise ParameterError("off-diagonal entries must be nonnegative")
            d.flags.writeable = False
            o.flags.writeable = False
            self._diag, self._off, self._rule = d, o, None
        else:
            self._diag = self._off = None
            self._rule = rule

    @classmethod
    def from_rule(cls, rule: Callable[[int], tuple[float, float]]) -> "JacobiMatrix":
        """Semi-infinite matrix with ``rule(n) = (a_n, b_n)`` for ``n >= 1``."""
        return cls(rule=rule)

    @property
    def size(self) -> int | None:
        return None if self._rule is not None else self._diag.size

    @property
    def is_finite(self) -> bool:
        return self._rule is None

    @property
    def diag(self) -> np.ndarray:
        if self._rule is not None:
            raise ParameterError("rule-generated matrix has no finite diagonal; use coefficients(m)")
        return self._diag

    @property
    def offdiag(self) -> np.ndarray:
        if self._rule is not None:
            raise ParameterError("rule-generated matrix has no finite off-diagonal; use coefficients(m)")
        return self._off

    def coefficients(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """First ``m`` diagonal and ``m - 1`` off-diagonal entries."""
        if m < 1:
            raise ParameterError("truncation size must be >= 1")
        if self._rule is None:
            if m > self._diag.size:
                raise ParameterError(f"cannot take {m} coefficients from a size-{self._diag.size} matrix")
            return self._diag[:m].copy(), self._off[: m - 1].copy()
        d = np.empty(m)
        o = np.empty(m - 1)
        for n in range(1, m + 1):
            a_n, b_n = self._rule(n)
            d[n - 1] = a_n
            if n < m:
                if not b_n > 0:
                    raise ParameterError(f"rule produced non-positive b_{n} = {b_n}")
                o[n - 1] = b_n
        return d, o

    def truncate(self, m: int) -> "JacobiMatrix":
        return JacobiMatrix(*self.coefficients(m))

    def dense(self, m: int | None = None) -> np.ndarray:
        d, o = self.coefficients(m if m is not None else self.size)
        return np.diag(d) + np.diag(o, 1) + np.diag(o, -1)

    def to_json(self) -> str:
        return json.dumps({"diag": self.diag.tolist(), "offdiag": self.offdiag.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "JacobiMatrix":
        obj = json.loads(text)
        return cls(obj["diag"], obj["offdiag"])

    def __repr__(self):
        if self._rule is not None:
            return f"JacobiMatrix(rule={self._rule!r})"
        return f"JacobiMatrix(size={self.size})"


def from_bidiagonal_product(s, t) -> JacobiMatrix:
    """L @ L.T with L lower bidiagonal, diagonal sqrt(s_n), subdiagonal sqrt(t_n).

    Entrywise: ``a_n = s_n + t_{n-1}`` (``t_0 = 0``) and ``b_n = sqrt(s_n t_n)``.
    ``s`` and ``t`` are either sequences (``len(t) == len(s) - 1``) or
    callables of the 1-based index, giving a semi-infinite matrix.
    """
    if callable(s) and callable(t):
        def rule(n):
            sn, tn = s(n), t(n)
            tprev = t(n - 1) if n > 1 else 0.0
            if sn < 0 or tn < 0 or tprev < 0:
                raise ParameterError("bidiagonal factors must be nonnegative")
            return sn + tprev, math.sqrt(sn * tn)

        return JacobiMatrix.from_rule(rule)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.size != s.size - 1:
        raise ParameterError("need len(t) == len(s) - 1")
    if np.any(s < 0) or np.any(t < 0):
        raise ParameterError("bidiagonal factors must be nonnegative")
    diag = s.copy()
    diag[1:] += t
    return JacobiMatrix(diag, np.sqrt(s[:-1] * t))


@numba.njit(cache=True)
def _tql1(d, e, z, want_z, maxit):
    """Implicit QL with Wilkinson-type shifts on (d, e); e[-1] is scratch.

    Rotations are applied only to the row vector ``z`` (the first row of the
    eigenvector matrix) when ``want_z``. Returns -1 on success, else the
    index of the eigenvalue that failed to converge.
    """
    n = d.shape[0]
    eps = 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == maxit:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_z:
                    f = z[i + 1]
                    z[i + 1] = s * z[i] + c * f
                    z[i] = c * z[i] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


@numba.njit(cache=True)
def _eigvals_batch(diag, off, out, maxit):
    m, n = diag.shape
    e = np.zeros(n)
    z = np.zeros(1)
    for r in range(m):
        d = out[r]
        d[:] = diag[r]
        e[: n - 1] = off[r]
        e[n - 1] = 0.0
        status = _tql1(d, e, z, False, maxit)
        if status >= 0:
            return r, status
        d.sort()
    return -1, -1


def eig_with_first_components(J: JacobiMatrix, N: int | None = None):
    """Eigenvalues (ascending) and squared first eigenvector components.

    The squared first components are the weights of the spectral measure of
    ``J``; they sum to one.
    """
    n = J.size if N is None else N
    if n is None:
        raise ParameterError("a rule-generated matrix needs an explicit size N")
    d, o = J.coefficients(n)
    e = np.zeros(n)
    e[: n - 1] = o
    z = np.zeros(n)
    z[0] = 1.0
    status = _tql1(d, e, z, True, MAX_QL_ITER)
    if status >= 0:
        raise ConvergenceError(
            f"QL iteration did not converge for eigenvalue {status} within {MAX_QL_ITER} sweeps",
            index=int(status),
        )
    order = np.argsort(d, kind="stable")
    return d[order], z[order] ** 2


def eigvalsh_batch(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """Sorted eigenvalues of many Jacobi matrices of the same size.

    ``diag`` has shape (M, N) and ``off`` shape (M, N - 1).
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    if diag.ndim != 2 or off.shape != (diag.shape[0], diag.shape[1] - 1):
        raise ParameterError("expected diag (M, N) and off (M, N-1)")
    out = np.empty_like(diag)
    row, status = _eigvals_batch(diag, off, out, MAX_QL_ITER)
    if row >= 0:
        raise ConvergenceError(
            f"QL iteration did not converge (matrix {row}, eigenvalue {status})",
            index=int(status),
        )
    return out


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite atomic probability measure, kept sorted by location."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if loc.shape != w.shape or loc.size == 0:
            raise ParameterError("locations and weights must be nonempty and of equal length")
        if np.any(w < 0):
            raise ParameterError("weights must be nonnegative")
        w = np.where(w < 1e-300, 0.0, w)
        total = w.sum()
        if not total > 0:
            raise ParameterError("weights sum to zero")
        order = np.argsort(loc, kind="stable")
        loc, w = loc[order], w[order] / total
        loc.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.locations.size

    def moment(self, k: int) -> float:
        return float(np.dot(self.weights, self.locations ** k))

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.locations)))

    def to_csv(self) -> str:
        lines = ["location,weight"]
        lines += [f"{x:.17e},{w:.17e}" for x, w in zip(self.locations, self.weights)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteMeasure":
        rows = [r for r in text.strip().splitlines()[1:] if r]
        data = np.array([[float(v) for v in r.split(",")] for r in rows])
        return cls(data[:, 0], data[:, 1])


def spectral_measure(J: JacobiMatrix, N: int | None = None) -> DiscreteMeasure:
    """Spectral measure sum_i v_i(1)^2 delta_{lambda_i} of a finite Jacobi matrix."""
    lam, w = eig_with_first_components(J, N)
    return DiscreteMeasure(lam, w)


def power_moments(J: JacobiMatrix, kmax: int, size: int | None = None) -> np.ndarray:
    """``[(J^k)(1,1) for k in 0..kmax]`` by repeated application to e_1.

    Only indices up to ``kmax // 2 + 1`` can be reached by a closed walk of
    length ``kmax`` from index 1, so rule-generated matrices are truncated to
    ``kmax // 2 + 2`` unless ``size`` overrides it.
    """
    if kmax < 0:
        raise ParameterError("power must be nonnegative")
    need = kmax // 2 + 1
    if J.is_finite:
        m = J.size if size is None else min(size, J.size)
    else:
        m = need + 1 if size is None else size
    if m < min(need, J.size or need):
        raise ParameterError(f"truncation size {m} too small for power {kmax}")
    d, o = J.coefficients(m)
    v = np.zeros(m)
    v[0] = 1.0
    out = np.empty(kmax + 1)
    out[0] = 1.0
    for k in range(1, kmax + 1):
        w = d * v
        w[:-1] += o * v[1:]
        w[1:] += o * v[:-1]
        v = w
        out[k] = v[0]
    return out


def power_entry11(J: JacobiMatrix, k: int, size: int | None = None) -> float:
    """The (1,1) entry of ``J**k``."""
    if k < 0:
        raise ParameterError("power must be nonnegative")
    return float(power_moments(J, k, size)[k])
