"""Beta Jacobi ensembles: the random tridiagonal model and low-temperature limits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .distributions import sample_beta_array, sample_dirichlet
from .errors import ConsistencyError, ParameterError
from .tridiag import (
    DiscreteMeasure,
    JacobiMatrix,
    eig_with_first_components,
    eigvalsh_batch,
    from_bidiagonal_product,
    power_moments,
)

__all__ = [
    "ModelParams",
    "LowTempParams",
    "model_shapes",
    "sample_tridiagonal",
    "sample_tridiagonal_batch",
    "sample_eigenvalues",
    "empirical_measure",
    "spectral_measure_sampled",
    "low_temp_matrices",
    "jacobi_zeros",
    "dual_polynomials",
    "dual_entry_residuals",
]

_TINY = np.finfo(float).tiny
_ONE_MINUS = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ModelParams:
    """Ensemble parameters; ``beta`` defaults to 2c/N."""

    a: float
    b: float
    c: float
    N: int
    beta: float | None = None

    def __post_init__(self):
        if not (self.a > -1 and self.b > -1):
            raise ParameterError(f"need a, b > -1, got a={self.a}, b={self.b}")
        if not self.c > 0:
            raise ParameterError(f"need c > 0, got c={self.c}")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.beta is None:
            object.__setattr__(self, "beta", 2.0 * self.c / self.N)
        if not self.beta > 0:
            raise ParameterError(f"need beta > 0, got {self.beta}")

    @property
    def kappa(self) -> float:
        return self.beta / 2.0

    def require_process_range(self):
        if not (self.a > -0.5 and self.b > -0.5):
            raise ParameterError("the process requires a, b > -1/2")

    def with_N(self, N: int, keep_beta: bool = False) -> "ModelParams":
        return ModelParams(self.a, self.b, self.c, N, self.beta if keep_beta else None)


@dataclass(frozen=True)
class LowTempParams:
    A: float
    B: float
    N: int

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise ParameterError("need A, B > 0")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))


SUPPORT_SLACK = 1e-12


def model_shapes(params: ModelParams):
    """Beta shapes of p_1..p_N and q_1..q_{N-1}."""
    N, k, a, b = params.N, params.kappa, params.a, params.b
    n = np.arange(1, N + 1)
    p_alpha = (N - n) * k + a + 1
    p_beta = (N - n) * k + b + 1
    m = np.arange(1, N)
    q_alpha = (N - m) * k
    q_beta = (N - m - 1) * k + a + b + 2
    return p_alpha, p_beta, q_alpha, q_beta


def sample_tridiagonal_batch(params: ModelParams, rng: np.random.Generator, M: int):
    """Diagonals (M, N) and off-diagonals (M, N-1) of M independent J_{N,beta}."""
    N = params.N
    pa, pb, qa, qb = model_shapes(params)
    p = sample_beta_array(pa, pb, rng, size=(M, N))
    q = sample_beta_array(qa, qb, rng, size=(M, N - 1)) if N > 1 else np.zeros((M, 0))
    # keep off-diagonals strictly positive when a tiny shape underflows
    p = np.clip(p, _TINY, _ONE_MINUS)
    q = np.clip(q, _TINY, _ONE_MINUS)
    q_prev = np.concatenate([np.zeros((M, 1)), q], axis=1)  # q_0 = 0
    s = p * (1 - q_prev)
    t = q * (1 - p[:, :-1])
    diag = s.copy()
    diag[:, 1:] += t
    off = np.sqrt(s[:, :-1] * t)
    return diag, off


def sample_tridiagonal(params: ModelParams, rng: np.random.Generator) -> JacobiMatrix:
    """One draw of J_{N,beta}; its eigenvalues follow the beta Jacobi ensemble."""
    diag, off = sample_tridiagonal_batch(params, rng, 1)
    return JacobiMatrix(diag[0], off[0])


def sample_eigenvalues(params: ModelParams, rng: np.random.Generator, M: int) -> np.ndarray:
    """Sorted eigenvalues of M independent draws, shape (M, N).

    J = L L^T and I - J are both positive semidefinite, so the spectrum lies in
    [0, 1]; rounding of order 1e-16 is clipped and anything larger raises.
    """
    diag, off = sample_tridiagonal_batch(params, rng, M)
    lam = eigvalsh_batch(diag, off)
    worst = max(-lam.min(initial=0.0), lam.max(initial=1.0) - 1.0)
    if worst > SUPPORT_SLACK:
        raise ConsistencyError(f"sampled eigenvalue outside [0, 1] by {worst:.3e}")
    return np.clip(lam, 0.0, 1.0)


def empirical_measure(J: JacobiMatrix, N: int | None = None) -> DiscreteMeasure:
    lam, _ = eig_with_first_components(J, N)
    return DiscreteMeasure(lam, np.full(lam.size, 1.0 / lam.size))


def spectral_measure_sampled(J: JacobiMatrix, N: int | None = None, method: str = "eigenvector",
                             rng: np.random.Generator | None = None,
                             beta: float | None = None) -> DiscreteMeasure:
    """Spectral measure of ``J``.

    ``eigenvector`` returns the exact weights v_i(1)^2. ``dirichlet`` pairs
    the eigenvalues with fresh Dirichlet(beta/2, ..., beta/2) weights, which
    has the same law when ``J`` is a draw of J_{N,beta}.
    """
    lam, w = eig_with_first_components(J, N)
    if method == "eigenvector":
        return DiscreteMeasure(lam, w)
    if method == "dirichlet":
        if beta is None or rng is None:
            raise ParameterError("dirichlet weights need beta and rng")
        return DiscreteMeasure(lam, sample_dirichlet(lam.size, beta / 2.0, rng))
    raise ParameterError(f"unknown method {method!r}")


def _checked(num, den, what):
    if den == 0:
        raise ParameterError(f"zero denominator in {what}")
    return num / den


def low_temp_matrices(params: LowTempParams):
    """(T_N, T*_N, H_[N]) for the low-temperature limit with (beta, a, b) = (2k, Ak, Bk)."""
    A, B, N = float(params.A), float(params.B), params.N
    c = [_checked(1 - N - A, 2 - 2 * N - A - B, "c_1")]
    for n in range(2, N + 1):
        c.append(_checked(n - N - A, 2 * n - 2 * N - A - B, f"c_{n}")
                 * _checked(n - N - A - B, 2 * n - 2 * N - A - B - 1, f"c_{n}"))
    d = [_checked(n - N, 2 * n - 2 * N - A - B + 1, f"d_{n}")
         * _checked(n - N - B, 2 * n - 2 * N - A - B, f"d_{n}") for n in range(1, N)]
    T = from_bidiagonal_product(c, d)

    def lam(n):
        if n == 0:
            return A / (A + B)
        return (n + A) / (2 * n + A + B) * (n + A + B - 1) / (2 * n + A + B - 1)

    def mu(n):
        return n / (2 * n + A + B - 1) * (n + B - 1) / (2 * n + A + B - 2)

    H = from_bidiagonal_product([lam(n) for n in range(N)], [mu(n) for n in range(1, N)])
    T_star = JacobiMatrix(H.diag[::-1], H.offdiag[::-1])
    return T, T_star, H


def jacobi_zeros(params: LowTempParams) -> np.ndarray:
    """Zeros of the monic Jacobi polynomial P_N^{(A-1,B-1)} on [0, 1]: eigenvalues of H_[N]."""
    _, _, H = low_temp_matrices(params)
    lam, _ = eig_with_first_components(H)
    return lam


def dual_polynomials(T_star: JacobiMatrix) -> list[Polynomial]:
    """Q_0..Q_{N-1} from the three-term recurrence of T*_N."""
    d, o = T_star.diag, T_star.offdiag
    x = Polynomial([0.0, 1.0])
    Q = [Polynomial([1.0])]
    if d.size > 1:
        Q.append(x - d[0])
    for n in range(1, d.size - 1):
        Q.append((x - d[n]) * Q[n] - o[n - 1] ** 2 * Q[n - 1])
    return Q


def dual_entry_residuals(params: LowTempParams, n_max: int) -> np.ndarray:
    """|(T*)^n(1,1) - ((T)^{n+1}(1,1) - (T)^{n+2}(1,1)) / (T(1,1) - T^2(1,1))| for n <= n_max."""
    T, T_star, _ = low_temp_matrices(params)
    m = power_moments(T, n_max + 2)
    ms = power_moments(T_star, n_max)
    rhs = (m[1 : n_max + 2] - m[2 : n_max + 3]) / (m[1] - m[2])
    return np.abs(ms - rhs)
