"""Beta, Gamma and Dirichlet sampling plus exact beta moments.

Random streams are plain :class:`numpy.random.Generator` objects. They are
seedable and splittable through ``Generator.spawn``, which is all the
simulation code needs for reproducible, independent replicas.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "BetaParams",
    "make_rng",
    "split",
    "log_gamma_variates",
    "sample_beta",
    "beta_moment",
    "sample_dirichlet",
]


def make_rng(seed=None) -> np.random.Generator:
    """Return a fresh generator; ``seed`` may be an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Derive ``n`` statistically independent child streams."""
    return rng.spawn(n)


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError(
                f"beta shapes must be positive, got ({self.alpha}, {self.beta})"
            )


def log_gamma_variates(shape, rng: np.random.Generator, size=None) -> np.ndarray:
    """Logarithms of Gamma(shape, 1) draws.

    numpy's Marsaglia-Tsang sampler handles shape >= 1. Smaller shapes use
    the boost G(s) = G(s + 1) * U**(1/s), kept in log space so that draws
    far below the smallest double (common for shapes ~1e-3) stay finite.
    """
    shape = np.asarray(shape, dtype=float)
    if np.any(shape <= 0):
        raise ParameterError("gamma shape must be positive")
    if size is None:
        size = shape.shape
    small = shape < 1.0
    g = rng.gamma(np.where(small, shape + 1.0, shape), size=size)
    out = np.log(g)
    if np.any(small):
        u = rng.random(size=size)
        boost = np.log(u) / np.where(small, shape, 1.0)
        out = out + np.where(small, boost, 0.0)
    return out


def _beta_from_logs(lx, ly):
    # x / (x + y) without leaving log space
    return np.exp(lx - np.logaddexp(lx, ly))


def sample_beta(params: BetaParams, rng: np.random.Generator, size=None):
    """Draw from Beta(alpha, beta) as X / (X + Y) with independent gammas."""
    lx = log_gamma_variates(params.alpha, rng, size)
    ly = log_gamma_variates(params.beta, rng, size)
    out = _beta_from_logs(lx, ly)
    return float(out) if size is None else out


def sample_beta_array(alpha, beta, rng: np.random.Generator, size=None) -> np.ndarray:
    """Vectorised Beta draws for broadcastable shape arrays."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if size is None:
        size = np.broadcast_shapes(alpha.shape, beta.shape)
    lx = log_gamma_variates(np.broadcast_to(alpha, size), rng, size)
    ly = log_gamma_variates(np.broadcast_to(beta, size), rng, size)
    return _beta_from_logs(lx, ly)


def beta_moment(params: BetaParams, k: int) -> float:
    """E[X^k] for X ~ Beta(alpha, beta) with density x^(alpha-1) (1-x)^(beta-1).

    Equals prod_{r=0}^{k-1} (alpha + r) / (alpha + beta + r).
    """
    if k < 0:
        raise ParameterError("moment order must be nonnegative")
    out = 1.0
    for r in range(k):
        out *= (params.alpha + r) / (params.alpha + params.beta + r)
    return out


def sample_dirichlet(n: int, concentration: float, rng: np.random.Generator, size=None):
    """Symmetric Dirichlet(concentration, ..., concentration) weights of length ``n``.

    With ``size`` given, returns an array of shape ``(*size, n)``.
    """
    if n < 1:
        raise ParameterError("Dirichlet dimension must be >= 1")
    if not concentration > 0:
        raise ParameterError("Dirichlet concentration must be positive")
    lead = () if size is None else tuple(np.atleast_1d(size))
    lg = log_gamma_variates(np.full(lead + (n,), float(concentration)), rng)
    lg = lg - lg.max(axis=-1, keepdims=True)
    w = np.exp(lg)
    w /= w.sum(axis=-1, keepdims=True)
    return w
