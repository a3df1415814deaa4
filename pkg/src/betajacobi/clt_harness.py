"""Monte Carlo checks of the high-temperature LLN and CLT.

Every threshold is computed from (M, N, targets):

* variance of a rescaled statistic: |v - s2| <= 3 s2 sqrt(2/M) + bias allowance
  (Gaussian fourth-moment SE of a variance estimator);
* covariance entries: |c_kl - s_kl| <= 4 sqrt((s_kk s_ll + s_kl^2) / M);
* correlations: |rho| <= 4 / sqrt(M) + bias allowance;
* means: |m_k - u_k| <= 4 SE + |E m_k(N) - u_k| with the last term exact.

The bias allowance comes from a paired run at 2N. If the finite-N bias
behaves like C / sqrt(N), then |v_N - v_2N| / (1 - 2^{-1/2}) estimates C / sqrt(N).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from . import exact_moments
from .distributions import make_rng, split
from .ensembles import ModelParams, sample_eigenvalues
from .errors import ParameterError
from .limit_measure import moments_u, sigma2_tilde_P, sigma_matrix
from .orthopoly import diagonalization_check, orthonormal_primitives

__all__ = ["ExperimentSpec", "MCReport", "run_clt", "run_covariance", "run_independence", "run_lln", "target_variance",
           "PAIRING_FACTOR"]

PAIRING_FACTOR = 1.0 / (1.0 - 1.0 / math.sqrt(2.0))
VARIANCE_SE_NOTE = "SE of a variance estimate taken as s2*sqrt(2/M) (Gaussian fourth moment)"


@dataclass(frozen=True)
class ExperimentSpec:
    params: ModelParams
    replicas: int
    statistics: tuple = (0, 1)
    seed: int = 0
    empirical_centering: bool = False
    bias_pairing: bool = True
    chunk: int = 1000

    def __post_init__(self):
        if self.replicas < 100:
            raise ParameterError("need at least 100 replicas")
        if self.params.N < 10:
            raise ParameterError("need N >= 10")
        p = self.params
        if not math.isclose(p.beta, 2.0 * p.c / p.N, rel_tol=1e-12):
            raise ParameterError("the CLT regime requires beta = 2c/N")
        stats = tuple(int(s) if isinstance(s, (int, np.integer)) else s for s in self.statistics)
        object.__setattr__(self, "statistics", stats)


@dataclass
class MCReport:
    kind: str
    params: dict
    replicas: int
    seed: int
    entries: list = field(default_factory=list)
    matrices: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e["passed"] for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "replicas": self.replicas,
            "seed": self.seed,
            "passed": self.passed,
            "entries": self.entries,
            "matrices": {k: np.asarray(v).tolist() for k, v in self.matrices.items()},
            "notes": self.notes,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _param_dict(p: ModelParams):
    return {"a": p.a, "b": p.b, "c": p.c, "N": p.N, "beta": p.beta}


def _statistics(params: ModelParams, rng, M: int, polys, chunk: int) -> np.ndarray:
    """(M, len(polys)) array of <L_N, P> over independent replicas."""
    out = np.empty((M, len(polys)))
    starts = list(range(0, M, chunk))
    for start, child in zip(starts, split(rng, len(starts))):
        B = min(chunk, M - start)
        lam = sample_eigenvalues(params, child, B)
        for j, P in enumerate(polys):
            out[start : start + B, j] = npoly.polyval(lam, np.asarray(P.coef)).mean(axis=1)
    return out


def _rescaled(params, rng, M, polys, centers, chunk):
    vals = _statistics(params, rng, M, polys, chunk)
    return math.sqrt(params.N) * (vals - np.asarray(centers))


def _variance(x, empirical):
    return x.var(axis=0, ddof=1) if empirical else np.mean(x ** 2, axis=0)


def _streams(spec: ExperimentSpec):
    main, paired = split(make_rng(spec.seed), 2)
    return main, paired


def _centers(polys, params):
    u = moments_u(params, max([P.degree() for P in polys] + [1]))
    return [float(np.dot(P.coef, u[: P.coef.size])) for P in polys]


def _resolve(stat, prims):
    """An int n stands for P~_n; anything else is taken as a polynomial."""
    if isinstance(stat, (int, np.integer)):
        return f"P~_{int(stat)}", prims[int(stat)]
    P = stat if isinstance(stat, Polynomial) else Polynomial(stat)
    return "P(" + ",".join(format(float(v), ".17g") for v in P.coef) + ")", P


def target_variance(P: Polynomial, params) -> float:
    """Limiting variance of sqrt(N) <L, P>: c^T Sigma c over the non-constant coefficients."""
    c = np.asarray(P.coef[1:], dtype=float)
    if c.size == 0 or not np.any(c):
        return 0.0
    S = sigma_matrix(params, c.size)
    return float(c @ S @ c)


def run_clt(spec: ExperimentSpec) -> MCReport:
    """Variance of sqrt(N)(<L, P> - <nu_c, P>) against its limit.

    Integer statistics n mean P~_n, whose limit variance is sigma^2_{P~_n};
    other polynomials use c^T Sigma c.
    """
    p = spec.params
    stats = spec.statistics
    rep = MCReport("clt", _param_dict(p), spec.replicas, spec.seed,
                   notes=[VARIANCE_SE_NOTE,
                          "centering: " + ("sample mean" if spec.empirical_centering else "<nu_c, P>")])
    if not stats:
        return rep
    n_top = max([s for s in stats if isinstance(s, (int, np.integer))], default=0)
    prims = orthonormal_primitives(p, n_top)
    labels, polys = zip(*(_resolve(s, prims) for s in stats))
    centers = _centers(polys, p)
    main, paired = _streams(spec)
    M = spec.replicas
    x = _rescaled(p, main, M, polys, centers, spec.chunk)
    v = _variance(x, spec.empirical_centering)
    if spec.bias_pairing:
        x2 = _rescaled(p.with_N(2 * p.N), paired, M, polys, centers, spec.chunk)
        v2 = _variance(x2, spec.empirical_centering)
    for j, (stat, label, P) in enumerate(zip(stats, labels, polys)):
        if isinstance(stat, (int, np.integer)):
            target = sigma2_tilde_P(p, int(stat))
        else:
            target = target_variance(P, p)
        se = target * math.sqrt(2.0 / M)
        allowance = PAIRING_FACTOR * abs(v[j] - v2[j]) if spec.bias_pairing else 0.0
        tol = 3.0 * se + allowance
        rep.entries.append({
            "statistic": label,
            "target_variance": target,
            "variance": float(v[j]),
            "variance_2N": float(v2[j]) if spec.bias_pairing else None,
            "mean": float(x[:, j].mean()),
            "mean_se": float(x[:, j].std(ddof=1) / math.sqrt(M)),
            "variance_se": se,
            "bias_allowance": float(allowance),
            "tolerance": float(tol),
            "passed": bool(abs(v[j] - target) <= tol),
        })
    return rep


def run_covariance(spec: ExperimentSpec, M_orders: int) -> MCReport:
    """N Cov(<L, x^k>, <L, x^l>) for k, l <= M_orders against the recursion."""
    p = spec.params
    M = spec.replicas
    target = sigma_matrix(p, M_orders)
    polys = [Polynomial([0.0] * k + [1.0]) for k in range(1, M_orders + 1)]
    main, _ = _streams(spec)
    vals = _statistics(p, main, M, polys, spec.chunk)
    emp = p.N * np.cov(vals, rowvar=False, ddof=1).reshape(M_orders, M_orders)
    emp = 0.5 * (emp + emp.T)
    d = np.diag(target)
    se = np.sqrt((np.outer(d, d) + target ** 2) / M)
    rep = MCReport("covariance", _param_dict(p), M, spec.seed,
                   notes=["SE of entry (k,l) = sqrt((s_kk s_ll + s_kl^2)/M) (Gaussian)"])
    rep.matrices = {"empirical": emp, "target": target, "se": se}
    for k in range(M_orders):
        for l in range(k, M_orders):
            tol = 4.0 * se[k, l]
            rep.entries.append({
                "k": k + 1, "l": l + 1,
                "empirical": float(emp[k, l]), "target": float(target[k, l]),
                "se": float(se[k, l]), "tolerance": tol,
                "passed": bool(abs(emp[k, l] - target[k, l]) <= tol),
            })
    return rep


def run_independence(spec: ExperimentSpec, n_max: int, diag_tol: float = 1e-8) -> MCReport:
    """Pairwise correlations of the rescaled P~_n statistics plus the C Sigma C^T check."""
    p = spec.params
    M = spec.replicas
    rep = MCReport("independence", _param_dict(p), M, spec.seed,
                   notes=["pair threshold 4/sqrt(M) + bias allowance"])
    dg = diagonalization_check(p, n_max + 1, tol=diag_tol)
    rep.matrices["C_Sigma_Ct"] = dg.product
    rep.entries.append({
        "check": "C Sigma C^T", "max_offdiag": dg.max_offdiag, "max_diag_error": dg.max_diag_error,
        "tolerance": diag_tol, "passed": bool(dg.passed),
    })
    if n_max < 1:
        return rep
    polys = orthonormal_primitives(p, n_max)
    centers = _centers(polys, p)
    main, paired = _streams(spec)
    x = _rescaled(p, main, M, polys, centers, spec.chunk)
    rho = np.corrcoef(x, rowvar=False)
    if spec.bias_pairing:
        x2 = _rescaled(p.with_N(2 * p.N), paired, M, polys, centers, spec.chunk)
        rho2 = np.corrcoef(x2, rowvar=False)
    rep.matrices["correlation"] = rho
    base = 4.0 / math.sqrt(M)
    for i in range(n_max + 1):
        for j in range(i + 1, n_max + 1):
            allowance = PAIRING_FACTOR * abs(rho[i, j] - rho2[i, j]) if spec.bias_pairing else 0.0
            tol = float(base + allowance)
            rep.entries.append({
                "pair": [i, j], "rho": float(rho[i, j]),
                "rho_2N": float(rho2[i, j]) if spec.bias_pairing else None,
                "bias_allowance": allowance, "tolerance": tol,
                "passed": bool(abs(rho[i, j]) <= tol),
            })
    return rep


def run_lln(spec: ExperimentSpec, kmax: int = 6) -> MCReport:
    """Replica means of <L, x^k> against u_k; the finite-N offset is computed exactly."""
    p = spec.params
    M = spec.replicas
    u = moments_u(p, kmax)
    polys = [Polynomial([0.0] * k + [1.0]) for k in range(kmax + 1)]
    main, _ = _streams(spec)
    vals = _statistics(p, main, M, polys, spec.chunk)
    kappa = exact_moments.as_fraction(p.c) / p.N
    a, b = exact_moments.as_fraction(p.a), exact_moments.as_fraction(p.b)
    rep = MCReport("lln", _param_dict(p), M, spec.seed,
                   notes=["threshold 4 SE + |E<L,x^k> - u_k|, the offset from exact rational expectation"])
    for k in range(kmax + 1):
        mean = float(vals[:, k].mean())
        se = float(vals[:, k].std(ddof=1) / math.sqrt(M))
        exact_mean = float(exact_moments.mean_moment(k, p.N, kappa, a, b)) if k else 1.0
        offset = abs(exact_mean - float(u[k]))
        tol = 4.0 * se + offset
        rep.entries.append({
            "k": k, "mean": mean, "u_k": float(u[k]), "exact_finite_N_mean": exact_mean,
            "se": se, "finite_N_offset": offset, "tolerance": tol,
            "passed": bool(abs(mean - u[k]) <= tol),
        })
    return rep
