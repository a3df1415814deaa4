"""Euler-Maruyama simulation of stationary beta Jacobi processes.

Particles follow

    d lambda_i = sqrt(2 lambda_i (1 - lambda_i)) db_i
                 + (a + 1 - (a + b + 2) lambda_i
                    + (beta / 2) sum_{j != i} 2 lambda_i (1 - lambda_i) / (lambda_i - lambda_j)) dt

started from the beta Jacobi ensemble, so the process is stationary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from .distributions import split
from .ensembles import ModelParams, sample_eigenvalues
from .errors import ParameterError
from .limit_measure import moments_u

__all__ = [
    "ProcessConfig",
    "ProcessPath",
    "simulate",
    "simulate_observables",
    "moment_process",
    "fluctuation_process",
    "nu_c_integral",
    "martingale_qv_check",
    "autocovariance",
    "fit_decay_rate",
    "stationary_diagnostics",
    "diagnostics_from_observables",
    "observable_polys",
]


@dataclass(frozen=True)
class ProcessConfig:
    """Discretisation settings.

    ``collision_eps`` floors pairwise gaps in the interaction drift. The
    default, sqrt(dt) / 10, keeps a single interaction kick below the
    per-step noise; None selects it.
    """

    params: ModelParams
    T: float
    dt: float = 1e-3
    boundary_eps: float = 1e-12
    collision_eps: float | None = None
    noise: bool = True
    interaction: bool = True
    record_every: int = 1

    def __post_init__(self):
        self.params.require_process_range()
        if not self.T > 0:
            raise ParameterError("T must be positive")
        if not 0 < self.dt <= 1e-3:
            raise ParameterError("dt must lie in (0, 1e-3]")
        if not 0 < self.boundary_eps <= 1e-8:
            raise ParameterError("boundary_eps must lie in (0, 1e-8]")
        if self.collision_eps is None:
            object.__setattr__(self, "collision_eps", 0.1 * math.sqrt(self.dt))
        if not self.collision_eps > 0:
            raise ParameterError("collision_eps must be positive")
        if int(self.record_every) < 1:
            raise ParameterError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def record_times(self) -> np.ndarray:
        idx = np.arange(0, self.n_steps + 1, self.record_every)
        return idx * self.dt


@dataclass
class ProcessPath:
    times: np.ndarray
    states: np.ndarray  # (len(times), N), rows sorted ascending
    brownian_increments: np.ndarray | None  # (len(times) - 1, N), aligned with states[:-1]
    config: ProcessConfig


@numba.njit(cache=True)
def _em_step(lam, dW, a, b, half_beta, dt, beps, ceps, noise, interaction):
    """One Euler-Maruyama step on every row of ``lam`` (in place).

    Returns the first row index with a non-finite update, or -1.
    """
    B, N = lam.shape
    inter = np.zeros(N)
    for r in range(B):
        x = lam[r]
        if interaction:
            inter[:] = 0.0
            for i in range(N):
                for j in range(i + 1, N):
                    g = x[i] - x[j]
                    if abs(g) < ceps:
                        g = -ceps if g < 0 else ceps
                    inv = 1.0 / g
                    inter[i] += inv
                    inter[j] -= inv
        bad = False
        for i in range(N):
            v = x[i] * (1.0 - x[i])
            if v < 0.0:
                v = 0.0
            drift = a + 1.0 - (a + b + 2.0) * x[i]
            if interaction:
                drift += half_beta * 2.0 * v * inter[i]
            y = x[i] + drift * dt
            if noise:
                y += math.sqrt(2.0 * v) * dW[r, i]
            if not math.isfinite(y):
                bad = True
            if y < beps:
                y = beps
            elif y > 1.0 - beps:
                y = 1.0 - beps
            x[i] = y
        if bad:
            return r
        x.sort()
    return -1


def _advance(lam, dW, cfg: ProcessConfig, step: int):
    p = cfg.params
    bad = _em_step(lam, dW, float(p.a), float(p.b), float(p.beta) / 2.0, cfg.dt,
                   cfg.boundary_eps, cfg.collision_eps, cfg.noise, cfg.interaction)
    if bad >= 0:
        raise FloatingPointError(f"non-finite state at step {step} (replica {bad})")


def simulate(config: ProcessConfig, rng: np.random.Generator, x0=None) -> ProcessPath:
    """One stationary path; the initial state and the noise use independent streams."""
    init_rng, noise_rng = split(rng, 2)
    N = config.params.N
    if x0 is None:
        lam = sample_eigenvalues(config.params, init_rng, 1)
    else:
        lam = np.sort(np.asarray(x0, dtype=float)).reshape(1, N).copy()
    sqdt = math.sqrt(config.dt)
    keep = config.record_every == 1
    times = config.record_times
    states = np.empty((times.size, N))
    states[0] = lam[0]
    incs = np.empty((config.n_steps, N)) if keep else None
    rec = 1
    for step in range(1, config.n_steps + 1):
        dW = noise_rng.standard_normal((1, N)) * sqdt
        if keep:
            incs[step - 1] = dW[0]
        _advance(lam, dW, config, step)
        if step % config.record_every == 0:
            states[rec] = lam[0]
            rec += 1
    return ProcessPath(times, states, incs, config)


def _power_sums(lam, polys):
    return np.stack([npoly.polyval(lam, P.coef).mean(axis=-1) for P in polys], axis=-1)


def simulate_observables(config: ProcessConfig, rng: np.random.Generator, replicas: int,
                         polys, chunk: int = 250):
    """Simulate ``replicas`` independent stationary paths, keeping only <mu_t, P>.

    Returns ``(times, values)`` with ``values`` of shape
    (replicas, len(times), len(polys)). Each chunk of replicas owns one
    child stream, so results depend on (seed, chunk) only.
    """
    if replicas < 1:
        raise ParameterError("need at least one replica")
    polys = [P if isinstance(P, Polynomial) else Polynomial(P) for P in polys]
    N = config.params.N
    times = config.record_times
    out = np.empty((replicas, times.size, len(polys)))
    sqdt = math.sqrt(config.dt)
    starts = list(range(0, replicas, chunk))
    for start, child in zip(starts, split(rng, len(starts))):
        B = min(chunk, replicas - start)
        init_rng, noise_rng = split(child, 2)
        lam = sample_eigenvalues(config.params, init_rng, B)
        block = out[start : start + B]
        block[:, 0] = _power_sums(lam, polys)
        rec = 1
        for step in range(1, config.n_steps + 1):
            dW = noise_rng.standard_normal((B, N)) * sqdt
            _advance(lam, dW, config, step)
            if step % config.record_every == 0:
                block[:, rec] = _power_sums(lam, polys)
                rec += 1
    return times, out


def moment_process(path: ProcessPath, k: int) -> np.ndarray:
    """S_k(t) = N^{-1} sum_i lambda_i(t)^k on the path grid."""
    if k < 0:
        raise ParameterError("k must be >= 0")
    return (path.states ** k).mean(axis=1)


def nu_c_integral(P: Polynomial, params) -> float:
    u = moments_u(params, max(P.degree(), 0))
    return float(np.dot(P.coef, u[: P.coef.size]))


def fluctuation_process(path: ProcessPath, P: Polynomial, params=None) -> np.ndarray:
    """sqrt(N) (<mu_t, P> - <nu_c, P>) on the path grid."""
    params = params or path.config.params
    vals = npoly.polyval(path.states, P.coef).mean(axis=1)
    return math.sqrt(path.config.params.N) * (vals - nu_c_integral(P, params))


def _moments_along(states, K):
    return np.stack([(states ** k).mean(axis=1) for k in range(K + 1)], axis=1)


def _drift_of_f(states, f: Polynomial, params, N):
    """Drift of <mu_t, f> from the Ito expansion, evaluated at each state."""
    a, b, c = float(params.a), float(params.b), float(params.c)
    x = Polynomial([0.0, 1.0])
    fp = f.deriv()
    local = (a + 1) * fp - (a + b + 2) * x * fp + x * (1 - x) * fp.deriv()
    h = x * (1 - x) * fp
    deg = max(h.degree(), local.degree(), 1)
    m = _moments_along(states, deg)
    drift = m[:, : local.coef.size] @ local.coef
    # double integral of (h(x) - h(y)) / (x - y) against mu x mu, via moments
    hc = h.coef
    for j in range(1, hc.size):
        for i in range(j):
            drift = drift + c * hc[j] * m[:, i] * m[:, j - 1 - i]
    hp = h.deriv()
    drift = drift - (c / N) * (m[:, : hp.coef.size] @ hp.coef)
    return drift


@dataclass
class QVReport:
    realized: float
    predicted: float
    direct: float
    rel_error: float
    rel_error_direct: float
    passed: bool

    def as_dict(self):
        return dict(self.__dict__)


def martingale_qv_check(path: ProcessPath, f, params=None, tol: float = 0.05) -> QVReport:
    """Compare the realised quadratic variation of the martingale part of <mu_t, f>
    with (1/N) int_0^T <mu_s, 2x(1-x) f'(x)^2> ds.

    The martingale increments are reconstructed from the path by removing
    the Ito drift. ``direct`` is the same sum formed from the stored Brownian
    increments.
    """
    if path.brownian_increments is None:
        raise ParameterError("path does not retain Brownian increments (record_every must be 1)")
    f = f if isinstance(f, Polynomial) else Polynomial(f)
    params = params or path.config.params
    N = path.config.params.N
    dt = path.config.dt
    S = path.states
    F = npoly.polyval(S, f.coef).mean(axis=1)
    dM = np.diff(F) - _drift_of_f(S[:-1], f, params, N) * dt
    realized = float(np.sum(dM ** 2))
    fp = f.deriv()
    x = Polynomial([0.0, 1.0])
    integrand = npoly.polyval(S[:-1], (2 * x * (1 - x) * fp * fp).coef).mean(axis=1) / N
    predicted = float(np.sum(integrand) * dt)
    lam = S[:-1]
    sig = np.sqrt(2 * np.clip(lam * (1 - lam), 0, None)) * npoly.polyval(lam, fp.coef)
    direct = float(np.sum((np.sum(sig * path.brownian_increments, axis=1) / N) ** 2))
    if predicted == 0.0:
        rel, rel_d = abs(realized), abs(direct)
    else:
        rel = abs(realized - predicted) / predicted
        rel_d = abs(direct - predicted) / predicted
    return QVReport(realized, predicted, direct, rel, rel_d, rel <= tol)


def autocovariance(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Stationary autocovariance at lags 0..max_lag.

    ``series`` has shape (replicas, times); averages run over replicas and
    all admissible time origins after removing the grand mean.
    """
    x = np.atleast_2d(np.asarray(series, dtype=float))
    x = x - x.mean()
    T = x.shape[1]
    if max_lag >= T:
        raise ParameterError("max_lag must be smaller than the series length")
    return np.array([np.mean(x[:, : T - k] * x[:, k:]) for k in range(max_lag + 1)])


def fit_decay_rate(acov: np.ndarray, lag_dt: float, min_corr: float = 0.3) -> float:
    """Exponential decay rate from a log-linear least-squares fit.

    Uses the leading run of lags whose autocorrelation stays above ``min_corr``.
    """
    rho = acov / acov[0]
    stop = np.argmax(rho < min_corr) if np.any(rho < min_corr) else rho.size
    if stop < 3:
        raise ParameterError("too few lags above the correlation threshold; refine the grid")
    lags = np.arange(stop) * lag_dt
    slope, _ = np.polyfit(lags, np.log(rho[:stop]), 1)
    return float(-slope)


def observable_polys(params, kmax: int = 4, n_list=(0, 1)):
    """Monomials x..x^kmax followed by the orthonormal primitives P~_n, n in n_list."""
    from .orthopoly import orthonormal_primitives

    prims = orthonormal_primitives(params, max(n_list)) if n_list else []
    monos = [Polynomial([0.0] * k + [1.0]) for k in range(1, kmax + 1)]
    return monos + [prims[n] for n in n_list]


def stationary_diagnostics(config: ProcessConfig, rng: np.random.Generator, replicas: int,
                           kmax: int = 4, n_list=(0, 1), chunk: int = 250, **kw) -> dict:
    polys = observable_polys(config.params, kmax, n_list)
    times, vals = simulate_observables(config, rng, replicas, polys, chunk=chunk)
    return diagnostics_from_observables(config, times, vals, kmax, n_list, **kw)


def diagnostics_from_observables(config: ProcessConfig, times, vals, kmax: int = 4, n_list=(0, 1),
                                 decay_tol: float = 0.15, min_corr: float = 0.3) -> dict:
    """Stationarity, OU decay and equal-time independence from one batch of paths.

    ``vals`` is laid out as produced by ``simulate_observables`` with
    ``observable_polys(params, kmax, n_list)``.

    Stationarity: replica means of S_k at t = 0, T/2, T agree pairwise within
    4 SE of their difference, and each lies within 4 SE of the exact finite-N
    stationary mean (u_k is reported alongside).
    """
    from . import exact_moments
    from .limit_measure import gamma_n

    p = config.params
    polys = observable_polys(p, kmax, n_list)
    M = vals.shape[0]
    idx = [0, (times.size - 1) // 2, times.size - 1]
    u = moments_u(p, kmax)
    kappa = exact_moments.as_fraction(p.c) / p.N
    fa, fb = exact_moments.as_fraction(p.a), exact_moments.as_fraction(p.b)
    stat_rows = []
    for k in range(1, kmax + 1):
        S = vals[:, :, k - 1]
        means = S[:, idx].mean(axis=0)
        ses = S[:, idx].std(axis=0, ddof=1) / math.sqrt(M)
        exact = float(exact_moments.mean_moment(k, p.N, kappa, fa, fb))
        pair_ok = True
        pair_z = []
        for i in range(3):
            for j in range(i + 1, 3):
                d = S[:, idx[i]] - S[:, idx[j]]
                se = d.std(ddof=1) / math.sqrt(M)
                z = abs(d.mean()) / se if se > 0 else 0.0
                pair_z.append(float(z))
                pair_ok &= z <= 4.0
        exact_ok = bool(np.all(np.abs(means - exact) <= 4.0 * ses))
        stat_rows.append({
            "k": k, "times": times[idx].tolist(), "means": means.tolist(), "se": ses.tolist(),
            "pairwise_z": pair_z, "exact_finite_N_mean": exact, "u_k": float(u[k]),
            "passed": bool(pair_ok and exact_ok),
        })
    lag_dt = config.dt * config.record_every
    ou_rows = []
    fl = {}
    for j, n in enumerate(n_list):
        P = polys[kmax + j]
        series = math.sqrt(p.N) * (vals[:, :, kmax + j] - nu_c_integral(P, p))
        fl[n] = series
        g = gamma_n(p, n)
        max_lag = min(series.shape[1] - 1, int(math.ceil(3.0 / (g * lag_dt))))
        acov = autocovariance(series, max_lag)
        rate = fit_decay_rate(acov, lag_dt, min_corr)
        ou_rows.append({
            "n": n, "gamma_n": g, "fitted_rate": rate, "rel_error": abs(rate - g) / g,
            "variance": float(acov[0]), "passed": bool(abs(rate - g) <= decay_tol * g),
        })
    corr_rows = []
    if len(n_list) >= 2:
        s0, s1 = fl[n_list[0]], fl[n_list[1]]
        thr = 4.0 / math.sqrt(M)
        for i in idx:
            rho = float(np.corrcoef(s0[:, i], s1[:, i])[0, 1])
            corr_rows.append({"t": float(times[i]), "rho": rho, "threshold": thr,
                              "passed": bool(abs(rho) <= thr)})
    ok = all(r["passed"] for r in stat_rows + ou_rows + corr_rows)
    return {"stationarity": stat_rows, "decay": ou_rows, "cross_correlation": corr_rows,
            "replicas": M, "passed": bool(ok)}
