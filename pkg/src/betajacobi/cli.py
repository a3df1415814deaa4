"""Command-line entry point.

Every subcommand produces a table of rows plus an overall pass flag. CSV
output writes the table; JSON output writes ``{"passed", "rows", ...}``
with the same numbers. Floats are printed with 17 significant digits.
Exit status: 0 pass, 1 a check failed, 2 usage or parameter error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import clt_harness, ensembles, exact_moments, limit_measure, orthopoly, process_sim
from .distributions import make_rng, split
from .errors import ParameterError
from .tridiag import spectral_measure

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return repr(x)
        return float(format(x, ".17g"))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_num(v) for v in x]
    return x


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (list, tuple)):
        return ";".join(_cell(v) for v in x)
    return str(x)


class Result:
    def __init__(self, columns, rows, passed=True, extra=None):
        self.columns = list(columns)
        self.rows = rows
        self.passed = bool(passed)
        self.extra = extra or {}

    def render(self, fmt: str) -> str:
        if fmt == "json":
            body = {"passed": self.passed, "columns": self.columns,
                    "rows": [dict(zip(self.columns, _num(list(r)))) for r in self.rows]}
            body.update(_num(self.extra))
            return json.dumps(body, indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()


# -- subcommands -------------------------------------------------------------

def _model(o) -> ensembles.ModelParams:
    return ensembles.ModelParams(float(o["a"]), float(o["b"]), float(o["c"]), int(o["N"]),
                                 None if o.get("beta") is None else float(o["beta"]))


def _limit(o) -> limit_measure.LimitParams:
    return limit_measure.LimitParams(float(o["a"]), float(o["b"]), float(o["c"]))


def cmd_limit_moments(o):
    u = limit_measure.moments_u(_limit(o), int(o["kmax"]))
    return Result(["k", "u_k"], [(k, float(u[k])) for k in range(1, int(o["kmax"]) + 1)])


def cmd_sigma(o):
    S = limit_measure.sigma_matrix(_limit(o), int(o["M"]))
    m = S.shape[0]
    rows = [(k + 1, l + 1, float(S[k, l])) for k in range(m) for l in range(m)]
    return Result(["k", "l", "sigma"], rows)


def cmd_sample_ensemble(o):
    p = _model(o)
    rng = make_rng(o["seed"])
    M = int(o.get("replicas") or 1)
    rows = []
    if o.get("measure") == "spectral":
        for r, child in enumerate(split(rng, M)):
            mu = spectral_measure(ensembles.sample_tridiagonal(p, child))
            rows += [(r, float(x), float(w)) for x, w in zip(mu.locations, mu.weights)]
        return Result(["replica", "location", "weight"], rows)
    lam = ensembles.sample_eigenvalues(p, rng, M)
    rows = [(r, i, float(lam[r, i])) for r in range(M) for i in range(p.N)]
    return Result(["replica", "index", "eigenvalue"], rows)


def _entry_columns(entries):
    cols = []
    for e in entries:
        for k in e:
            if k not in cols:
                cols.append(k)
    return cols


def cmd_clt(o):
    p = _model(o)
    check = o.get("check") or "variance"
    n_max = int(o["n_max"]) if o.get("n_max") is not None else 1
    spec = clt_harness.ExperimentSpec(
        p, int(o.get("replicas") or 2000), tuple(range(n_max + 1)), int(o["seed"]),
        empirical_centering=bool(o.get("empirical_centering")),
        bias_pairing=not o.get("no_pairing"))
    if check == "variance":
        rep = clt_harness.run_clt(spec)
    elif check == "independence":
        rep = clt_harness.run_independence(spec, n_max)
    elif check == "covariance":
        rep = clt_harness.run_covariance(spec, int(o.get("orders") or 3))
    elif check == "lln":
        rep = clt_harness.run_lln(spec, int(o.get("kmax") or 6))
    else:
        raise UsageError(f"argument --check: unknown check {check!r}")
    cols = _entry_columns(rep.entries)
    rows = [[e.get(c) for c in cols] for e in rep.entries]
    d = rep.to_dict()
    return Result(cols, rows, rep.passed,
                  {"report": {k: d[k] for k in ("kind", "params", "replicas", "seed", "matrices", "notes")}})


def cmd_process(o):
    p = _model(o)
    kmax = int(o.get("kmax") or 4)
    cfg = process_sim.ProcessConfig(
        p, float(o.get("T") or 1.0), float(o.get("dt") or 1e-3),
        collision_eps=None if o.get("collision_eps") is None else float(o["collision_eps"]),
        record_every=int(o.get("record_every") or 1))
    M = int(o.get("replicas") or 1)
    n_list = (0, 1)
    polys = process_sim.observable_polys(p, kmax, n_list)
    times, vals = process_sim.simulate_observables(cfg, make_rng(o["seed"]), M, polys)
    rows = [(r, float(t), *[float(v) for v in vals[r, i, :kmax]])
            for r in range(M) for i, t in enumerate(times)]
    cols = ["replica", "t"] + [f"S_{k}" for k in range(1, kmax + 1)]
    passed, extra = True, {}
    if M >= 2 and not o.get("no_diagnostics"):
        diag = process_sim.diagnostics_from_observables(cfg, times, vals, kmax, n_list)
        passed = diag["passed"]
        extra = {"diagnostics": diag}
        if o.get("diagnostics"):
            with open(o["diagnostics"], "w") as fh:
                json.dump(_num(diag), fh, indent=2)
    return Result(cols, rows, passed, extra)


def cmd_duality(o):
    ks = [int(o["k"])]
    N = exact_moments.as_fraction(o["N"])
    if N.denominator != 1:
        raise ParameterError("N must be an integer")
    args = [exact_moments.as_fraction(o[key]) for key in ("kappa", "a", "b")]
    rows, ok = [], True
    for k in ks:
        res = exact_moments.duality_check(k, int(N), *args)
        rows.append((k, res.lhs, res.rhs, res.equal))
        ok &= res.equal
    return Result(["k", "lhs", "rhs", "equal"], rows, ok)


def cmd_ortho_check(o):
    p = _limit(o)
    tol = float(o.get("tol") or 1e-9)
    res = orthopoly.check_eigen_relation(p, int(o.get("n_max") or 10), tol=tol)
    rows = [(r.n, r.gamma_n, r.residual, r.norm_sq, r.alpha_tilde_sq, r.passed) for r in res]
    return Result(["n", "gamma_n", "residual", "norm_sq", "alpha_tilde_sq", "passed"], rows,
                  all(r.passed for r in res))


def cmd_low_temp_check(o):
    lp = ensembles.LowTempParams(float(o["A"]), float(o["B"]), int(o["N"]))
    tol = float(o.get("tol") or 1e-10)
    T, _, _ = ensembles.low_temp_matrices(lp)
    from .tridiag import eig_with_first_components

    ev, _ = eig_with_first_components(T)
    eig_err = float(np.abs(np.sort(ev) - ensembles.jacobi_zeros(lp)).max())
    lem = float(np.abs(ensembles.dual_entry_residuals(lp, int(o.get("n_max") or 8))).max())
    rows = [("eigenvalues_vs_jacobi_zeros", eig_err, eig_err <= tol),
            ("dual_entry_identity", lem, lem <= tol)]
    return Result(["check", "max_error", "passed"], rows, all(r[2] for r in rows))


COMMANDS = {
    "limit-moments": (cmd_limit_moments, ["a", "b", "c", "kmax"]),
    "sample-ensemble": (cmd_sample_ensemble, ["a", "b", "c", "N"]),
    "clt": (cmd_clt, ["a", "b", "c", "N"]),
    "process": (cmd_process, ["a", "b", "c", "N"]),
    "duality": (cmd_duality, ["k", "N", "kappa", "a", "b"]),
    "ortho-check": (cmd_ortho_check, ["a", "b", "c"]),
    "low-temp-check": (cmd_low_temp_check, ["A", "B", "N"]),
    "sigma": (cmd_sigma, ["a", "b", "c", "M"]),
}


def build_parser() -> _Parser:
    ap = _Parser(prog="betajacobi", description="High-temperature beta Jacobi ensembles")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--output")
        sp.add_argument("--config")

    def abc(sp, with_N=False, beta=False):
        sp.add_argument("--a", type=float)
        sp.add_argument("--b", type=float)
        sp.add_argument("--c", type=float)
        if with_N:
            sp.add_argument("--N", type=int)
        if beta:
            sp.add_argument("--beta", type=float)

    sp = sub.add_parser("limit-moments", help="moments u_k of the limiting measure")
    common(sp); abc(sp)
    sp.add_argument("--kmax", type=int)

    sp = sub.add_parser("sigma", help="limiting covariance matrix of rescaled moments")
    common(sp); abc(sp)
    sp.add_argument("--M", type=int)

    sp = sub.add_parser("sample-ensemble", help="draw eigenvalues from the tridiagonal model")
    common(sp); abc(sp, with_N=True, beta=True)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--measure", choices=["eigenvalues", "spectral"])

    sp = sub.add_parser("clt", help="Monte Carlo LLN / CLT checks")
    common(sp); abc(sp, with_N=True)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--check", choices=["variance", "independence", "covariance", "lln"])
    sp.add_argument("--orders", type=int)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--empirical-centering", action="store_true", default=None)
    sp.add_argument("--no-pairing", action="store_true", default=None)

    sp = sub.add_parser("process", help="simulate the stationary particle process")
    common(sp); abc(sp, with_N=True)
    sp.add_argument("--T", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--record-every", type=int)
    sp.add_argument("--collision-eps", type=float)
    sp.add_argument("--diagnostics", help="write the diagnostics JSON here")
    sp.add_argument("--no-diagnostics", action="store_true", default=None)

    sp = sub.add_parser("duality", help="exact moment duality between the two Beta models")
    common(sp)
    for name in ("k", "N", "kappa", "a", "b"):
        sp.add_argument(f"--{name}")

    sp = sub.add_parser("ortho-check", help="eigen-relation of the orthogonal polynomials")
    common(sp); abc(sp)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--tol", type=float)

    sp = sub.add_parser("low-temp-check", help="low-temperature matrix identities")
    common(sp)
    sp.add_argument("--A", type=float)
    sp.add_argument("--B", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--tol", type=float)
    return ap


def _subparser(ap, name):
    for action in ap._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _merge(ap, args) -> dict:
    opts = {k: v for k, v in vars(args).items() if v is not None}
    merged = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"argument --config: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("argument --config: expected a JSON object")
        known = {a.dest for a in _subparser(ap, args.command)._actions} - {"help", "config"}
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if dest not in known:
                raise UsageError(f"argument --config: unknown key {key!r}")
            merged[dest] = val
    merged.update(opts)
    merged.setdefault("seed", 0)
    merged.setdefault("format", "csv")
    if merged["format"] not in ("csv", "json"):
        raise UsageError("argument --format: must be csv or json")
    return merged


def dispatch(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        opts = _merge(ap, args)
        func, required = COMMANDS[args.command]
        missing = [r for r in required if opts.get(r) is None]
        if missing:
            raise UsageError("missing required flag(s): " + ", ".join("--" + m for m in missing))
        result = func(opts)
    except (UsageError, ParameterError, ValueError, ZeroDivisionError) as exc:
        print(f"betajacobi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = result.render(opts["format"])
    if opts.get("output"):
        with open(opts["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if result.passed else EXIT_FAIL


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
