import json

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from betajacobi.clt_harness import (
    ExperimentSpec, run_clt, run_covariance, run_independence, run_lln, target_variance,
)
from betajacobi.ensembles import ModelParams
from betajacobi.errors import ParameterError
from betajacobi.limit_measure import sigma2_tilde_P, sigma_matrix


def test_spec_validation():
    with pytest.raises(ParameterError):
        ExperimentSpec(ModelParams(0, 0, 1, 50), 99)
    with pytest.raises(ParameterError):
        ExperimentSpec(ModelParams(0, 0, 1, 9), 100)
    with pytest.raises(ParameterError):
        ExperimentSpec(ModelParams(0, 0, 1, 50, beta=0.5), 100)


def test_constant_statistic_degenerate():
    rep = run_clt(ExperimentSpec(ModelParams(0, 0, 1, 20), 100, (Polynomial([3.0]),)))
    e = rep.entries[0]
    assert e["variance"] == 0 and e["target_variance"] == 0 and e["passed"]


def test_target_variance_matches_orthonormal():
    from betajacobi.orthopoly import orthonormal_primitives

    p = ModelParams(1, 0.5, 2, 20)
    for n, P in enumerate(orthonormal_primitives(p, 3)):
        assert target_variance(P, p) == pytest.approx(sigma2_tilde_P(p, n), rel=1e-9)


def test_clt_small_run_passes_and_reproduces():
    spec = ExperimentSpec(ModelParams(0, 0, 1, 40), 600, (0, 1), seed=3)
    r1, r2 = run_clt(spec), run_clt(spec)
    assert r1.to_json() == r2.to_json()
    assert r1.passed
    assert [e["target_variance"] for e in r1.entries] == pytest.approx([0.0375, 0.015])
    d = json.loads(r1.to_json())
    assert d["kind"] == "clt" and any("sqrt(2/M)" in n for n in d["notes"])
    for e in r1.entries:
        assert e["tolerance"] == pytest.approx(3 * e["variance_se"] + e["bias_allowance"])


def test_empirical_centering_uses_sample_variance():
    base = ExperimentSpec(ModelParams(0, 0, 1, 40), 300, (0,), seed=4, bias_pairing=False)
    emp = ExperimentSpec(ModelParams(0, 0, 1, 40), 300, (0,), seed=4, bias_pairing=False,
                         empirical_centering=True)
    a, b = run_clt(base).entries[0], run_clt(emp).entries[0]
    m = a["mean"]
    # mean of squares = (M-1)/M * sample variance + mean^2
    assert a["variance"] == pytest.approx((299 / 300) * b["variance"] + m ** 2, rel=1e-12)
    assert a["bias_allowance"] == 0


def test_covariance_symmetric_point():
    rep = run_covariance(ExperimentSpec(ModelParams(0, 0, 1, 100), 1500, seed=5), 1)
    assert rep.entries[0]["target"] == pytest.approx(0.0375)
    assert rep.passed


def test_covariance_full():
    p = ModelParams(1, 0.5, 2, 100)
    rep = run_covariance(ExperimentSpec(p, 1500, seed=6), 3)
    E = rep.matrices["empirical"]
    assert np.array_equal(E, E.T)
    assert np.allclose(rep.matrices["target"], sigma_matrix(p, 3))
    assert rep.passed


def test_independence_trivial_and_diagonalisation():
    rep = run_independence(ExperimentSpec(ModelParams(0, 0, 1, 20), 100), 0)
    assert rep.passed and len(rep.entries) == 1
    rep = run_independence(ExperimentSpec(ModelParams(1, 0.5, 2, 20), 100), 3)
    assert rep.entries[0]["max_offdiag"] <= 1e-8


def test_independence_small_run():
    rep = run_independence(ExperimentSpec(ModelParams(0, 0, 1, 50), 800, seed=7), 2)
    assert rep.passed
    assert len(rep.entries) == 1 + 3


def test_lln():
    rep = run_lln(ExperimentSpec(ModelParams(0, 0, 1, 1000), 200, seed=8))
    assert rep.entries[0]["mean"] == 1.0
    assert rep.entries[1]["u_k"] == pytest.approx(0.5) and rep.entries[2]["u_k"] == pytest.approx(0.35)
    assert rep.passed


def test_lln_asymmetric_offset_is_exact():
    rep = run_lln(ExperimentSpec(ModelParams(1, 0, 1, 20), 400, seed=9), kmax=3)
    assert rep.entries[1]["finite_N_offset"] > 0
    assert rep.passed
