import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from align1d import Kernel, classify, two_block_scenario
from align1d.bounds import (CONVOLUTION_UNIFORM, DEFORMATION_LOWER, EXISTENCE_TIME,
                            SEPARATION_LIMINF, SEPARATION_LOWER_SINGULAR,
                            SEPARATION_LOWER_SMOOTH, SEPARATION_UPPER,
                            analytic_convolution_constant, certify, convolution_bound,
                            deformation_lower, separation_lower_singular,
                            separation_lower_smooth, separation_upper)
from align1d.dynamics import integrate
from align1d.errors import HypothesisViolated, NotAdmissible
from align1d.threshold import fit_modulus, modulus_check

from conftest import prepared, singular_fixture, unit_scenario


def test_deformation_lower_values():
    assert deformation_lower(0.0, 0.3, 2.0) == 1.0
    assert deformation_lower(7.0, 2.0, 2.0) == pytest.approx(1.0)
    assert deformation_lower(math.log(2), 0.0, 1.0) == pytest.approx(0.5)


def test_separation_lower_smooth_values():
    assert separation_lower_smooth(0.0, 0.1, 0.2, 1.0) == 0.1
    assert separation_lower_smooth(60.0, 0.1, 0.2, 2.0) == pytest.approx(0.1)
    exact = 0.1 * math.exp(-1) + 0.2 * (1 - math.exp(-1))
    assert separation_lower_smooth(1.0, 0.1, 0.2, 1.0) == pytest.approx(exact, abs=1e-15)
    assert exact == pytest.approx(0.163212, abs=1e-6)


def test_separation_lower_singular_values():
    b = separation_lower_singular(5.0, 2 * math.sqrt(2), 0.5, 1.0, 1.0, 10.0)
    assert b.inf_bound == pytest.approx(1.0, abs=1e-14)
    b = separation_lower_singular(0.3, 0.0, 0.5, 1.0, 1.0, 10.0)
    assert b.inf_bound == 0.0
    b = separation_lower_singular(0.01, 2 * math.sqrt(2), 0.5, 1.0, 1.0, 10.0)
    assert b.increases and b.liminf_bound == pytest.approx(1.0)


def test_separation_upper_values():
    assert separation_upper(0.2, 0.3, 0.0, 1.0, 1.0, 1.0) == pytest.approx(0.3)
    assert separation_upper(0.2, 0.0, 0.25, 1.0, 1.0, 1.0) == 0.2
    with pytest.raises(HypothesisViolated) as exc:
        separation_upper(2.0, 0.1, 0.0, 1.0, 1.0, 1.0)
    assert exc.value.clause == "d0 > R0"


@settings(max_examples=50, deadline=None)
@given(d0=st.floats(1e-3, 1), g=st.floats(0, 2), K=st.floats(0.1, 5),
       t1=st.floats(0, 10), t2=st.floats(0, 10))
def test_smooth_lower_is_monotone_in_time_toward_limit(d0, g, K, t1, t2):
    a, b = sorted((t1, t2))
    lo, hi = sorted((d0, g / K))
    va, vb = separation_lower_smooth(a, d0, g, K), separation_lower_smooth(b, d0, g, K)
    assert lo - 1e-12 <= vb <= hi + 1e-12
    assert abs(vb - g / K) <= abs(va - g / K) + 1e-12


def test_convolution_constant_admissibility():
    sc = unit_scenario(Kernel.powerlaw(0.25))
    C, params = analytic_convolution_constant(sc, 2.0, 0.25, 0.1)
    assert math.isfinite(C) and params["mu"] * params["s"] / (1 - params["s"]) < 1
    with pytest.raises(NotAdmissible):
        analytic_convolution_constant(sc, 3.0, 0.25, 0.1)


def test_constant_kernel_convolution_is_kappa_mass():
    sc = unit_scenario(kappa=1.5, n=20)
    m = prepared(sc)
    cb = convolution_bound(m, sc)
    assert cb.sup_alpha_value <= cb.C_analytic
    assert cb.C_analytic == pytest.approx(1.5)


def _run(sc, T, **kw):
    m = prepared(sc)
    rec = integrate(m.copy(), sc.kernel, sc.kappa, T=T, **kw)
    return m, rec


def test_certify_smooth_run():
    sc = unit_scenario(Kernel.exponential(1.0, 1.0), u0=[0.0, 0.2], n=30)
    m, rec = _run(sc, 5.0, dt=1e-2, stride=0.1)
    cert = certify(rec, sc, m, classify(sc, m))
    assert cert.passed
    assert cert[DEFORMATION_LOWER].applicable and cert[SEPARATION_LOWER_SMOOTH].applicable
    assert not cert[SEPARATION_LOWER_SINGULAR].applicable
    assert not cert[EXISTENCE_TIME].applicable


def test_certify_blowup_run_checks_existence_time():
    sc = two_block_scenario(0.1, 0.05, Kernel.constant(), n_per_interval=20)
    m, rec = _run(sc, 2.0, method="rk45")
    cert = certify(rec, sc, m, classify(sc, m))
    chk = cert[EXISTENCE_TIME]
    assert chk.applicable and chk.passed
    assert rec.terminal["time"] <= chk.params["bound"]


def test_certify_detects_tampering():
    sc = unit_scenario(u0=[0.0, 0.1], n=10)
    m, rec = _run(sc, 1.0, dt=1e-2, stride=0.1)
    rec.X[3, 4] += 1.0
    assert not certify(rec, sc, m, classify(sc, m)).passed


def test_certify_singular_run():
    sc = singular_fixture(n=40)
    m = prepared(sc)
    c = fit_modulus(m, 2.0, 0.1, psi=m.psi_discrete)
    mod = modulus_check(m, 2.0, c, 0.1, sc.kernel, psi=m.psi_discrete)
    assert mod.satisfied and mod.admissible
    rec = integrate(m.copy(), sc.kernel, sc.kappa, T=5.0, method="rk45", stride=0.05)
    cert = certify(rec, sc, m, classify(sc, m), mod)
    for kind in (SEPARATION_LOWER_SINGULAR, SEPARATION_LIMINF, SEPARATION_UPPER,
                 CONVOLUTION_UNIFORM, DEFORMATION_LOWER):
        assert cert[kind].applicable, kind
        assert cert[kind].passed, kind
    assert not cert[SEPARATION_LOWER_SMOOTH].applicable


def test_certificate_json_layout():
    sc = unit_scenario(n=5)
    m, rec = _run(sc, 0.1, dt=1e-2)
    d = certify(rec, sc, m, classify(sc, m)).to_dict()
    assert set(d["bounds"][0]) >= {"kind", "applicable", "pass", "worst_margin", "worst_time",
                                   "params"}
