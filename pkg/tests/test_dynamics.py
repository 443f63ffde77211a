import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from align1d import Kernel, discretize, two_block_scenario, prepare
from align1d.dynamics import (COLLAPSE, COMPLETED, PAIR_CROSSING, IntegrationConfig, integrate,
                              load_record, reconstruct_density, rhs_deformation, rhs_first_order,
                              rhs_second_order)
from align1d.errors import DeformationCollapse

from conftest import prepared, unit_scenario

KERNELS = [Kernel.constant(), Kernel.exponential(1.0, 2.0), Kernel.rational(1.0, 2.0)]


def test_single_marker_moves_with_u0():
    sc = unit_scenario(Kernel.exponential(), u0=[0.3, 1.0], n=1)
    m = prepared(sc)
    assert rhs_first_order(m, sc.kernel, sc.kappa)[0] == pytest.approx(0.8, abs=1e-15)


def test_two_body_closing_speed():
    sc = two_block_scenario(0.1, 0.05, Kernel.constant(), n_per_interval=1)
    m = prepared(sc)
    v = rhs_first_order(m, sc.kernel, sc.kappa)
    assert v[1] - v[0] == pytest.approx(-0.2, abs=1e-14)


@pytest.mark.parametrize("k", KERNELS + [Kernel.powerlaw(0.25)])
def test_first_order_rhs_is_u0_at_start(k):
    sc = unit_scenario(k, u0=[0.1, -0.3, 0.2], n=30)
    m = prepared(sc)
    np.testing.assert_allclose(rhs_first_order(m, k, sc.kappa), sc.intervals[0].u0(m.alphas),
                               atol=1e-13)


@pytest.mark.parametrize("k", KERNELS)
def test_aligned_state_is_steady(k):
    m = prepared(unit_scenario(k, u0=0.4, n=20))
    np.testing.assert_allclose(rhs_second_order(m, k, 1.0), 0.0, atol=1e-15)


def test_two_body_acceleration():
    k = Kernel.exponential(1.0, 1.0)
    sc = two_block_scenario(0.1, 0.3, k, n_per_interval=1)
    m = prepared(sc)
    f = k.phi(m.X[1] - m.X[0])
    acc = rhs_second_order(m, k, 1.0)
    assert acc[0] == pytest.approx(f * 0.5 * (m.V[1] - m.V[0]))


def test_deformation_rhs_frozen_decay():
    k = Kernel.exponential(1.0, 1.0)
    m = prepared(unit_scenario(k, n=10))
    A = (k.phi(m.X[:, None] - m.X[None, :]) @ m.masses)
    m.q = np.full(10, 0.7)
    np.testing.assert_allclose(rhs_deformation(m, k, 1.0, np.zeros(10)), -A * 0.7)


def test_density_reconstruction():
    m = prepared(unit_scenario(rho0=[1.0, 1.0], n=8))
    np.testing.assert_allclose(reconstruct_density(m), 1.0 + m.alphas)
    m.q = np.full(8, 2.0)
    m.rho0_vals = np.ones(8)
    np.testing.assert_allclose(reconstruct_density(m), 0.5)
    m.q[3] = 0.0
    with pytest.raises(DeformationCollapse):
        reconstruct_density(m)


def test_constant_kernel_keeps_unit_deformation():
    sc = unit_scenario(n=40)
    rec = integrate(prepared(sc), sc.kernel, sc.kappa, T=2.0, dt=1e-2)
    assert rec.terminal["kind"] == COMPLETED
    np.testing.assert_allclose(rec.q, 1.0, atol=1e-13)


def test_constant_kernel_velocity_closed_form():
    sc = unit_scenario(u0=[0.2, -0.4], n=40)
    m = prepared(sc)
    P, M0 = float(m.masses @ m.V), m.total_mass
    V0 = m.V.copy()
    rec = integrate(m, sc.kernel, sc.kappa, T=3.0, dt=1e-3, stride=0.5)
    for t, V in zip(rec.times, rec.V):
        exact = P / M0 + (V0 - P / M0) * math.exp(-M0 * t)
        np.testing.assert_allclose(V, exact, atol=1e-12)


def test_deformation_matches_marker_spacing():
    sc = unit_scenario(Kernel.exponential(1.0, 1.0), u0=[0.0, 0.3, -0.2], n=200)
    rec = integrate(prepared(sc), sc.kernel, sc.kappa, T=1.0, dt=1e-3, stride=0.25)
    a = discretize(sc).alphas
    fd = (rec.X[-1, 2:] - rec.X[-1, :-2]) / (a[2:] - a[:-2])
    rel = np.max(np.abs(fd - rec.q[-1, 1:-1]) / rec.q[-1, 1:-1])
    assert rel < 10 * (a[1] - a[0]) ** 2


def test_two_block_crossing_time_matches_closed_form():
    # adjacent pair across the hole: d' = gap - d, gap = -0.09, d(0) = 0.11
    sc = two_block_scenario(0.1, 0.05, Kernel.constant(), n_per_interval=50)
    for method in ("rk4", "rk45"):
        rec = integrate(prepared(sc), sc.kernel, sc.kappa, T=2.0, dt=1e-3, method=method)
        ev = rec.terminal
        assert ev["kind"] == PAIR_CROSSING
        assert ev["payload"]["pair"] == [49, 50]
        assert ev["time"] == pytest.approx(math.log(0.2 / 0.09), abs=1e-8)


def test_uncoupled_compression_collapses_at_one():
    sc = unit_scenario(u0=[0.0, -1.0], kappa=0.0, n=20)
    rec = integrate(prepared(sc), sc.kernel, sc.kappa, T=2.0, dt=1e-3, method="rk45")
    assert rec.terminal["kind"] in (PAIR_CROSSING, COLLAPSE)
    assert rec.terminal["time"] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("k", KERNELS)
def test_first_and_second_order_agree(k):
    sc = unit_scenario(k, u0=[0.0, 0.2, -0.1], n=40)
    rec = integrate(prepared(sc), k, sc.kappa, T=2.0, dt=1e-3, order="both", stride=0.1)
    assert rec.terminal["kind"] == COMPLETED
    assert np.max(rec.order_gap) < 1e-10
    assert np.max(rec.psi_drift) < 1e-12


@settings(max_examples=10, deadline=None)
@given(slope=st.floats(-0.5, 2.0), kappa=st.floats(0.2, 3.0), k=st.sampled_from(KERNELS))
def test_invariant_and_momentum_conserved(slope, kappa, k):
    sc = unit_scenario(k, u0=[0.0, slope], kappa=kappa, n=16)
    m = prepared(sc)
    P0 = float(m.masses @ m.V)
    rec = integrate(m, k, kappa, T=0.5, dt=5e-3, stride=0.1)
    assert np.max(rec.psi_drift) < 1e-10
    for V in rec.V:
        assert float(m.masses @ V) == pytest.approx(P0, abs=1e-12)
    # pushforward keeps the total mass
    for q, rho in zip(rec.q, rec.rho):
        assert float(np.sum(rho * q * m.masses / m.rho0_vals)) == pytest.approx(m.total_mass)


def test_record_round_trip(tmp_path):
    sc = two_block_scenario(0.1, 0.05, Kernel.constant(), n_per_interval=10)
    rec = integrate(prepared(sc), sc.kernel, sc.kappa, T=2.0, dt=1e-2, order="both")
    rec.write(tmp_path / "t.csv", tmp_path / "t.json")
    back = load_record(tmp_path / "t.csv", tmp_path / "t.json")
    np.testing.assert_array_equal(back.X, rec.X)
    np.testing.assert_array_equal(back.order_gap, rec.order_gap)
    assert back.events == rec.events


@pytest.mark.parametrize("kw", [dict(T=0.0), dict(dt=-1.0), dict(order="third"),
                                dict(method="euler")])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        IntegrationConfig(**kw)
