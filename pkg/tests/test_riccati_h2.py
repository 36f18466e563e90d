"""Closed-form Riccati solutions, gains, H2 norms and optimal placement."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavpayload.linear_analysis import LinearSubsystem, decouple, lateral_matrices
from uavpayload.oracles import care_hamiltonian, golden_section, h2_lyapunov
from uavpayload.riccati_h2 import (
    CostWeights,
    above_below_gap,
    analytical_h2,
    closed_form_riccati,
    closed_loop,
    golden_alpha,
    h2_at_optimum,
    h2_squared_closed_form,
    h2_surface,
    lateral_h2,
    optimal_alpha,
    optimal_placement,
    p11,
    trace_h2,
)
from uavpayload.vehicle_model import VehicleParams

G = 9.81
REF = VehicleParams()


def _lateral(alpha, q_hat, index=1):
    a, b = lateral_matrices(alpha, G, index)
    return LinearSubsystem(index, a, b, alpha, q_hat, q_hat, G)


def _di(q_hat, index=3):
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0], [1.0]])
    return LinearSubsystem(index, a, b, 0.0, q_hat, q_hat, G)


def _oracle(blk):
    return care_hamiltonian(blk.a, blk.b, blk.weight, np.eye(1))


def test_cost_weights_validation():
    assert tuple(CostWeights.uniform(2)) == (2.0, 2.0, 2.0, 2.0)
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            CostWeights(q1=bad)


def test_double_integrator_example():
    blk = closed_form_riccati(_di(140.0))
    r = np.sqrt(280.0)
    np.testing.assert_allclose(blk.p, [[140 * r, 140], [140, r]], rtol=1e-15)
    np.testing.assert_allclose(blk.gain, [140.0, r], rtol=1e-15)
    assert blk.residual() < 1e-14
    np.testing.assert_allclose(blk.p, _oracle(blk), rtol=1e-12)


def test_zero_alpha_cross_term():
    blk = closed_form_riccati(_lateral(0.0, 378.39))
    assert blk.p[0, 3] == pytest.approx(378.39, rel=1e-15)


ALPHAS = np.linspace(-2.0, 2.0, 20)
Q_HATS = np.geomspace(0.1, 1000.0, 10)


@pytest.mark.parametrize("index", [1, 2])
def test_grid_residual_and_oracle(index):
    worst_res = worst_rel = 0.0
    for alpha in ALPHAS:
        for q in Q_HATS:
            blk = closed_form_riccati(_lateral(alpha, q, index))
            worst_res = max(worst_res, blk.residual())
            ref = _oracle(blk)
            worst_rel = max(worst_rel, np.linalg.norm(blk.p - ref) / np.linalg.norm(ref))
    assert worst_res < 1e-9
    assert worst_rel < 1e-8


@given(alpha=st.floats(-3.0, 3.0), q=st.floats(1e-2, 1e3))
def test_residual_property(alpha, q):
    blk = closed_form_riccati(_lateral(alpha, q))
    assert blk.residual() < 1e-9
    assert np.allclose(blk.p, blk.p.T, rtol=0, atol=1e-12 * np.abs(blk.p).max())
    assert np.all(np.linalg.eigvalsh(blk.p) > 0)


@given(alpha=st.floats(-3.0, 3.0), q=st.floats(1e-2, 1e3))
def test_p11_positive(alpha, q):
    assert p11(alpha, q) > 0


def test_flip_relation():
    for alpha in (-1.3, 0.4):
        p1 = closed_form_riccati(_lateral(alpha, 50.0, 1)).p
        p2 = closed_form_riccati(_lateral(alpha, 50.0, 2)).p
        t = np.diag([1, 1, -1, -1])
        np.testing.assert_array_equal(p2, t @ p1 @ t)


def test_closed_loop_hurwitz_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        p = VehicleParams(
            m_uav=rng.uniform(1, 40), m_pl=rng.uniform(0, 20),
            r_pl=(0, 0, rng.uniform(-3, 5)), r_poi=(0, 0, rng.uniform(-3, 5)),
            h_tot=rng.uniform(0.05, 2.0, size=3),
        )
        a, b, k, _ = closed_loop(p, CostWeights(*rng.uniform(0.5, 20, size=4)))
        assert np.linalg.eigvals(a - b @ k).real.max() < 0


@pytest.mark.parametrize("alpha", [-1.5, -0.2, 0.0, 0.55, 2.0])
@pytest.mark.parametrize("q", [0.7, 140.0, 378.39])
def test_h2_closed_form_equals_trace_and_gramian(alpha, q):
    s = _lateral(alpha, q)
    blk = closed_form_riccati(s)
    h = analytical_h2(s)
    assert h == pytest.approx(trace_h2(blk), rel=1e-9)
    k = blk.gain[None, :]
    c_z = np.vstack([np.sqrt(blk.weight[0:1]), -k])
    assert h == pytest.approx(h2_lyapunov(s.a - s.b @ k, s.b, c_z), rel=1e-8)


def test_double_integrator_h2_example():
    s = _di(0.7, index=4)
    blk = closed_form_riccati(s)
    assert trace_h2(blk) ** 2 == pytest.approx(np.sqrt(1.4), rel=1e-14)
    assert analytical_h2(s) == pytest.approx(1.4**0.25, rel=1e-14)


def test_frozen_reference_vehicle_norms():
    # [DERIVED] from the closed form and cross-checked against the Gramian
    subs = decouple(REF, CostWeights())
    h = [analytical_h2(s) for s in subs]
    np.testing.assert_allclose(h[2:], [280.0**0.25, 1.4**0.25], rtol=1e-14)
    a, b, k, _ = closed_loop(REF, CostWeights())
    for i, s in enumerate(subs[:2]):
        blk = closed_form_riccati(s)
        kk = blk.gain[None, :]
        c_z = np.vstack([np.sqrt(blk.weight[0:1]), -kk])
        assert h[i] == pytest.approx(h2_lyapunov(s.a - s.b @ kk, s.b, c_z), rel=1e-8)


def test_raw_weight_variant_differs():
    s = decouple(REF, CostWeights())[0]
    assert analytical_h2(s, q_raw=s.q_raw) != pytest.approx(analytical_h2(s), rel=1e-3)


@pytest.mark.parametrize("q", [0.5, 10.0, 378.39, 2000.0])
def test_optimal_alpha_matches_golden_section(q):
    assert golden_alpha(q) == pytest.approx(optimal_alpha(q), rel=1e-6)


def test_optimal_alpha_value_frozen():
    assert optimal_alpha(378.392857142857) == pytest.approx(0.22771, abs=5e-6)


def test_value_at_optimum_is_trace():
    for q in (1.0, 140.0, 378.39):
        assert h2_squared_closed_form(optimal_alpha(q), q) == pytest.approx(h2_at_optimum(q), rel=1e-10)


@given(q=st.floats(0.05, 5e3))
def test_h2_monotone_either_side_of_optimum(q):
    a_star = float(optimal_alpha(q))
    left = np.linspace(a_star - 3.0, a_star, 30)
    right = np.linspace(a_star, a_star + 3.0, 30)
    assert np.all(np.diff(lateral_h2(left, q)) < 1e-12)
    assert np.all(np.diff(lateral_h2(right, q)) > -1e-12)


def test_optimal_alpha_decreasing_in_weight():
    qs = np.geomspace(1e-2, 1e4, 50)
    assert np.all(np.diff(optimal_alpha(qs)) < 0)


@given(alpha=st.floats(1e-3, 10.0), q=st.floats(1e-2, 1e4))
def test_below_worse_than_above(alpha, q):
    assert above_below_gap(q, alpha) > 0


def test_gap_zero_at_zero_offset():
    assert above_below_gap(378.39, 0.0) == 0.0
    with pytest.raises(ValueError):
        above_below_gap(1.0, -0.1)


def test_placement_shift():
    rep = optimal_placement(REF, CostWeights())
    shift = REF.m_pl / REF.m_tot * REF.r_pl[2]
    for a_star, z in zip(rep.alpha_star, rep.z_poi_star):
        assert z == pytest.approx(a_star + shift, rel=1e-14)
    assert rep.golden_alpha_star[0] == pytest.approx(rep.alpha_star[0], rel=1e-6)
    assert all(g > 0 for g in rep.above_below_gap)


def test_placement_without_payload():
    p = VehicleParams(m_pl=0.0)
    rep = optimal_placement(p, CostWeights())
    np.testing.assert_allclose(rep.z_poi_star, rep.alpha_star, rtol=1e-15)


def test_surface_is_a_bowl_along_poi():
    z_pl = np.linspace(-2, 2, 5)
    z_poi = np.linspace(-2, 6, 161)
    surf = h2_surface(REF, CostWeights(), z_pl, z_poi)
    for row, zp in zip(surf, z_pl):
        k = int(np.argmin(row))
        assert 0 < k < z_poi.size - 1
        assert np.all(np.diff(row[: k + 1]) < 0) and np.all(np.diff(row[k:]) > 0)
        rep = optimal_placement(REF.with_placement(z_pl=zp), CostWeights())
        assert abs(z_poi[k] - rep.z_poi_star[0]) <= 0.05 + 1e-12


def test_surface_minimum_by_golden_section():
    zp = 1.0
    rep = optimal_placement(REF.with_placement(z_pl=zp), CostWeights())
    f = lambda z: float(h2_surface(REF, CostWeights(), [zp], [z])[0, 0])  # noqa: E731
    assert golden_section(f, -2, 6) == pytest.approx(rep.z_poi_star[0], abs=1e-5)
