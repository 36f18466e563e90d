"""Hover linearization, input scaling and the decoupled subsystems."""

import numpy as np
import pytest

from uavpayload.exceptions import AssumptionViolation
from uavpayload.feedback_linearization import zero_dynamics_jacobian_numeric
from uavpayload.linear_analysis import (
    PERM,
    build_simplified,
    check_assumptions,
    decouple,
    hover_equilibrium,
    input_scaling,
    linearize_numeric,
    simplified_scaled,
    transfer_zeros,
)
from uavpayload.oracles import transmission_zeros
from uavpayload.vehicle_model import VehicleParams, nonlinear_derivative

REF = VehicleParams()


def _random_on_axis(rng):
    return VehicleParams(
        m_uav=rng.uniform(1, 40),
        m_pl=rng.uniform(0, 20),
        r_pl=(0, 0, rng.uniform(-3, 5)),
        r_poi=(0, 0, rng.uniform(-3, 5)),
        h_tot=rng.uniform(0.05, 2.0, size=3),
    )


def test_hover_pair():
    x, u = hover_equilibrium(REF)
    assert u.thrust == pytest.approx(274.68, rel=1e-14)
    assert np.all(nonlinear_derivative(REF, x, u) == 0)


def test_scaling_reference_vehicle():
    s = input_scaling(REF)
    assert s.b1 == pytest.approx(2119.0, rel=1e-14)
    assert s.b2 == pytest.approx(2119.0, rel=1e-14)
    np.testing.assert_allclose(np.diag(s.psi), [1 / 28, 28 / 2119, 28 / 2119, 1 / 0.14])
    raw = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(s.unscale(s.scale(raw)), raw)


def test_kinematic_rows_are_identity():
    lin = linearize_numeric(REF)
    np.testing.assert_allclose(lin.a[6:9, 0:3], np.eye(3), atol=1e-9)
    np.testing.assert_allclose(lin.a[9:12, 3:6], np.eye(3), atol=1e-9)


def test_thrust_column_only_moves_vertical_velocity():
    b = linearize_numeric(REF).b[:, 0]
    expected = np.zeros(12)
    expected[2] = 1 / 28
    np.testing.assert_allclose(b, expected, atol=1e-10)


@pytest.mark.parametrize("seed", range(50))
def test_numeric_linearization_matches_closed_form(seed):
    p = _random_on_axis(np.random.default_rng(seed))
    num, closed = linearize_numeric(p), build_simplified(p)
    np.testing.assert_allclose(num.a, closed.a, rtol=0, atol=1e-6)
    np.testing.assert_allclose(num.b, closed.b, rtol=0, atol=1e-6)


def test_zero_alpha_torques_do_not_move_poi():
    a, b_hat = simplified_scaled(REF.with_alpha(0.0))
    assert np.all(b_hat[0:2] == 0)


def test_simplified_a_is_nilpotent():
    a, _ = simplified_scaled(REF)
    assert np.all(np.linalg.matrix_power(a, 5) == 0)
    np.testing.assert_allclose(np.linalg.eigvals(a), 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "params, message",
    [
        (VehicleParams(h_tot=[[0.25, 0.01, 0], [0.01, 0.25, 0], [0, 0, 0.14]]), "diagonal-inertia"),
        (VehicleParams(r_pl=(0.1, 0, 4)), "r_pl"),
        (VehicleParams(r_poi=(0, -0.2, 4)), "r_poi"),
    ],
)
def test_assumption_violations_named(params, message):
    with pytest.raises(AssumptionViolation, match=message):
        check_assumptions(params)
    with pytest.raises(AssumptionViolation):
        decouple(params, (5, 5, 5, 5))


def test_decoupled_matrices_follow_permutation():
    subs = decouple(REF, (5, 5, 5, 5))
    lin = build_simplified(REF)
    a_bar, b_bar = lin.decoupled()
    s = input_scaling(REF)
    b_hat = b_bar @ s.psi_inv
    np.testing.assert_array_equal(a_bar[0:4, 0:4], subs[0].a)
    np.testing.assert_allclose(b_hat[0:4, 2:3], subs[0].b, rtol=1e-14)
    np.testing.assert_array_equal(a_bar[4:8, 4:8], subs[1].a)
    np.testing.assert_allclose(b_hat[4:8, 1:2], subs[1].b, rtol=1e-14)
    np.testing.assert_array_equal(a_bar[8:10, 8:10], subs[2].a)
    np.testing.assert_array_equal(a_bar[10:12, 10:12], subs[3].a)
    # no coupling between blocks
    mask = np.ones((12, 12), dtype=bool)
    for lo, hi in ((0, 4), (4, 8), (8, 10), (10, 12)):
        mask[lo:hi, lo:hi] = False
    assert np.all(a_bar[mask] == 0)
    assert sorted(PERM.tolist()) == list(range(12))


def test_subsystem_structure():
    s1, s2, s3, s4 = decouple(REF, (5, 5, 5, 5))
    assert s1.a[1, 2] == 9.81 and s2.a[1, 2] == -9.81
    np.testing.assert_array_equal(s1.b[:, 0], [0, REF.alpha, 0, 1])
    np.testing.assert_array_equal(s2.b[:, 0], [0, -REF.alpha, 0, 1])
    np.testing.assert_array_equal(s3.a, [[0, 1], [0, 0]])
    np.testing.assert_array_equal(s4.b[:, 0], [0, 1])


def test_scaled_weights_examples():
    s1, s2, s3, s4 = decouple(REF, (5, 5, 5, 5))
    assert s1.q_hat == pytest.approx(2119 / 28 * 5, rel=1e-14)
    assert s1.q_hat == pytest.approx(378.39, abs=5e-3)
    assert s3.q_hat == pytest.approx(140.0, rel=1e-14)
    assert s4.q_hat == pytest.approx(0.7, rel=1e-14)


def test_vertical_and_yaw_subsystems_independent_of_placement():
    ref = decouple(REF, (5, 5, 5, 5))
    for z_pl, z_poi in ((-1.0, 2.0), (0.0, 0.0), (3.0, -2.0)):
        subs = decouple(REF.with_placement(z_pl, z_poi), (5, 5, 5, 5))
        for i in (2, 3):
            np.testing.assert_array_equal(subs[i].a, ref[i].a)
            np.testing.assert_array_equal(subs[i].b, ref[i].b)


@pytest.mark.parametrize("alpha", [0.786, -0.786])
def test_transfer_zero_values(alpha):
    s1 = decouple(REF.with_alpha(alpha), (5, 5, 5, 5))[0]
    tz = transfer_zeros(s1)
    w = np.sqrt(9.81 / 0.786)
    assert w == pytest.approx(3.533, abs=5e-4)
    if alpha > 0:
        np.testing.assert_allclose(sorted(np.imag(tz.zeros)), [-w, w], rtol=1e-12)
        assert not tz.non_minimum_phase
    else:
        np.testing.assert_allclose(sorted(np.real(tz.zeros)), [-w, w], rtol=1e-12)
        assert tz.non_minimum_phase


@pytest.mark.parametrize("alpha", [-2.0, -0.5, 0.3, 1.7])
@pytest.mark.parametrize("index", [1, 2])
def test_transfer_zeros_match_pencil_oracle(alpha, index):
    s = decouple(REF.with_alpha(alpha), (5, 5, 5, 5))[index - 1]
    oracle = transmission_zeros(s.a, s.b, s.c)
    key = lambda z: (round(z.real, 9), round(z.imag, 9))  # noqa: E731
    np.testing.assert_allclose(sorted(oracle, key=key), sorted(transfer_zeros(s).zeros, key=key),
                               atol=1e-9)


def test_zero_alpha_has_no_finite_zeros():
    s1 = decouple(REF.with_alpha(0.0), (5, 5, 5, 5))[0]
    tz = transfer_zeros(s1)
    assert tz.zeros == () and "no finite zeros" in tz.note
    assert transmission_zeros(s1.a, s1.b, s1.c).size == 0


@pytest.mark.parametrize("z", [-1.0, -0.4, -2.5])
def test_rhp_zeros_equal_zero_dynamics_rhp_poles(z):
    p = REF.with_payload_at_poi(z)
    zeros = np.array(transfer_zeros(decouple(p, (5, 5, 5, 5))[0]).zeros)
    ev = np.linalg.eigvals(zero_dynamics_jacobian_numeric(p))
    rhp_ev = np.unique(np.round(ev[ev.real > 1e-6].real, 6))
    assert rhp_ev.size == 1
    rhp_zero = zeros[zeros.real > 0].real
    # numeric Jacobian via central differences: compare its eigenvalue to the
    # exact zero at the finite-difference accuracy, and the closed forms exactly
    assert rhp_zero[0] == pytest.approx(rhp_ev[0], rel=1e-6)
    assert rhp_zero[0] == pytest.approx(np.sqrt(-9.81 / p.alpha), rel=1e-12)
