"""Independent reference solvers used by the other test modules."""

import numpy as np
import pytest
import scipy.linalg

from uavpayload.oracles import (
    care_hamiltonian,
    care_residual_exact,
    golden_section,
    h2_lyapunov,
    transmission_zeros,
)


@pytest.mark.parametrize("seed", range(10))
def test_care_matches_scipy_on_well_conditioned_problems(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 2))
    m = rng.normal(size=(4, 4))
    q = m @ m.T + np.eye(4)
    r = np.eye(2)
    p = care_hamiltonian(a, b, q, r)
    np.testing.assert_allclose(p, scipy.linalg.solve_continuous_are(a, b, q, r), rtol=1e-8, atol=1e-10)
    assert np.linalg.norm(care_residual_exact(a, b, q, r, p)) < 1e-10 * np.linalg.norm(q)
    assert np.all(np.linalg.eigvals(a - b @ b.T @ p).real < 0)


def test_care_scalar_closed_form():
    # a p * 2 - p**2 + q = 0 -> p = a + sqrt(a**2 + q)
    p = care_hamiltonian([[1.5]], [[1.0]], [[4.0]], [[1.0]])
    assert p[0, 0] == pytest.approx(1.5 + np.sqrt(1.5**2 + 4.0), rel=1e-14)


def test_transmission_zeros_known_system():
    # (s + 2) / ((s + 1)(s + 3)) in controllable canonical form
    a = np.array([[0.0, 1.0], [-3.0, -4.0]])
    b = np.array([[0.0], [1.0]])
    c = np.array([[2.0, 1.0]])
    np.testing.assert_allclose(transmission_zeros(a, b, c), [-2.0], atol=1e-12)


def test_h2_lyapunov_first_order():
    # 1 / (s + k): H2**2 = 1 / (2k)
    assert h2_lyapunov(np.array([[-3.0]]), np.eye(1), np.eye(1)) == pytest.approx(np.sqrt(1 / 6))


def test_golden_section_parabola():
    x = golden_section(lambda t: (t - 0.3) ** 2 + 1.0, -5.0, 7.0, tol=1e-12)
    assert x == pytest.approx(0.3, abs=1e-6)
