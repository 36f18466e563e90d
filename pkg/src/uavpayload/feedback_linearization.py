"""Input-output linearization of (p_poi, omega_z) and the resulting zero dynamics.

Zero-dynamics states are ``z = (omega_x, omega_y, phi, theta, psi)``. With the
POI pinned at rest and ``omega_z = 0`` these five coordinates are all that
remain of the 12-dim state.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import DegenerateAlphaError, SingularAttitudeError, SingularDecouplingError
from .spatial_math import check_attitude, gamma_inv
from .vehicle_model import ControlInput, Plant, _state

# rows of B_y^-1 that give (p_poi_ddot, omega_z_dot)
_OUTPUT_ROWS = np.zeros((4, 6))
_OUTPUT_ROWS[:3, :3] = np.eye(3)
_OUTPUT_ROWS[3, 5] = 1.0

DEFAULT_ZD_INITIAL = (0.0, 0.0, 0.1, 0.1, 0.0)


class Classification(str, Enum):
    UNSTABLE = "UnstableZeroDynamics"
    MARGINAL = "MarginallyStableLinearizedZeroDynamics"
    DEGENERATE = "DegenerateAlphaZero"


@dataclass
class StabilityVerdict:
    alpha: float
    eigenvalues: np.ndarray = field(repr=False)
    classification: Classification
    numeric_eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def eigenvalue_mismatch(self):
        """Largest distance between closed-form and numerical eigenvalues (matched by sorting)."""
        if self.numeric_eigenvalues is None or self.eigenvalues.size == 0:
            return 0.0
        key = lambda z: (round(z.real, 6), round(z.imag, 6))  # noqa: E731
        a = np.array(sorted(self.eigenvalues, key=key))
        b = np.array(sorted(self.numeric_eigenvalues, key=key))
        return float(np.max(np.abs(a - b)))


def _decoupling(plant, x):
    eta = x[9:12]
    m4 = _OUTPUT_ROWS @ np.linalg.inv(plant.mass_matrix(eta))
    return m4, m4 @ plant.input_matrix(eta), m4 @ plant.bias(x)


def io_linearizing_input(params, state, desired_acc=(0.0, 0.0, 0.0), desired_yaw_acc=0.0):
    """Input that makes ``p_poi_ddot = desired_acc`` and ``omega_z_dot = desired_yaw_acc``.

    Raises
    ------
    SingularDecouplingError
        When ``M4 M_F`` is singular; in particular for ``alpha = 0``, where the
        roll and pitch torques have no instantaneous effect on the POI.
    """
    x = _state(state)
    check_attitude(x[9:12])
    u = _linearizing_input(Plant.from_params(params), x, desired_acc, desired_yaw_acc)
    return ControlInput(*u)


def _linearizing_input(plant, x, desired_acc=(0.0, 0.0, 0.0), desired_yaw_acc=0.0):
    _, decoupling, m4m5 = _decoupling(plant, x)
    if np.linalg.cond(decoupling) > 1e12:
        raise SingularDecouplingError("decoupling matrix M4 M_F is singular at this state")
    target = np.append(np.asarray(desired_acc, dtype=float), float(desired_yaw_acc))
    return np.linalg.solve(decoupling, target + m4m5)


def _zero_output_state(z):
    z = np.asarray(z, dtype=float)
    x = np.zeros(12)
    x[3:5] = z[0:2]
    x[9:12] = z[2:5]
    return x


def zero_dynamics_derivative(params, z):
    """``z_dot = f_zd(z)`` with the outputs and their derivatives held at zero.

    Euler-angle rates use ``Gamma^-1 omega``, the kinematic relation of the
    full model.
    """
    return _zd_derivative(Plant.from_params(params), z)


def _zd_derivative(plant, z):
    z = np.asarray(z, dtype=float)
    if abs(np.cos(z[3])) <= np.sin(1e-6):
        raise SingularAttitudeError("zero-dynamics pitch at gimbal lock")
    x = _zero_output_state(z)
    eta = x[9:12]
    m6 = plant.input_matrix(eta) @ _linearizing_input(plant, x) - plant.bias(x)
    acc = np.linalg.solve(plant.mass_matrix(eta), m6)
    omega0 = np.array([z[0], z[1], 0.0])
    return np.concatenate([acc[3:5], gamma_inv(eta) @ omega0])


def zero_dynamics_jacobian_closed_form(alpha, g):
    if alpha == 0:
        raise DegenerateAlphaError("zero-dynamics Jacobian has a pole at alpha = 0")
    j = np.zeros((5, 5))
    j[0, 2] = j[1, 3] = -g / alpha
    j[2, 0] = j[3, 1] = 1.0
    return j


def zero_dynamics_jacobian_numeric(params, step=1e-6):
    """Central-difference Jacobian of :func:`zero_dynamics_derivative` at z = 0."""
    plant = Plant.from_params(params)
    jac = np.zeros((5, 5))
    for k in range(5):
        dz = np.zeros(5)
        dz[k] = step
        jac[:, k] = (_zd_derivative(plant, dz) - _zd_derivative(plant, -dz)) / (2 * step)
    return jac


def closed_form_eigenvalues(alpha, g):
    lam = np.sqrt(complex(-g / alpha))
    return np.array([lam, lam, -lam, -lam, 0.0], dtype=complex)


def zero_dynamics_jacobian(params):
    """Jacobian of the zero dynamics at the origin and the stability verdict.

    Returns ``(J, verdict)``. For ``alpha == 0`` the Jacobian does not exist;
    ``J`` is ``None`` and the verdict is :attr:`Classification.DEGENERATE`.
    """
    alpha, g = params.alpha, params.g
    if alpha == 0:
        verdict = StabilityVerdict(alpha, np.array([], dtype=complex), Classification.DEGENERATE)
        return None, verdict
    jac = zero_dynamics_jacobian_closed_form(alpha, g)
    cls = Classification.UNSTABLE if alpha < 0 else Classification.MARGINAL
    verdict = StabilityVerdict(
        alpha=alpha,
        eigenvalues=closed_form_eigenvalues(alpha, g),
        classification=cls,
        numeric_eigenvalues=np.linalg.eigvals(jac),
    )
    return jac, verdict


def _planar_preconditions(params):
    h = params.inertia
    if np.any(np.abs(h - np.diag(np.diag(h))) > 1e-12 * np.abs(h).max()):
        raise ValueError("planar reduction needs a diagonal inertia (symmetric UAV)")
    if np.any(np.abs(params.r_pl[:2]) > 1e-12) or np.any(np.abs(params.r_poi[:2]) > 1e-12):
        raise ValueError("planar reduction needs payload and POI on the body z-axis")
    r_z = params.alpha
    if r_z == 0:
        raise DegenerateAlphaError("planar zero dynamics are singular for r_hat_z = 0")
    return r_z


def planar_zero_dynamics(params, phi, theta, dphi, dtheta):
    """Reduced zero dynamics for a symmetric vehicle with payload and POI on the z-axis.

    Returns ``(phi_ddot, theta_ddot, phi_dot, theta_dot)``. These equations
    describe the POI held fixed with the yaw *angle* held at zero.
    """
    r_z = _planar_preconditions(params)
    g = params.g
    if abs(np.cos(phi)) <= 1e-12:
        raise SingularAttitudeError("planar zero dynamics are singular at cos(phi) = 0")
    phi_dd = -np.sin(phi) * (r_z * np.cos(phi) * dtheta**2 + g * np.cos(theta)) / r_z
    theta_dd = -(g * np.sin(theta) - 2 * dphi * dtheta * r_z * np.sin(phi)) / (r_z * np.cos(phi))
    return np.array([phi_dd, theta_dd, dphi, dtheta])


@dataclass
class ZeroDynamicsRun:
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    initial: tuple
    bounded: bool
    growth: float  # max ||z(t)|| / ||z0||


def simulate_zero_dynamics(params, z0=DEFAULT_ZD_INITIAL, horizon=60.0, bound_factor=10.0,
                           rtol=1e-9, atol=1e-10):
    """Integrate the full zero dynamics and test for a bounded orbit.

    The run is bounded when ``||z(t)|| < bound_factor * ||z0||`` over the whole
    horizon; it stops early once the bound is crossed or the pitch nears
    gimbal lock. This is numerical evidence, not a stability proof.
    """
    z0 = np.asarray(z0, dtype=float)
    plant = Plant.from_params(params)
    limit = bound_factor * np.linalg.norm(z0)

    def escape(t, z):
        return min(limit - np.linalg.norm(z), np.pi / 2 - 1e-3 - abs(z[3]))

    escape.terminal = True
    sol = solve_ivp(
        lambda t, z: _zd_derivative(plant, z),
        (0.0, horizon),
        z0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=escape,
        max_step=0.5,
    )
    norms = np.linalg.norm(sol.y, axis=0)
    growth = float(norms.max() / np.linalg.norm(z0))
    bounded = bool(sol.t[-1] >= horizon and norms.max() < limit)
    return ZeroDynamicsRun(sol.t, sol.y.T, tuple(z0), bounded, growth)
