"""Hover linearization and the decoupled lateral/vertical/yaw subsystems.

The decoupled ordering used throughout the LQR and H2 code is::

    x_bar = [x1, x2, x3, x4]
    x1 = (x, x_dot, theta, omega_y)     x2 = (y, y_dot, phi, omega_x)
    x3 = (z, z_dot)                     x4 = (psi, omega_z)

``x_bar = x[PERM]`` maps the 12-dim model state onto it.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import AssumptionViolation
from .vehicle_model import ControlInput, Plant, RigidState

PERM = np.array([6, 0, 10, 4, 7, 1, 9, 3, 8, 2, 11, 5])
DECOUPLED_LABELS = (
    "x", "vx", "theta", "wy", "y", "vy", "phi", "wx", "z", "vz", "psi", "wz",
)
# (start, stop) of each subsystem inside x_bar, and the scaled input driving it
BLOCKS = ((0, 4), (4, 8), (8, 10), (10, 12))
BLOCK_INPUT = (2, 1, 0, 3)

ASSUMPTION_TOL = 1e-12


@dataclass
class LinearModel:
    """``x_dot = a x + b F*`` about hover, with ``F* = F - equilibrium_input``."""

    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    equilibrium_input: ControlInput

    def decoupled(self):
        """``(a, b)`` with the state permuted into ``x_bar`` order."""
        return self.a[np.ix_(PERM, PERM)], self.b[PERM]


@dataclass(frozen=True)
class InputScaling:
    """``F_hat = psi @ F*``."""

    psi: np.ndarray = field(repr=False, compare=False)
    b1: float
    b2: float

    @property
    def psi_inv(self):
        return np.diag(1.0 / np.diag(self.psi))

    def scale(self, raw):
        return np.asarray(raw, dtype=float) @ self.psi.T

    def unscale(self, scaled):
        return np.asarray(scaled, dtype=float) @ self.psi_inv.T


@dataclass(frozen=True)
class LinearSubsystem:
    index: int
    a: np.ndarray = field(repr=False, compare=False)
    b: np.ndarray = field(repr=False, compare=False)
    alpha: float
    q_hat: float
    q_raw: float = float("nan")
    g: float = 9.81

    @property
    def c(self):
        """Position (first state) as the measured output."""
        c = np.zeros((1, self.a.shape[0]))
        c[0, 0] = 1.0
        return c

    @property
    def weight(self):
        """State weight of the scaled cost: ``q_hat**2`` on the output, zero elsewhere."""
        w = np.zeros_like(self.a)
        w[0, 0] = self.q_hat**2
        return w


@dataclass(frozen=True)
class TransferZeros:
    zeros: tuple
    non_minimum_phase: bool
    note: str = ""


def hover_equilibrium(params):
    """Hover state (zero, with position and yaw normalised away) and its input."""
    return RigidState.zero(), ControlInput(params.m_tot * params.g, 0.0, 0.0, 0.0)


def linearize_numeric(params):
    """Central finite-difference Jacobians of the full model at hover."""
    plant = Plant.from_params(params)
    x0, u0 = hover_equilibrium(params)
    x0, u0 = x0.as_array(), np.asarray(u0, dtype=float)

    def jac(f, c):
        out = np.zeros((12, c.size))
        for k in range(c.size):
            h = 1e-6 * max(1.0, abs(c[k]))
            d = np.zeros(c.size)
            d[k] = h
            out[:, k] = (f(c + d) - f(c - d)) / (2 * h)
        return out

    a = jac(lambda x: plant.derivative(x, u0), x0)
    b = jac(lambda u: plant.derivative(x0, u), u0)
    return LinearModel(a, b, ControlInput(*u0))


def check_assumptions(params):
    """Raise :class:`AssumptionViolation` unless the inertia is diagonal and
    payload and POI lie on the body z-axis."""
    h = params.inertia
    off = h - np.diag(np.diag(h))
    if np.any(np.abs(off) > ASSUMPTION_TOL * np.linalg.norm(h)):
        raise AssumptionViolation("diagonal-inertia assumption violated: h_tot has off-diagonal terms")
    for name in ("r_pl", "r_poi"):
        if np.any(np.abs(getattr(params, name)[:2]) > ASSUMPTION_TOL):
            raise AssumptionViolation(
                f"on-axis assumption violated: {name} has a nonzero x/y component"
            )


def input_scaling(params):
    m, z_pl = params.m_tot, params.r_pl[2]
    h = np.diag(params.inertia)
    coupling = params.m_pl * params.m_uav * z_pl**2
    b1 = coupling + h[1] * m
    b2 = coupling + h[0] * m
    psi = np.diag([1.0 / m, m / b2, m / b1, 1.0 / h[2]])
    return InputScaling(psi, float(b1), float(b2))


def simplified_scaled(params):
    """Closed-form ``(A, B_hat)`` in model-state order; inputs are ``F_hat``."""
    check_assumptions(params)
    g, alpha = params.g, params.alpha
    a = np.zeros((12, 12))
    a[0, 10] = g  # vx_dot = g theta
    a[1, 9] = -g  # vy_dot = -g phi
    a[6:9, 0:3] = np.eye(3)
    a[9:12, 3:6] = np.eye(3)
    b_hat = np.zeros((12, 4))
    b_hat[0, 2] = alpha
    b_hat[1, 1] = -alpha
    b_hat[2:6, :] = np.eye(4)
    return a, b_hat


def build_simplified(params, scaling=None):
    """Closed-form hover model expressed in raw inputs (``B = B_hat @ psi``)."""
    scaling = input_scaling(params) if scaling is None else scaling
    a, b_hat = simplified_scaled(params)
    return LinearModel(a, b_hat @ scaling.psi, hover_equilibrium(params)[1])


def _weights(weights):
    if hasattr(weights, "q1"):
        return weights.q1, weights.q2, weights.q3, weights.q4
    return tuple(float(q) for q in weights)


def scaled_weights(params, weights):
    """``(q1_hat, ..., q4_hat)`` for raw output weights ``(q1, ..., q4)``."""
    check_assumptions(params)
    q = _weights(weights)
    s = input_scaling(params)
    m = params.m_tot
    return (s.b1 / m * q[0], s.b2 / m * q[1], m * q[2], float(params.inertia[2, 2]) * q[3])


def lateral_matrices(alpha, g, index=1):
    sign = 1.0 if index == 1 else -1.0
    a = np.diag([1.0, 0.0, 1.0], k=1)
    a[1, 2] = sign * g
    b = np.array([[0.0], [sign * alpha], [0.0], [1.0]])
    return a, b


def double_integrator():
    return np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]])


def decouple(params, weights):
    """The four decoupled subsystems with their scaled weights."""
    q_hat = scaled_weights(params, weights)
    q = _weights(weights)
    alpha, g = float(params.alpha), params.g
    subs = []
    for i in range(4):
        a, b = lateral_matrices(alpha, g, i + 1) if i < 2 else double_integrator()
        subs.append(LinearSubsystem(i + 1, a, b, alpha, float(q_hat[i]), float(q[i]), g))
    return tuple(subs)


def transfer_zeros(subsystem):
    """Zeros of ``(alpha s^2 + g) / s^2`` for a lateral subsystem.

    Returns ``TransferZeros`` with ``+-i sqrt(g/alpha)`` for ``alpha > 0`` and
    ``+-sqrt(g/|alpha|)`` for ``alpha < 0`` (non-minimum phase).
    """
    if subsystem.index not in (1, 2):
        return TransferZeros((), False, "double integrator has no finite zeros")
    alpha, g = subsystem.alpha, subsystem.g
    if alpha == 0:
        return TransferZeros((), False, "alpha = 0: no finite zeros")
    w = np.sqrt(g / abs(alpha))
    if alpha > 0:
        return TransferZeros((1j * w, -1j * w), False)
    return TransferZeros((complex(w), complex(-w)), True)

