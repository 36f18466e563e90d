"""Euler-Lagrange model of a multirotor with a rigidly attached payload.

Generalized coordinates are the inertial position of the point of interest
(POI) and the ZYX Euler angles; the velocity vector uses the POI velocity and
the body rates. The 12-dim state is ordered::

    x = [v_poi (3), omega (3), p_poi (3), eta (3)]

and the input is ``F_u = [T, tau_phi, tau_theta, tau_psi]``. The equations of
motion read ``B_y acc + C_y vel + G_y = M_F(eta) F_u``.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .exceptions import NonFiniteStateError
from .spatial_math import E3, gamma_inv, rotation_partials, rotation_zyx, skew

STATE_LABELS = (
    "vx", "vy", "vz", "wx", "wy", "wz", "px", "py", "pz", "phi", "theta", "psi",
)
INPUT_LABELS = ("T", "tau_phi", "tau_theta", "tau_psi")

DEFAULT_INERTIA = ((0.25, 0.0, 0.0), (0.0, 0.25, 0.0), (0.0, 0.0, 0.14))


def _vec3(v):
    out = tuple(float(c) for c in np.asarray(v, dtype=float).reshape(3))
    return out


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters; defaults are a 22 kg heavy-lift vehicle with a 6 kg payload.

    ``h_tot`` is the body-plus-payload inertia about the body frame origin
    (the rotor-plane centre); positions are body-frame coordinates in metres.
    """

    m_uav: float = 22.0
    m_pl: float = 6.0
    r_pl: tuple = (0.0, 0.0, 4.0)
    r_poi: tuple = (0.0, 0.0, 4.0)
    h_tot: tuple = DEFAULT_INERTIA
    g: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "m_uav", float(self.m_uav))
        object.__setattr__(self, "m_pl", float(self.m_pl))
        object.__setattr__(self, "g", float(self.g))
        object.__setattr__(self, "r_pl", _vec3(self.r_pl))
        object.__setattr__(self, "r_poi", _vec3(self.r_poi))
        h = np.asarray(self.h_tot, dtype=float)
        if h.shape == (3,):
            h = np.diag(h)
        if h.shape != (3, 3):
            raise ValueError("h_tot must be a 3x3 matrix or a 3-vector of principal values")
        object.__setattr__(self, "h_tot", tuple(tuple(float(c) for c in row) for row in h))
        self._validate()

    def _validate(self):
        values = [self.m_uav, self.m_pl, self.g, *self.r_pl, *self.r_poi]
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(self.h_tot)):
            raise ValueError("vehicle parameters must be finite")
        if self.m_uav <= 0:
            raise ValueError("m_uav must be positive")
        if self.m_pl < 0:
            raise ValueError("m_pl must be non-negative")
        if self.g <= 0:
            raise ValueError("g must be positive")
        h = self.inertia
        if not np.allclose(h, h.T, rtol=0, atol=1e-12 * max(1.0, np.abs(h).max())):
            raise ValueError("h_tot must be symmetric")
        try:
            np.linalg.cholesky(h)
        except np.linalg.LinAlgError:
            raise ValueError("h_tot must be positive definite") from None

    @property
    def m_tot(self):
        return self.m_uav + self.m_pl

    @property
    def inertia(self):
        return np.array(self.h_tot)

    @property
    def payload_position(self):
        return np.array(self.r_pl)

    @property
    def poi_position(self):
        return np.array(self.r_poi)

    @property
    def alpha(self):
        return self.r_poi[2] - self.m_pl / self.m_tot * self.r_pl[2]

    def with_placement(self, z_pl=None, z_poi=None):
        """Copy with the vertical payload and/or POI coordinate replaced."""
        r_pl, r_poi = list(self.r_pl), list(self.r_poi)
        if z_pl is not None:
            r_pl[2] = z_pl
        if z_poi is not None:
            r_poi[2] = z_poi
        return replace(self, r_pl=tuple(r_pl), r_poi=tuple(r_poi))

    def with_payload_at_poi(self, z):
        """Payload is the controlled point, both at body height ``z``."""
        return self.with_placement(z_pl=z, z_poi=z)

    def with_alpha(self, alpha, payload_is_poi=True):
        """Copy whose signed POI-above-CoG distance equals ``alpha``.

        With ``payload_is_poi`` both points move together; otherwise the
        payload stays put and only the POI height changes.
        """
        if payload_is_poi:
            return self.with_payload_at_poi(alpha * self.m_tot / self.m_uav)
        return self.with_placement(z_poi=alpha + self.m_pl / self.m_tot * self.r_pl[2])


@dataclass(frozen=True)
class DerivedGeometry:
    m_tot: float
    r_hat: np.ndarray = field(compare=False)
    alpha: float
    h_cog: np.ndarray = field(compare=False)


def derive_geometry(params):
    """Total mass, POI offset from the combined CoG, alpha and inertia about the CoG.

    The inertia follows from the parallel axis theorem applied to the body and
    payload masses about their common centre of gravity.
    """
    m = params.m_tot
    r_pl = params.payload_position
    s = skew(r_pl)
    h_cog = params.m_uav * params.m_pl / m * s.T @ s + params.inertia
    r_hat = params.poi_position - params.m_pl / m * r_pl
    return DerivedGeometry(m_tot=m, r_hat=r_hat, alpha=float(params.alpha), h_cog=h_cog)


@dataclass
class RigidState:
    v_poi: np.ndarray
    omega: np.ndarray
    p_poi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        for name in ("v_poi", "omega", "p_poi", "eta"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    def as_array(self):
        return np.concatenate([self.v_poi, self.omega, self.p_poi, self.eta])

    def __array__(self, dtype=None, copy=None):
        a = self.as_array()
        return a if dtype is None else a.astype(dtype)

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    @classmethod
    def zero(cls):
        return cls.from_array(np.zeros(12))


class ControlInput(NamedTuple):
    thrust: float
    tau_phi: float = 0.0
    tau_theta: float = 0.0
    tau_psi: float = 0.0


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0:3], x[..., 3:6], x[..., 6:9], x[..., 9:12]


def _mv(a, b):
    return np.einsum("...ij,...j->...i", a, b)


class Plant:
    """Vectorised evaluation of the equations of motion.

    Every attribute may carry leading batch axes, so a single ``Plant`` can
    hold many vehicles (e.g. an alpha sweep) and be evaluated on a matching
    batch of states in one call.
    """

    def __init__(self, m_tot, g, r_hat, h_cog):
        self.m = np.asarray(m_tot, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.r_hat = np.asarray(r_hat, dtype=float)
        self.h_cog = np.asarray(h_cog, dtype=float)
        self.s_r = skew(self.r_hat)
        self.m1 = self.h_cog + self.m[..., None, None] * np.swapaxes(self.s_r, -1, -2) @ self.s_r

    @classmethod
    def from_params(cls, params):
        geo = derive_geometry(params)
        return cls(geo.m_tot, params.g, geo.r_hat, geo.h_cog)

    @classmethod
    def stack(cls, params_list):
        geos = [derive_geometry(p) for p in params_list]
        return cls(
            [g.m_tot for g in geos],
            [p.g for p in params_list],
            np.stack([g.r_hat for g in geos]),
            np.stack([g.h_cog for g in geos]),
        )

    def mass_matrix(self, eta, R=None):
        R = rotation_zyx(eta) if R is None else R
        m = self.m[..., None, None]
        top_right = m * R @ self.s_r
        shape = np.broadcast_shapes(top_right.shape[:-2], self.m1.shape[:-2])
        out = np.empty(shape + (6, 6))
        out[..., :3, :3] = m * np.eye(3)
        out[..., :3, 3:] = top_right
        out[..., 3:, :3] = np.swapaxes(top_right, -1, -2)
        out[..., 3:, 3:] = self.m1
        return out

    def _m3(self, v, eta, g_inv=None, R=None):
        # row i: m * sum_k Ginv[k, i] * v^T (dR/d eta_k) S(r_hat), with dR/d eta_k the
        # k-th 3x3 block of R_eta (transpose of the stacked dR^T/d eta_k)
        g_inv = gamma_inv(eta) if g_inv is None else g_inv
        d_rt = np.stack(rotation_partials(eta, R), axis=-3)
        vd = np.einsum("...a,...kba->...kb", v, d_rt)
        rows = np.einsum("...ki,...kb->...ib", g_inv, vd)
        return self.m[..., None, None] * rows @ self.s_r

    def coriolis_matrix(self, v, omega, eta, R=None, g_inv=None):
        R = rotation_zyx(eta) if R is None else R
        s_w = skew(omega)
        m = self.m[..., None, None]
        m2 = self.s_r @ s_w - s_w @ self.s_r
        top_right = m * R @ s_w @ self.s_r
        bottom_left = m * m2 @ np.swapaxes(R, -1, -2)
        bottom_right = s_w @ self.m1 - self._m3(v, eta, g_inv, R)
        shape = np.broadcast_shapes(top_right.shape[:-2], bottom_right.shape[:-2])
        out = np.zeros(shape + (6, 6))
        out[..., :3, 3:] = top_right
        out[..., 3:, :3] = bottom_left
        out[..., 3:, 3:] = bottom_right
        return out

    def gravity_vector(self, eta, R=None):
        # gamma(eta) @ e3 == R.T @ e3; the latter avoids the gimbal check here
        R = rotation_zyx(eta) if R is None else R
        up_body = R[..., 2, :]
        mg = (self.m * self.g)[..., None]
        torque = -mg * _mv(self.s_r, up_body)
        force = mg * E3
        force, torque = np.broadcast_arrays(force, torque)
        return np.concatenate([force, torque], axis=-1)

    def input_matrix(self, eta, R=None):
        """``M_F(eta)``: maps ``F_u`` to generalized forces (thrust along body z)."""
        R = rotation_zyx(eta) if R is None else R
        out = np.zeros(R.shape[:-2] + (6, 4))
        out[..., :3, 0] = R[..., :, 2]
        out[..., 3:, 1:] = np.eye(3)
        return out

    def bias(self, x, R=None, g_inv=None):
        """Velocity- and gravity-dependent terms ``C_y vel + G_y``."""
        v, w, _, eta = _split(x)
        R = rotation_zyx(eta) if R is None else R
        vel = np.concatenate([v, w], axis=-1)
        return _mv(self.coriolis_matrix(v, w, eta, R, g_inv), vel) + self.gravity_vector(eta, R)

    def derivative(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        v, w, _, eta = _split(x)
        R = rotation_zyx(eta)
        g_inv = gamma_inv(eta)
        rhs = _mv(self.input_matrix(eta, R), u) - self.bias(x, R, g_inv)
        acc = np.linalg.solve(self.mass_matrix(eta, R), rhs[..., None])[..., 0]
        return np.concatenate([acc, v, _mv(g_inv, w)], axis=-1)

    def energy(self, x):
        v, w, p, eta = _split(x)
        R = rotation_zyx(eta)
        p_cog = p - _mv(R, self.r_hat)
        v_cog = v - _mv(R @ skew(w), self.r_hat)
        kinetic = 0.5 * self.m * np.sum(v_cog**2, axis=-1) + 0.5 * np.einsum(
            "...i,...ij,...j->...", w, self.h_cog, w
        )
        potential = self.m * self.g * p_cog[..., 2]
        return kinetic, potential


def _state(x):
    if isinstance(x, RigidState):
        return x.as_array()
    return np.asarray(x, dtype=float)


def mass_matrix(params, eta):
    """6x6 generalized inertia ``B_y(eta)``; symmetric positive definite."""
    return Plant.from_params(params).mass_matrix(eta)


def coriolis_matrix(params, state):
    """Velocity-dependent matrix ``C_y(v_poi, omega, eta)``."""
    v, w, _, eta = _split(_state(state))
    return Plant.from_params(params).coriolis_matrix(v, w, eta)


def gravity_vector(params, eta):
    """Generalized gravity ``G_y(eta)``, the gradient of the potential energy.

    The rotational block is ``m g S(r_hat)^T Gamma e3`` (the torque of gravity
    acting at the CoG, taken about the POI, with a minus sign).
    """
    return Plant.from_params(params).gravity_vector(eta)


def nonlinear_derivative(params, state, u):
    """State derivative ``x_dot = f(x, F_u)`` of the full nonlinear model."""
    x = _state(state)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(np.asarray(u, dtype=float))):
        raise NonFiniteStateError("state and input must be finite")
    return Plant.from_params(params).derivative(x, u)


def energy(params, state):
    """Kinetic and potential energy ``(K, U)`` of the vehicle in joules."""
    k, u = Plant.from_params(params).energy(_state(state))
    return float(k), float(u)
