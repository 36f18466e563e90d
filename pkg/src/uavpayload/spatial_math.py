"""Rotation and kinematics primitives.

All functions broadcast over leading axes: a vector argument of shape
``(..., 3)`` gives a matrix of shape ``(..., 3, 3)``. Euler angles are
``eta = (phi, theta, psi)`` in the ZYX (yaw-pitch-roll) convention, and the
rotation matrix maps body-frame vectors to the inertial frame::

    R = Rz(psi) @ Ry(theta) @ Rx(phi)
"""

import numpy as np

from .exceptions import SingularAttitudeError

# |theta| >= pi/2 - GIMBAL_MARGIN is treated as gimbal lock
GIMBAL_MARGIN = 1e-6

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def _assemble(entries):
    """3x3 matrix (with broadcast batch axes) from nine row-major entries."""
    entries = [np.asarray(e, dtype=float) for e in entries]
    shape = np.broadcast_shapes(*(e.shape for e in entries))
    out = np.empty(shape + (9,))
    for k, e in enumerate(entries):
        out[..., k] = e
    return out.reshape(shape + (3, 3))


def skew(a):
    """Cross-product matrix, ``skew(a) @ b == cross(a, b)``."""
    a = np.asarray(a, dtype=float)
    x, y, z = a[..., 0], a[..., 1], a[..., 2]
    return _assemble([0.0, -z, y, z, 0.0, -x, -y, x, 0.0])


def _trig(eta):
    eta = np.asarray(eta, dtype=float)
    phi, theta, psi = eta[..., 0], eta[..., 1], eta[..., 2]
    return np.sin(phi), np.cos(phi), np.sin(theta), np.cos(theta), np.sin(psi), np.cos(psi)


def _rx(s, c):
    return _assemble([1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c])


def _ry(s, c):
    return _assemble([c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c])


def _rz(s, c):
    return _assemble([c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])


def rotation_zyx(eta):
    """Body-to-inertial rotation matrix for ZYX Euler angles."""
    sf, cf, st, ct, sp, cp = _trig(eta)
    return _assemble(
        [
            cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
            sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
            -st, ct * sf, ct * cf,
        ]
    )


def check_attitude(eta):
    """Raise :class:`SingularAttitudeError` if any pitch is at gimbal lock."""
    theta = np.asarray(eta, dtype=float)[..., 1]
    if np.any(np.abs(np.cos(theta)) <= np.sin(GIMBAL_MARGIN)):
        raise SingularAttitudeError(
            f"pitch angle within {GIMBAL_MARGIN:g} rad of +-pi/2 (gimbal lock)"
        )


def gamma(eta):
    """Matrix ``Gamma`` with ``omega = Gamma @ eta_dot`` (body rates from Euler rates).

    Raises
    ------
    SingularAttitudeError
        If ``cos(theta)`` vanishes, since the map is then not invertible.
    """
    check_attitude(eta)
    sf, cf, st, ct, _, _ = _trig(eta)
    return _assemble([1.0, 0.0, -st, 0.0, cf, sf * ct, 0.0, -sf, cf * ct])


def gamma_inv(eta):
    """Closed-form inverse of :func:`gamma` (Euler rates from body rates)."""
    check_attitude(eta)
    sf, cf, st, ct, _, _ = _trig(eta)
    tt = st / ct
    return _assemble([1.0, sf * tt, cf * tt, 0.0, cf, -sf, 0.0, sf / ct, cf / ct])


def euler_rates(eta, omega):
    return np.einsum("...ij,...j->...i", gamma_inv(eta), np.asarray(omega, dtype=float))


def rotation_rate_consistency(eta, omega):
    """Time derivative of ``R`` for body rate ``omega``: ``R @ skew(omega)``."""
    return rotation_zyx(eta) @ skew(omega)


def rotation_partials(eta, R=None):
    """Partial derivatives of ``R.T`` with respect to phi, theta and psi.

    Returns a tuple ``(dRt_dphi, dRt_dtheta, dRt_dpsi)``. Uses
    ``dR/dphi = R S(e1)`` and ``dR/dpsi = S(e3) R``; ``dR/dtheta`` is written
    out entrywise.
    """
    sf, cf, st, ct, sp, cp = _trig(eta)
    R = rotation_zyx(eta) if R is None else R
    zero = np.zeros_like(sf)
    d_phi = np.empty(R.shape)
    d_phi[..., :, 0] = 0.0
    d_phi[..., :, 1] = R[..., :, 2]
    d_phi[..., :, 2] = -R[..., :, 1]
    d_psi = np.empty(R.shape)
    d_psi[..., 0, :] = -R[..., 1, :]
    d_psi[..., 1, :] = R[..., 0, :]
    d_psi[..., 2, :] = 0.0
    d_theta = _assemble(
        [
            -cp * st, cp * ct * sf, cp * ct * cf,
            -sp * st, sp * ct * sf, sp * ct * cf,
            -ct + zero, -st * sf, -st * cf,
        ]
    )
    t = lambda m: np.swapaxes(m, -1, -2)  # noqa: E731
    return t(d_phi), t(d_theta), t(d_psi)
