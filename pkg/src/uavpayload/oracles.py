"""Independent reference computations used to cross-check the main routes.

Nothing here reuses the Euler-Lagrange matrices, closed-form Riccati blocks or
analytical H2 expressions; each function takes a different path to the same
quantity so that agreement means something.
"""

from fractions import Fraction

import numpy as np
import scipy.linalg

from .spatial_math import E3, gamma, rotation_zyx, skew
from .vehicle_model import derive_geometry


def newton_euler_derivative(params, x, u):
    """State derivative from Newton-Euler equations about the combined CoG.

    Thrust ``T`` along body z acts at the POI together with the pure moment
    ``tau``; the CoG obeys ``m p_cog'' = T R e3 - m g e3`` and the attitude
    obeys Euler's equation about the CoG. The POI acceleration is then
    recovered kinematically.
    """
    geo = derive_geometry(params)
    m, r, h = geo.m_tot, geo.r_hat, geo.h_cog
    x = np.asarray(x, dtype=float)
    v, w, eta = x[0:3], x[3:6], x[9:12]
    T, tau = u[0], np.asarray(u[1:4], dtype=float)
    R = rotation_zyx(eta)
    w_dot = np.linalg.solve(h, tau + np.cross(r, T * E3) - np.cross(w, h @ w))
    a_cog = T * R[:, 2] / m - params.g * E3
    v_dot = a_cog + R @ (np.cross(w_dot, r) + np.cross(w, np.cross(w, r)))
    eta_dot = np.linalg.solve(gamma(eta), w)
    return np.concatenate([v_dot, w_dot, v, eta_dot])


def lagrangian(params, xi, xi_dot):
    """``L = K - U`` in generalized coordinates ``xi = (p_poi, eta)``."""
    geo = derive_geometry(params)
    p, eta = xi[:3], xi[3:]
    p_dot, eta_dot = xi_dot[:3], xi_dot[3:]
    R = rotation_zyx(eta)
    w = gamma(eta) @ eta_dot
    v_cog = p_dot + R @ skew(geo.r_hat) @ w
    kinetic = 0.5 * geo.m_tot * v_cog @ v_cog + 0.5 * w @ geo.h_cog @ w
    potential = geo.m_tot * params.g * (p - R @ geo.r_hat)[2]
    return kinetic - potential


def _d4(f, h):
    """Fourth-order central difference of a scalar-parameter function at 0."""
    return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h)


def euler_lagrange_residual(params, xi0, xi_dot0, xi_ddot0, h_t=1e-3, h_x=1e-4):
    """``d/dt dL/dxi_dot - dL/dxi`` at t=0 along ``xi(t) = xi0 + xi_dot0 t + xi_ddot0 t^2/2``.

    The momentum ``dL/dxi_dot`` is exact under a unit central difference
    because ``L`` is quadratic in the velocities.
    """
    xi0, xi_dot0, xi_ddot0 = (np.asarray(a, dtype=float) for a in (xi0, xi_dot0, xi_ddot0))
    n = xi0.size
    eye = np.eye(n)

    def momentum(xi, xi_dot):
        return np.array(
            [
                (lagrangian(params, xi, xi_dot + eye[k]) - lagrangian(params, xi, xi_dot - eye[k])) / 2
                for k in range(n)
            ]
        )

    def along(t):
        return momentum(xi0 + xi_dot0 * t + 0.5 * xi_ddot0 * t * t, xi_dot0 + xi_ddot0 * t)

    dpdt = _d4(along, h_t)
    dldq = np.array(
        [_d4(lambda s, k=k: lagrangian(params, xi0 + s * eye[k], xi_dot0), h_x) for k in range(n)]
    )
    return dpdt - dldq


def care_residual_exact(a, b, q, r, p):
    """``A'P + PA - P B R^-1 B' P + Q`` evaluated in exact rational arithmetic.

    ``R`` must be diagonal. The result is rounded to float once at the end.
    """
    fr = lambda m: [[Fraction(float(v)) for v in row] for row in np.atleast_2d(m)]  # noqa: E731
    a, b, q, p = fr(a), fr(b), fr(q), fr(p)
    r_inv = [Fraction(1) / Fraction(float(v)) for v in np.diag(np.atleast_2d(r))]
    n, k = len(a), len(b[0])

    def mul(x, y):
        return [[sum(x[i][t] * y[t][j] for t in range(len(y))) for j in range(len(y[0]))]
                for i in range(len(x))]

    pa = mul(p, a)
    pb = mul(p, b)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            quad = sum(pb[i][t] * r_inv[t] * pb[j][t] for t in range(k))
            out[i, j] = float(pa[j][i] + pa[i][j] - quad + q[i][j])
    return out


def care_hamiltonian(a, b, q, r, refine=3):
    """Stabilizing solution of ``A'P + PA - P B R^-1 B' P + Q = 0``.

    Ordered real Schur form of the Hamiltonian matrix; the stable invariant
    subspace ``[U1; U2]`` gives ``P = U2 U1^-1``. Badly scaled problems lose
    several digits there, so ``refine`` Newton steps follow, each solving a
    Lyapunov equation for the correction against an exactly computed residual.
    """
    a, b, q, r = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (a, b, q, r))
    n = a.shape[0]
    g = b @ np.linalg.solve(r, b.T)
    ham = np.block([[a, -g], [-q, -a.T]])
    # balance before the Schur decomposition; the scaling is undone on the basis
    ham_b, (scale, _) = scipy.linalg.matrix_balance(ham, permute=False, separate=True)
    _, z, sdim = scipy.linalg.schur(ham_b, output="real", sort="lhp")
    if sdim != n:
        raise np.linalg.LinAlgError("Hamiltonian has eigenvalues on the imaginary axis")
    basis = scale[:, None] * z[:, :n]
    u1, u2 = basis[:n], basis[n:]
    p = np.linalg.solve(u1.T, u2.T).T
    p = 0.5 * (p + p.T)
    for _ in range(refine):
        a_cl = a - g @ p
        res = care_residual_exact(a, b, q, r, p)
        dp = scipy.linalg.solve_continuous_lyapunov(a_cl.T, -res)
        p = p + 0.5 * (dp + dp.T)
    return p


def transmission_zeros(a, b, c, d=None):
    """Finite generalized eigenvalues of the Rosenbrock system pencil."""
    a, b, c = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (a, b, c))
    n, mi = b.shape
    p = c.shape[0]
    d = np.zeros((p, mi)) if d is None else np.atleast_2d(d)
    big = np.block([[a, b], [c, d]])
    e = np.zeros_like(big)
    e[:n, :n] = np.eye(n)
    vals = scipy.linalg.eigvals(big, e)
    return vals[np.isfinite(vals) & (np.abs(vals) < 1e8)]


def h2_lyapunov(a_cl, b_w, c_z):
    """Closed-loop H2 norm from the controllability Gramian."""
    x = scipy.linalg.solve_continuous_lyapunov(a_cl, -b_w @ b_w.T)
    return float(np.sqrt(np.trace(c_z @ x @ c_z.T)))


def golden_section(f, lo, hi, tol=1e-10, max_iter=500):
    """Minimiser of a unimodal function on ``[lo, hi]``."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
