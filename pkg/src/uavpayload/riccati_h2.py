"""Closed-form Riccati solutions, LQR gains and H2 norms of the decoupled hover model.

For a lateral subsystem with scaled weight ``q`` and offset ``alpha`` the
closed forms are written in terms of::

    a = sqrt(2 g q**7),  b = alpha q**4,  sigma = sqrt((a - b)**2 + a**2)

Subsystem 2 is subsystem 1 seen through ``T = diag(1, 1, -1, -1)`` (the roll
and roll-rate states change sign), so ``P2 = T P1 T``.
"""

from dataclasses import dataclass, field

import numpy as np

from .linear_analysis import BLOCK_INPUT, BLOCKS, PERM, decouple, input_scaling, scaled_weights
from .oracles import golden_section

_FLIP = np.diag([1.0, 1.0, -1.0, -1.0])


@dataclass(frozen=True)
class CostWeights:
    """Output weights ``Q = diag(q1**2, ..., q4**2)``; the input weight is ``R = I``."""

    q1: float = 5.0
    q2: float = 5.0
    q3: float = 5.0
    q4: float = 5.0

    def __post_init__(self):
        for name in ("q1", "q2", "q3", "q4"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def uniform(cls, q):
        return cls(q, q, q, q)

    def __iter__(self):
        return iter((self.q1, self.q2, self.q3, self.q4))


@dataclass
class RiccatiBlock:
    index: int
    p: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)

    def residual(self):
        """Relative Frobenius residual ``||A'P + PA - PBB'P + Q|| / ||Q||``."""
        p, a, b = self.p, self.a, self.b
        res = a.T @ p + p @ a - p @ b @ b.T @ p + self.weight
        return float(np.linalg.norm(res) / np.linalg.norm(self.weight))

    @property
    def gain(self):
        """``K = R^-1 B' P`` as a row vector."""
        return (self.b.T @ self.p)[0]


def _abs(alpha, q_hat, g):
    a = np.sqrt(2.0 * g * q_hat**7)
    b = alpha * q_hat**4
    sigma = np.hypot(a - b, a)
    return a, b, sigma


def _a_minus_b_plus_sigma(a, b, sigma):
    # a - b + sigma loses all digits when b >> a; use a**2 / (sigma + b - a) there
    return np.where(b > a, a * a / (sigma + np.abs(b - a)), a - b + sigma)


def p11(alpha, q_hat, g=9.81):
    a, b, sigma = _abs(alpha, q_hat, g)
    return np.sqrt(2.0 / g) * np.sqrt(_a_minus_b_plus_sigma(a, b, sigma))


def lateral_riccati(alpha, q_hat, g=9.81):
    """Closed-form ``P1`` for ``x1 = (x, x_dot, theta, omega_y)``."""
    q = float(q_hat)
    s = float(p11(alpha, q, g))
    p22 = 3.0 / (8.0 * q**4) * s**3 + alpha / (2.0 * g) * s - q**3 / (g * s)
    p12 = s**2 / (2.0 * q**2)
    p13 = g / (2.0 * q**4) * s**3 - g * p22
    p14 = q - alpha / (2.0 * q**2) * s**2
    p23 = g / (8.0 * q**6) * s**4
    p24 = s / q - alpha * p22
    p33 = g / (2.0 * q**4) * s**2 * p13 - g / q * s + alpha * g * p22
    p34 = g / (2.0 * q**3) * s**2 - alpha * g / (8.0 * q**6) * s**4
    p44 = g / (2.0 * q**5) * s**3 - g / q * p22 - alpha * p24
    return np.array(
        [
            [s, p12, p13, p14],
            [p12, p22, p23, p24],
            [p13, p23, p33, p34],
            [p14, p24, p34, p44],
        ]
    )


def double_integrator_riccati(q_hat):
    q = float(q_hat)
    r = np.sqrt(2.0 * q)
    return np.array([[q * r, q], [q, r]])


def closed_form_riccati(subsystem, q_hat=None):
    """Closed-form stabilizing ARE solution for one decoupled subsystem."""
    q = subsystem.q_hat if q_hat is None else float(q_hat)
    if q <= 0:
        raise ValueError("q_hat must be positive")
    if subsystem.index in (1, 2):
        p = lateral_riccati(subsystem.alpha, q, subsystem.g)
        if subsystem.index == 2:
            p = _FLIP @ p @ _FLIP
    else:
        p = double_integrator_riccati(q)
    weight = np.zeros_like(subsystem.a)
    weight[0, 0] = q**2
    return RiccatiBlock(subsystem.index, p, subsystem.a, subsystem.b, weight)


def riccati_blocks(params, weights):
    subs = decouple(params, weights)
    return subs, tuple(closed_form_riccati(s) for s in subs)


def full_riccati(blocks):
    """Block-diagonal ``P`` in ``x_bar`` order."""
    p = np.zeros((12, 12))
    for blk, (lo, hi) in zip(blocks, BLOCKS):
        p[lo:hi, lo:hi] = blk.p
    return p


def lqr_gain(blocks, subsystems=None):
    """4x12 gain ``K`` with ``F_hat = -K x_bar`` (rows T, tau_phi, tau_theta, tau_psi)."""
    k = np.zeros((4, 12))
    for i, blk in enumerate(blocks):
        lo, hi = BLOCKS[i]
        k[BLOCK_INPUT[i], lo:hi] = blk.gain
    return k


def raw_gain(k_bar, scaling):
    """Gain on the 12-dim model state giving raw inputs: ``F* = -K_raw x``."""
    k_raw = np.zeros((4, 12))
    k_raw[:, PERM] = scaling.psi_inv @ k_bar
    return k_raw


def closed_loop(params, weights):
    """``(A_bar, B_bar, K_bar, P)`` of the scaled decoupled closed loop."""
    subs, blocks = riccati_blocks(params, weights)
    a = np.zeros((12, 12))
    b = np.zeros((12, 4))
    for i, s in enumerate(subs):
        lo, hi = BLOCKS[i]
        a[lo:hi, lo:hi] = s.a
        b[lo:hi, BLOCK_INPUT[i]] = s.b[:, 0]
    return a, b, lqr_gain(blocks), full_riccati(blocks)


def h2_squared_closed_form(alpha, q_hat, g=9.81, index=1, q_raw=None):
    """``(2a - b + sigma) / (d**1.5 sqrt(a - b + sigma))`` with ``d = q_hat``.

    This expression equals ``trace(B'PB)``, the squared H2 norm. Passing
    ``q_raw`` uses the raw weight in the denominator instead; that variant is
    a diagnostic and does not match the trace.
    """
    if index in (3, 4):
        return np.sqrt(2.0 * np.asarray(q_hat, dtype=float))
    a, b, sigma = _abs(np.asarray(alpha, dtype=float), np.asarray(q_hat, dtype=float), g)
    amb = _a_minus_b_plus_sigma(a, b, sigma)
    d = q_hat if q_raw is None else q_raw
    return (a + amb) / (np.asarray(d, dtype=float) ** 1.5 * np.sqrt(amb))


def analytical_h2(subsystem, q_hat=None, q_raw=None):
    """H2 norm of one decoupled closed loop, ``sqrt(trace(B'PB))`` in closed form."""
    q = subsystem.q_hat if q_hat is None else float(q_hat)
    return float(np.sqrt(h2_squared_closed_form(subsystem.alpha, q, subsystem.g,
                                                 subsystem.index, q_raw)))


def lateral_h2(alpha, q_hat, g=9.81):
    return np.sqrt(h2_squared_closed_form(alpha, q_hat, g))


def trace_h2(block):
    """``sqrt(trace(B'PB))`` from a Riccati block."""
    b = block.b
    return float(np.sqrt(np.trace(b.T @ block.p @ b)))


def optimal_alpha(q_hat, g=9.81):
    return np.sqrt(2.0 * g / np.asarray(q_hat, dtype=float))


def h2_at_optimum(q_hat, g=9.81):
    """``2 (2 g q_hat)**0.25``: squared H2 at ``alpha = optimal_alpha(q_hat)``."""
    return 2.0 * (2.0 * g * q_hat) ** 0.25


def above_below_gap(q_hat, alpha_magnitude, g=9.81):
    """``H2(-|alpha|) - H2(+|alpha|)``; nonnegative, zero only at ``alpha = 0``."""
    if np.any(np.asarray(alpha_magnitude) < 0):
        raise ValueError("alpha_magnitude must be nonnegative")
    return lateral_h2(-alpha_magnitude, q_hat, g) - lateral_h2(alpha_magnitude, q_hat, g)


def golden_alpha(q_hat, g=9.81, tol=1e-10):
    """Numerical minimiser of the lateral H2 norm over alpha."""
    hi = 10.0 * float(optimal_alpha(q_hat, g)) + 1.0
    return golden_section(lambda al: float(lateral_h2(al, q_hat, g)), -hi, hi, tol=tol)


@dataclass
class H2Report:
    alpha: float
    h2: tuple  # analytical H2 per subsystem
    alpha_star: tuple  # per lateral subsystem, at the configured z_pl
    golden_alpha_star: tuple
    z_poi_star: tuple  # optimal POI height for the configured z_pl
    z_pl_star: float
    z_poi_star_free: tuple  # optimal POI height with z_pl = z_pl_star
    above_below_gap: tuple  # per lateral subsystem, for |alpha| of the configuration


def optimal_placement(params, weights):
    """Optimal offset, POI height and payload height for each lateral subsystem."""
    subs = decouple(params, weights)
    shift = params.m_pl / params.m_tot * params.r_pl[2]
    free_q = scaled_weights(params.with_placement(z_pl=0.0), weights)
    alpha_star, golden, z_poi, z_free, gaps = [], [], [], [], []
    for s, qf in zip(subs[:2], free_q[:2]):
        a_star = float(optimal_alpha(s.q_hat, s.g))
        alpha_star.append(a_star)
        golden.append(golden_alpha(s.q_hat, s.g))
        z_poi.append(a_star + shift)
        z_free.append(float(optimal_alpha(qf, s.g)))
        gaps.append(float(above_below_gap(s.q_hat, abs(s.alpha), s.g)))
    return H2Report(
        alpha=float(params.alpha),
        h2=tuple(analytical_h2(s) for s in subs),
        alpha_star=tuple(alpha_star),
        golden_alpha_star=tuple(golden),
        z_poi_star=tuple(z_poi),
        z_pl_star=0.0,
        z_poi_star_free=tuple(z_free),
        above_below_gap=tuple(gaps),
    )


def h2_surface(params, weights, z_pl_grid, z_poi_grid, index=1):
    """Lateral H2 norm on a (z_pl, z_poi) grid; rows follow ``z_pl_grid``."""
    z_pl = np.asarray(z_pl_grid, dtype=float)
    z_poi = np.asarray(z_poi_grid, dtype=float)
    out = np.empty((z_pl.size, z_poi.size))
    for i, zp in enumerate(z_pl):
        p = params.with_placement(z_pl=zp)
        q_hat = scaled_weights(p, weights)[index - 1]
        alpha = z_poi - params.m_pl / params.m_tot * zp
        out[i] = lateral_h2(alpha, q_hat, params.g)
    return out

