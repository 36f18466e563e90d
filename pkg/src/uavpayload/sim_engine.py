"""Closed-loop simulation of the LQR-controlled vehicle, with optional input noise.

The controller is the decoupled LQR law ``F_hat = -K x_bar`` mapped to raw
inputs through ``psi``; the applied input is ``F = F_eq - psi^-1 K x_bar + w``.
All runs are vectorised: a batch of vehicles, weights and initial states is
integrated in lock step, which is how seeds and parameter sweeps are run.

Cost accounting uses the scaled cost (weights ``q_hat``, scaled input),
integrated as an extra state so that it shares the integrator's quadrature.
"""

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .exceptions import SimulationAborted
from .linear_analysis import BLOCK_INPUT, PERM, build_simplified, input_scaling
from .riccati_h2 import CostWeights, analytical_h2, closed_loop, riccati_blocks
from .vehicle_model import INPUT_LABELS, STATE_LABELS, Plant, RigidState, _state

INTEGRATORS = ("rk4", "adaptive")
MODELS = ("nonlinear", "linearized")
OUTPUT_INDEX = np.array([6, 7, 8, 11])  # x, y, z, psi in the model state
DIVERGENCE_LIMIT = 1e6
PITCH_LIMIT = np.pi / 2 - 1e-3


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 10.0
    integrator: str = "rk4"
    noise_sigma: float = 0.0
    seed: int = 0
    model: str = "nonlinear"
    noise_channel: int = 1  # subsystem whose scaled input is disturbed

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not self.horizon >= self.dt:
            raise ValueError("horizon must be at least one step")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.noise_sigma > 0 and self.integrator != "rk4":
            raise ValueError("noise runs require the fixed-step rk4 integrator")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.noise_channel not in (1, 2, 3, 4):
            raise ValueError("noise_channel must be 1..4")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)  # (n, 12)
    inputs: np.ndarray = field(repr=False)  # (n, 4), applied raw inputs
    cumulative_cost: np.ndarray = field(repr=False)
    aborted: bool = False
    reason: str = ""

    def __len__(self):
        return self.times.size

    def state(self, k):
        return RigidState.from_array(self.states[k])

    @property
    def final_cost(self):
        return float(self.cumulative_cost[-1])

    def to_csv(self, path=None, metadata=None):
        """Write (or return) CSV text; ``metadata`` lines are prefixed with ``#``."""
        buf = io.StringIO()
        for key, value in (metadata or {}).items():
            buf.write(f"# {key}: {value}\n")
        if self.aborted:
            buf.write(f"# aborted: {self.reason}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *STATE_LABELS, *INPUT_LABELS, "cumulative_cost"])
        data = np.column_stack([self.times, self.states, self.inputs, self.cumulative_cost])
        writer.writerows([[repr(float(v)) for v in row] for row in data])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class H2Estimate:
    value: float
    standard_error: float
    n_steps: int
    n_runs: int
    burn_in: float = 0.0
    analytical: float = float("nan")

    @property
    def relative_error(self):
        return abs(self.value / self.analytical - 1.0)


class ClosedLoop:
    """Batch of LQR closed loops (one entry per vehicle/weights pair).

    ``derivative`` acts on the augmented state ``[x (12), cost]`` with a
    leading batch axis.
    """

    def __init__(self, params_list, weights_list, model="nonlinear"):
        if model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        params_list = list(params_list)
        weights_list = list(weights_list)
        if len(weights_list) == 1:
            weights_list = weights_list * len(params_list)
        self.model = model
        self.size = len(params_list)
        k_state, psi, q2, u_eq, a_lin, b_lin = [], [], [], [], [], []
        for p, w in zip(params_list, weights_list):
            _, _, k_bar, _ = closed_loop(p, w)
            k = np.zeros((4, 12))
            k[:, PERM] = k_bar
            k_state.append(k)
            scaling = input_scaling(p)
            psi.append(np.diag(scaling.psi))
            subs, _ = riccati_blocks(p, w)
            q2.append([subs[0].q_hat**2, subs[1].q_hat**2, subs[2].q_hat**2, subs[3].q_hat**2])
            u_eq.append([p.m_tot * p.g, 0.0, 0.0, 0.0])
            lin = build_simplified(p, scaling)
            a_lin.append(lin.a)
            b_lin.append(lin.b)
        self.k = np.array(k_state)  # scaled gain on the model state
        self.psi = np.array(psi)
        self.q2 = np.array(q2)
        self.u_eq = np.array(u_eq)
        self.a_lin = np.array(a_lin)
        self.b_lin = np.array(b_lin)
        self.plant = Plant.stack(params_list) if model == "nonlinear" else None

    def scaled_control(self, x):
        return -np.einsum("bij,bj->bi", self.k, x)

    def cost_rate(self, x, f_hat):
        y = x[:, OUTPUT_INDEX]
        return np.sum(self.q2 * y * y, axis=1) + np.sum(f_hat * f_hat, axis=1)

    def raw_input(self, x, w_hat=None):
        """Applied deviation input ``F*`` (raw units) and the scaled control."""
        f_hat = self.scaled_control(x)
        total = f_hat if w_hat is None else f_hat + w_hat
        return total / self.psi, f_hat

    def derivative(self, xa, w_hat=None):
        x = xa[:, :12]
        f_raw, f_hat = self.raw_input(x, w_hat)
        if self.model == "nonlinear":
            xdot = self.plant.derivative(x, self.u_eq + f_raw)
        else:
            xdot = np.einsum("bij,bj->bi", self.a_lin, x) + np.einsum("bij,bj->bi", self.b_lin, f_raw)
        return np.concatenate([xdot, self.cost_rate(x, f_hat)[:, None]], axis=1)

    def linear_matrices(self, index=0):
        """Closed-loop ``A`` of the linearized model in model-state order."""
        return self.a_lin[index] - self.b_lin[index] @ (self.k[index] / self.psi[index][:, None])


def _rk4_step(f, xa, dt, w):
    k1 = f(xa, w)
    k2 = f(xa + 0.5 * dt * k1, w)
    k3 = f(xa + 0.5 * dt * k2, w)
    k4 = f(xa + dt * k3, w)
    return xa + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_integrate(f, x0, dt, n_steps):
    """Classic fixed-step RK4 for ``x' = f(x)``; returns all ``n_steps + 1`` states."""
    x = np.asarray(x0, dtype=float)
    out = [x]
    g = lambda y, _w: f(y)  # noqa: E731
    for _ in range(n_steps):
        x = _rk4_step(g, x, dt, None)
        out.append(x)
    return np.array(out)


def _check(x, alive):
    """Mask of batch entries that must stop, with a reason per entry."""
    bad_pitch = np.abs(x[:, 10]) > PITCH_LIMIT
    bad_norm = ~np.isfinite(x).all(axis=1) | (np.linalg.norm(x, axis=1) > DIVERGENCE_LIMIT)
    stop = alive & (bad_pitch | bad_norm)
    return stop, np.where(bad_norm, "divergence guard", "attitude singularity")


class NoiseSource:
    """Zero-order-hold white noise, one independent generator per batch entry.

    Each step draws ``N(0, sigma**2 / dt)``; draws are made in fixed-size
    chunks so results do not depend on how long a run is split up.
    """

    CHUNK = 4096

    def __init__(self, seeds, sigma, dt, channel, n_inputs=4):
        self.gens = [np.random.default_rng(s) for s in seeds]
        self.scale = sigma / np.sqrt(dt)
        self.channel = BLOCK_INPUT[channel - 1]
        self.n_inputs = n_inputs
        self._buf = None
        self._pos = self.CHUNK

    def __call__(self):
        if self._pos == self.CHUNK:
            self._buf = np.stack([g.standard_normal(self.CHUNK) for g in self.gens], axis=1)
            self._pos = 0
        w = np.zeros((len(self.gens), self.n_inputs))
        w[:, self.channel] = self.scale * self._buf[self._pos]
        self._pos += 1
        return w


def white_noise(seed, sigma, dt, n_steps):
    """Scalar ZOH white-noise sequence as used by the simulator."""
    src = NoiseSource([seed], sigma, dt, 1)
    return np.array([src()[0, BLOCK_INPUT[0]] for _ in range(n_steps)])


def _run_rk4(system, x0, config, seeds=None, record=True, on_step=None):
    """Fixed-step integration of a batch; returns recorded arrays and abort info."""
    dt, n = config.dt, config.n_steps
    xa = np.concatenate([np.asarray(x0, dtype=float), np.zeros((system.size, 1))], axis=1)
    noise = None
    if config.noise_sigma > 0:
        seeds = seeds if seeds is not None else [config.seed] * system.size
        noise = NoiseSource(seeds, config.noise_sigma, dt, config.noise_channel)
    alive = np.ones(system.size, dtype=bool)
    reasons = np.array([""] * system.size, dtype=object)
    hist_x = [xa.copy()] if record else None
    hist_w = []
    for k in range(n):
        w = noise() if noise is not None else None
        if record:
            hist_w.append(np.zeros((system.size, 4)) if w is None else w)
        x_eval = np.where(alive[:, None], xa, 0.0)
        nxt = _rk4_step(system.derivative, x_eval, dt, w)
        xa = np.where(alive[:, None], nxt, xa)
        stop, why = _check(xa[:, :12], alive)
        if stop.any():
            reasons[stop] = why[stop]
            alive &= ~stop
        if record:
            hist_x.append(xa.copy())
        if on_step is not None:
            on_step(k + 1, xa, alive)
        if not alive.any():
            break
    return hist_x, hist_w, alive, reasons


def _applied_inputs(system, states, w_hist):
    """Raw applied inputs at each recorded time (noise held over the following step)."""
    out = []
    for k, xa in enumerate(states):
        w = w_hist[k] if k < len(w_hist) else (w_hist[-1] if w_hist else None)
        f_raw, _ = system.raw_input(xa[:, :12], w)
        out.append(system.u_eq + f_raw)
    return np.stack(out, axis=1)


def simulate_batch(params_list, weights_list, config, initial, seeds=None):
    """Integrate a batch of closed loops; returns one :class:`Trajectory` per entry."""
    system = ClosedLoop(params_list, weights_list, config.model)
    x0 = np.atleast_2d(np.asarray(initial, dtype=float))
    if x0.shape[0] == 1 and system.size > 1:
        x0 = np.repeat(x0, system.size, axis=0)
    if np.any(np.abs(x0[:, 10]) >= np.pi / 2):
        raise SimulationAborted("initial pitch at or beyond +-pi/2")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    if config.integrator == "adaptive":
        return [_simulate_adaptive(system, i, x0[i], config) for i in range(system.size)]
    hist_x, hist_w, alive, reasons = _run_rk4(system, x0, config, seeds)
    states = np.stack(hist_x, axis=1)  # (batch, n, 13)
    inputs = _applied_inputs(system, hist_x, hist_w)
    times = config.dt * np.arange(states.shape[1])
    return [
        Trajectory(times, states[i, :, :12], inputs[i], states[i, :, 12],
                   aborted=not alive[i], reason=reasons[i])
        for i in range(system.size)
    ]


def _simulate_adaptive(system, index, x0, config):
    sub = _select(system, index)

    def rhs(t, xa):
        return sub.derivative(xa[None, :])[0]

    def guard(t, xa):
        return min(PITCH_LIMIT - abs(xa[10]), DIVERGENCE_LIMIT - np.linalg.norm(xa[:12]))

    guard.terminal = True
    t_eval = np.linspace(0.0, config.n_steps * config.dt, config.n_steps + 1)
    sol = solve_ivp(rhs, (0.0, t_eval[-1]), np.append(x0, 0.0), method="RK45", t_eval=t_eval,
                    rtol=1e-9, atol=1e-10, max_step=1e-2, events=guard)
    xa = sol.y.T
    f_raw, _ = sub.raw_input(xa[:, :12])
    aborted = sol.status == 1
    return Trajectory(sol.t, xa[:, :12], sub.u_eq + f_raw, xa[:, 12], aborted,
                      "attitude singularity or divergence guard" if aborted else "")


def _select(system, index):
    sub = object.__new__(ClosedLoop)
    sub.__dict__.update(system.__dict__)
    sub.size = 1
    for name in ("k", "psi", "q2", "u_eq", "a_lin", "b_lin"):
        setattr(sub, name, getattr(system, name)[index:index + 1])
    if system.plant is not None:
        p = system.plant
        sub.plant = Plant(p.m[index:index + 1], p.g[index:index + 1],
                          p.r_hat[index:index + 1], p.h_cog[index:index + 1])
    return sub


def simulate(params, weights, config, initial=None):
    """Single closed-loop run from ``initial`` (a :class:`RigidState` or 12-vector)."""
    x0 = np.zeros(12) if initial is None else _state(initial)
    return simulate_batch([params], [weights], config, x0)[0]


def attitude_state(angle):
    """Hover state with roll and pitch both set to ``angle`` (radians)."""
    x = np.zeros(12)
    x[9] = x[10] = angle
    return x


def compare_models(params, weights, config, initial_angles):
    """``||x_nonlinear(t) - x_linearized(t)||`` for each initial attitude angle.

    Returns ``(times, errors)`` with one row of ``errors`` per angle.
    """
    x0 = np.array([attitude_state(a) for a in initial_angles])
    n = len(initial_angles)
    nl = simulate_batch([params] * n, [weights], replace(config, model="nonlinear"), x0)
    li = simulate_batch([params] * n, [weights], replace(config, model="linearized"), x0)
    errors = np.array([np.linalg.norm(a.states - b.states, axis=1) for a, b in zip(nl, li)])
    return nl[0].times, errors


def _z_covariance_tail(a_cl, b_w, c_z, t):
    """Impulse-response energy of ``(a_cl, b_w, c_z)`` remaining after time ``t``."""
    obs = scipy.linalg.solve_continuous_lyapunov(a_cl.T, -c_z.T @ c_z)
    e = scipy.linalg.expm(a_cl * t) @ b_w
    return float(np.trace(e.T @ obs @ e))


def burn_in_time(params, weights, channel=1, rel_tol=1e-3, t_max=60.0):
    """Shortest time after which the stationary output variance is reached to ``rel_tol``.

    Started from rest, ``E||z(t)||^2`` falls short of its stationary value by
    exactly the impulse-response energy remaining after ``t``.
    """
    a, b, k, _ = closed_loop(params, weights)
    subs, _ = riccati_blocks(params, weights)
    q = np.array([s.q_hat for s in subs])
    c_y = np.zeros((4, 12))
    c_y[[0, 1, 2, 3], [0, 4, 8, 10]] = q
    c_z = np.vstack([c_y, -k])
    a_cl = a - b @ k
    b_w = b[:, [BLOCK_INPUT[channel - 1]]]
    total = _z_covariance_tail(a_cl, b_w, c_z, 0.0)
    lo, hi = 0.0, 1.0
    while _z_covariance_tail(a_cl, b_w, c_z, hi) > rel_tol * total:
        lo, hi = hi, 2 * hi
        if hi > t_max:
            return t_max
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _z_covariance_tail(a_cl, b_w, c_z, mid) > rel_tol * total:
            lo = mid
        else:
            hi = mid
    return hi


def estimate_h2_batch(params_list, weights, config, channel=1, n_seeds=20, window=30.0,
                      burn_in=None):
    """Monte Carlo H2 estimates for several vehicles, all integrated in one batch.

    Each vehicle is run with ``n_seeds`` independent noise paths (seeds
    spawned from ``config.seed``). After the burn-in the mean of ``||z||^2``
    over the window is formed per run; the estimate is
    ``sqrt(mean / sigma**2)`` and the standard error comes from the spread
    across runs.
    """
    if config.noise_sigma <= 0:
        raise ValueError("H2 estimation needs noise_sigma > 0")
    if config.integrator != "rk4":
        raise ValueError("H2 estimation requires the rk4 integrator")
    params_list = list(params_list)
    n_v = len(params_list)
    if burn_in is None:
        burn_in = max(burn_in_time(p, weights, channel) for p in params_list)
    n_burn = int(np.ceil(burn_in / config.dt))
    n_win = int(round(window / config.dt))
    cfg = replace(config, horizon=(n_burn + n_win) * config.dt)
    batch = [p for p in params_list for _ in range(n_seeds)]
    system = ClosedLoop(batch, [weights], config.model)
    children = np.random.SeedSequence(int(config.seed)).spawn(n_seeds)
    seeds = [children[j] for _ in range(n_v) for j in range(n_seeds)]
    acc = np.zeros(system.size)

    def on_step(k, xa, alive):
        if k > n_burn:
            x = xa[:, :12]
            acc[:] += system.cost_rate(x, system.scaled_control(x))

    _, _, alive, reasons = _run_rk4(system, np.zeros((system.size, 12)), cfg, seeds,
                                    record=False, on_step=on_step)
    if not alive.all():
        raise SimulationAborted(f"Monte Carlo run stopped: {reasons[~alive][0]}")
    per_run = (acc / n_win / config.noise_sigma**2).reshape(n_v, n_seeds)
    out = []
    for p, runs in zip(params_list, per_run):
        mean = runs.mean()
        se_sq = runs.std(ddof=1) / np.sqrt(n_seeds)
        value = float(np.sqrt(mean))
        subs, _ = riccati_blocks(p, weights)
        out.append(H2Estimate(value, float(se_sq / (2 * value)), n_win, n_seeds,
                              burn_in, analytical_h2(subs[channel - 1])))
    return out


def estimate_h2(params, weights, config, subsystem_selector=1, **kwargs):
    return estimate_h2_batch([params], weights, config, subsystem_selector, **kwargs)[0]


def cost_comparison(params, weights_list, config, alpha_magnitude, initial_set):
    """``J_below - J_above`` for every (weights, initial state) pair.

    The payload is the controlled point and is placed at ``alpha = +|alpha|``
    (above the CoG) or ``-|alpha|`` (below). Returns a list of dicts.
    """
    if alpha_magnitude <= 0:
        raise ValueError("alpha_magnitude must be positive")
    above = params.with_alpha(alpha_magnitude)
    below = params.with_alpha(-alpha_magnitude)
    combos = [(w, np.asarray(x0, dtype=float)) for w in weights_list for x0 in initial_set]
    batch_p, batch_w, batch_x = [], [], []
    for w, x0 in combos:
        batch_p += [below, above]
        batch_w += [w, w]
        batch_x += [x0, x0]
    trajs = simulate_batch(batch_p, batch_w, config, np.array(batch_x))
    rows = []
    for i, (w, x0) in enumerate(combos):
        lo, hi = trajs[2 * i], trajs[2 * i + 1]
        rows.append(
            {
                "weights": w,
                "initial": x0,
                "cost_below": lo.final_cost,
                "cost_above": hi.final_cost,
                "gap": lo.final_cost - hi.final_cost,
                "aborted": lo.aborted or hi.aborted,
            }
        )
    return rows

