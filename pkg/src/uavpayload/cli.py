"""Command-line front end: ``uavpayload {analyze,simulate,sweep,validate}``.

Exit codes: 0 success, 1 validation or simulation failure, 2 configuration error.
"""

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .config import RunConfig, load
from .exceptions import AssumptionViolation, ConfigError, SimulationAborted, UAVPayloadError
from .feedback_linearization import zero_dynamics_jacobian
from .linear_analysis import build_simplified, decouple, linearize_numeric, transfer_zeros
from .oracles import care_hamiltonian
from .riccati_h2 import (
    CostWeights,
    analytical_h2,
    closed_form_riccati,
    h2_surface,
    lateral_h2,
    optimal_placement,
    trace_h2,
)
from .sim_engine import burn_in_time, cost_comparison, estimate_h2_batch, simulate_batch

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _metadata(cfg, command):
    return {
        "tool": f"uavpayload {__version__}",
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.sim.seed,
    }


def _header(meta):
    return "".join(f"# {k}: {v}\n" for k, v in meta.items())


def _write_rows(path, meta, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_header(meta))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_text(path, meta, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_header(meta))
        fh.write(text)


def _out(cfg, name):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def _fmt(x):
    return repr(float(x))


# analyze

def analysis_report(cfg):
    p, w = cfg.vehicle, cfg.weights
    _, verdict = zero_dynamics_jacobian(p)
    lines = [
        f"alpha [m]: {p.alpha:.6f}",
        f"zero dynamics: {verdict.classification.value}",
    ]
    if verdict.eigenvalues.size:
        ev = ", ".join(f"{z.real:+.6g}{z.imag:+.6g}j" for z in verdict.eigenvalues)
        lines.append(f"zero-dynamics Jacobian eigenvalues: {ev}")
    try:
        subs = decouple(p, w)
    except ValueError as exc:
        lines.append(f"linear analysis skipped: {exc}")
        return "\n".join(lines) + "\n"
    tz = transfer_zeros(subs[0])
    if tz.zeros:
        zs = ", ".join(f"{z.real:+.6g}{z.imag:+.6g}j" for z in tz.zeros)
        kind = "non-minimum phase" if tz.non_minimum_phase else "minimum phase"
        lines.append(f"lateral transfer zeros: {zs} ({kind})")
    else:
        lines.append(f"lateral transfer zeros: none ({tz.note})")
    for s in subs:
        lines.append(f"H2 subsystem {s.index}: {analytical_h2(s):.10g} (q_hat = {s.q_hat:.10g})")
    rep = optimal_placement(p, w)
    for i in range(2):
        lines += [
            f"subsystem {i + 1} optimal alpha: {rep.alpha_star[i]:.10g} "
            f"(golden section {rep.golden_alpha_star[i]:.10g})",
            f"subsystem {i + 1} optimal z_poi at z_pl = {p.r_pl[2]:g}: {rep.z_poi_star[i]:.10g}",
            f"subsystem {i + 1} optimal z_poi at z_pl = {rep.z_pl_star:g}: "
            f"{rep.z_poi_star_free[i]:.10g}",
            f"subsystem {i + 1} H2 gap below-minus-above at |alpha|: {rep.above_below_gap[i]:.6g}",
        ]
    return "\n".join(lines) + "\n"


def cmd_analyze(cfg, args):
    text = analysis_report(cfg)
    path = _out(cfg, "analysis.txt")
    _write_text(path, _metadata(cfg, "analyze"), text)
    sys.stdout.write(text)
    print(f"wrote {path}")
    return EXIT_OK


# simulate

def _placement(cfg, which):
    if which == "configured":
        return cfg.vehicle
    sign = 1.0 if which == "above" else -1.0
    return cfg.vehicle.with_alpha(sign * cfg.alpha_magnitude)


def cmd_simulate(cfg, args):
    meta = _metadata(cfg, "simulate")
    x0 = cfg.initial_state
    status = EXIT_OK
    summary = []
    for model in cfg.models:
        sim = replace(cfg.sim, model=model)
        params = [_placement(cfg, pl) for pl in cfg.placements]
        try:
            trajs = simulate_batch(params, [cfg.weights], sim, x0)
        except SimulationAborted as exc:
            print(f"{model}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        for pl, p, tr in zip(cfg.placements, params, trajs):
            name = f"trajectory_{model}_{pl}.csv"
            tr.to_csv(_out(cfg, name), {**meta, "model": model, "placement": pl,
                                        "alpha": p.alpha})
            err = float(np.linalg.norm(tr.states[-1, 6:9]))
            summary.append([model, pl, _fmt(p.alpha), _fmt(err), _fmt(tr.final_cost),
                            str(tr.aborted), tr.reason])
            print(f"{model:10s} {pl:10s} alpha={p.alpha:+.4f} final |p|={err:.3e} "
                  f"cost={tr.final_cost:.6g}{'  ABORTED: ' + tr.reason if tr.aborted else ''}")
            if tr.aborted:
                status = EXIT_FAIL
    _write_rows(_out(cfg, "simulate_summary.csv"), meta,
                ["model", "placement", "alpha", "final_position_error", "cumulative_cost",
                 "aborted", "reason"], summary)
    return status


# sweep

def sweep_rows(cfg):
    p, w = cfg.vehicle, cfg.weights
    surf = h2_surface(p, w, cfg.z_pl_grid, cfg.z_poi_grid)
    rows = []
    for i, zp in enumerate(cfg.z_pl_grid):
        for j, zi in enumerate(cfg.z_poi_grid):
            alpha = zi - p.m_pl / p.m_tot * zp
            rows.append((zp, zi, alpha, surf[i, j]))
    return rows


def cmd_sweep(cfg, args):
    meta = _metadata(cfg, "sweep")
    rows = sweep_rows(cfg)
    _write_rows(_out(cfg, "h2_surface.csv"), meta, ["z_pl", "z_poi", "alpha", "h2"],
                [[_fmt(v) for v in r] for r in rows])
    best = min(rows, key=lambda r: r[3])
    q_hat = decouple(cfg.vehicle, cfg.weights)[0].q_hat
    alpha_rows = [(a, float(lateral_h2(a, q_hat, cfg.vehicle.g))) for a in cfg.alpha_grid]
    _write_rows(_out(cfg, "h2_alpha.csv"), {**meta, "q_hat": q_hat}, ["alpha", "h2"],
                [[_fmt(a), _fmt(h)] for a, h in alpha_rows])
    free = optimal_placement(cfg.vehicle.with_placement(z_pl=0.0), cfg.weights)
    print(f"grid minimum: z_pl={best[0]:.6g} z_poi={best[1]:.6g} alpha={best[2]:.6g} "
          f"h2={best[3]:.10g}")
    print(f"analytical optimum: z_pl=0 z_poi={free.z_poi_star[0]:.10g}")
    return EXIT_OK


# validate

class Check:
    def __init__(self, name, measured, tolerance, passed, detail=""):
        self.name, self.measured, self.tolerance = name, measured, tolerance
        self.passed, self.detail = bool(passed), detail


def _chunks(seq, n):
    n = max(1, min(n, len(seq)))
    return [seq[i::n] for i in range(n)]


def _mc(params, weights, sim, seeds, window, jobs):
    # seeds are spawned per vehicle from sim.seed and the burn-in is shared, so
    # splitting the vehicles over workers does not change any result
    burn = max(burn_in_time(p, weights) for p in params)
    if jobs <= 1:
        return estimate_h2_batch(params, weights, sim, n_seeds=seeds, window=window,
                                 burn_in=burn)
    order = _chunks(list(range(len(params))), jobs)
    with ProcessPoolExecutor(max_workers=len(order)) as pool:
        futs = [pool.submit(estimate_h2_batch, [params[i] for i in idx], weights, sim,
                            1, seeds, window, burn) for idx in order]
        parts = [f.result() for f in futs]
    out = [None] * len(params)
    for idx, res in zip(order, parts):
        for i, r in zip(idx, res):
            out[i] = r
    return out


def run_checks(cfg, jobs=1, inject_fault=False):
    p, w = cfg.vehicle, cfg.weights
    if cfg.mc_sigma <= 0:
        raise ConfigError("validate: the Monte Carlo H2 check needs validate.mc_sigma > 0 "
                          "(white-noise intensity); refusing to run with zero noise")
    checks = []
    subs = decouple(p, w)
    blocks = [closed_form_riccati(s) for s in subs]
    if inject_fault:
        blocks[0].p = blocks[0].p.copy()
        blocks[0].p[0, 1] *= 1.01
        blocks[0].p[1, 0] = blocks[0].p[0, 1]
    res = max(b.residual() for b in blocks)
    checks.append(Check("ARE residual (closed form)", res, 1e-9, res < 1e-9))
    diff = max(
        np.linalg.norm(b.p - care_hamiltonian(s.a, s.b, b.weight, np.eye(1)))
        / np.linalg.norm(b.p) for s, b in zip(subs, blocks)
    )
    checks.append(Check("closed form vs Schur ARE solver", diff, 1e-8, diff < 1e-8))
    tr = max(abs(analytical_h2(s) / trace_h2(b) - 1) for s, b in zip(subs, blocks))
    checks.append(Check("analytical H2 vs trace(B'PB)", tr, 1e-10, tr < 1e-10))
    lin_n, lin_s = linearize_numeric(p), build_simplified(p)
    lin = max(np.abs(lin_n.a - lin_s.a).max(), np.abs(lin_n.b - lin_s.b).max())
    checks.append(Check("numerical vs closed-form linearization", lin, 1e-6, lin < 1e-6))

    params = [p.with_alpha(a) for a in cfg.mc_alphas]
    for model, tol in (("linearized", 0.05), ("nonlinear", 0.10)):
        sim = replace(cfg.sim, model=model, integrator="rk4", noise_sigma=cfg.mc_sigma)
        est = _mc(params, w, sim, cfg.mc_seeds, cfg.mc_window, jobs)
        worst = max(e.relative_error for e in est)
        detail = "; ".join(f"alpha={a:+g}: {e.value:.4f} vs {e.analytical:.4f}"
                           for a, e in zip(cfg.mc_alphas, est))
        checks.append(Check(f"Monte Carlo H2 ({model})", worst, tol, worst < tol, detail))

    ics = []
    for r in (0.5, 1.0):
        for ang in np.linspace(0.0, 2 * np.pi, 5, endpoint=False):
            x = np.zeros(12)
            x[6:8] = r * np.cos(ang), r * np.sin(ang)
            ics.append(x)
    gap_cfg = replace(cfg.sim, model="nonlinear", integrator="rk4", noise_sigma=0.0,
                      dt=1e-2, horizon=40.0)
    rows = cost_comparison(p, [CostWeights.uniform(q) for q in cfg.gap_weights], gap_cfg,
                           cfg.alpha_magnitude, ics)
    worst_gap = min(r["gap"] for r in rows)
    checks.append(Check("cost gap J_below - J_above (min)", worst_gap, 0.0,
                        worst_gap > 0 and not any(r["aborted"] for r in rows)))
    return checks


def cmd_validate(cfg, args):
    t0 = time.time()
    checks = run_checks(cfg, jobs=args.jobs, inject_fault=args.inject_fault)
    rows = [[c.name, f"{c.measured:.3e}", f"{c.tolerance:.1e}", "PASS" if c.passed else "FAIL",
             c.detail] for c in checks]
    _write_rows(_out(cfg, "validation.csv"), _metadata(cfg, "validate"),
                ["check", "measured", "tolerance", "result", "detail"], rows)
    for r in rows:
        print(f"{r[3]}  {r[0]:42s} measured={r[1]} tol={r[2]}  {r[4]}")
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed in {time.time() - t0:.1f} s")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="uavpayload", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI configuration file (defaults if omitted)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="noise seed (overrides the config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name == "validate":
            sp.add_argument("--inject-fault", action="store_true",
                            help="corrupt one Riccati entry to exercise the failure path")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load(args.config) if args.config else RunConfig()
        if args.out:
            cfg = cfg.with_output(args.out)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, AssumptionViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UAVPayloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
