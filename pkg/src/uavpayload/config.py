"""INI run configuration: parsing, validation, canonical serialization and hashing.

Example::

    [vehicle]
    m_uav = 22.0
    m_pl = 6.0
    r_pl = 0, 0, 4
    r_poi = 0, 0, 4
    h_tot = 0.25, 0.25, 0.14
    g = 9.81

    [weights]
    q1 = 5
    ...

    [sweep]
    z_pl = linspace(-2, 2, 41)
    z_poi = linspace(-2, 6, 81)
    alpha = -2, -1, 0, 1, 2

Grids accept a comma-separated list or ``linspace(start, stop, num)``.
Units are SI throughout.
"""

import configparser
import hashlib
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .exceptions import ConfigError
from .riccati_h2 import CostWeights
from .sim_engine import SimConfig
from .vehicle_model import VehicleParams

_LINSPACE = re.compile(r"^\s*linspace\(([^,]+),([^,]+),([^,]+)\)\s*$")


def _default_grid(lo, hi, n):
    return tuple(float(v) for v in np.linspace(lo, hi, n))


@dataclass(frozen=True)
class RunConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    weights: CostWeights = field(default_factory=CostWeights)
    sim: SimConfig = field(default_factory=SimConfig)
    z_pl_grid: tuple = _default_grid(-2.0, 2.0, 41)
    z_poi_grid: tuple = _default_grid(-2.0, 6.0, 81)
    alpha_grid: tuple = _default_grid(-2.0, 2.0, 9)
    initial_position: tuple = (-0.5, 0.0, 0.5)
    initial_attitude: tuple = (0.0, 0.0, 0.0)
    alpha_magnitude: float = 0.55
    models: tuple = ("nonlinear", "linearized")
    placements: tuple = ("above", "below")
    mc_alphas: tuple = (-1.0, 1.0)
    mc_sigma: float = 0.1
    mc_seeds: int = 20
    mc_window: float = 20.0
    gap_weights: tuple = (1.0, 5.0, 10.0)
    output_dir: str = "out"

    def __post_init__(self):
        for name in ("z_pl_grid", "z_poi_grid", "alpha_grid", "mc_alphas", "gap_weights"):
            grid = getattr(self, name)
            if len(grid) == 0:
                raise ConfigError(f"{name}: grid must not be empty")
            if not np.all(np.isfinite(grid)):
                raise ConfigError(f"{name}: grid values must be finite")
        if any(q <= 0 for q in self.gap_weights):
            raise ConfigError("gap_weights: weights must be positive")
        for m in self.models:
            if m not in ("nonlinear", "linearized"):
                raise ConfigError(f"models: unknown model {m!r}")
        for p in self.placements:
            if p not in ("above", "below", "configured"):
                raise ConfigError(f"placements: unknown placement {p!r}")
        if not self.alpha_magnitude > 0:
            raise ConfigError("alpha_magnitude: must be positive")
        if not (self.mc_sigma >= 0 and np.isfinite(self.mc_sigma)):
            raise ConfigError("mc_sigma: must be a nonnegative number")
        if self.mc_seeds < 2:
            raise ConfigError("mc_seeds: need at least 2 seeds for a standard error")
        if not self.mc_window > 0:
            raise ConfigError("mc_window: must be positive")
        if len(self.initial_position) != 3 or len(self.initial_attitude) != 3:
            raise ConfigError("initial_position and initial_attitude take three values")
        if abs(self.initial_attitude[1]) >= np.pi / 2:
            raise ConfigError("initial_attitude: pitch must lie in (-pi/2, pi/2)")

    @property
    def initial_state(self):
        x = np.zeros(12)
        x[6:9] = self.initial_position
        x[9:12] = self.initial_attitude
        return x

    def with_seed(self, seed):
        return replace(self, sim=replace(self.sim, seed=int(seed)))

    def with_output(self, path):
        return replace(self, output_dir=str(path))

    def to_ini(self):
        return dump(self)

    def config_hash(self):
        return hashlib.sha256(dump(self).encode("utf-8")).hexdigest()[:16]


def _floats(text, name):
    text = text.strip()
    m = _LINSPACE.match(text)
    try:
        if m:
            lo, hi, n = float(m.group(1)), float(m.group(2)), int(m.group(3))
            if n < 1:
                raise ConfigError(f"{name}: linspace needs at least one point")
            return _default_grid(lo, hi, n)
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r} ({exc})") from None


def _words(text):
    return tuple(w.strip() for w in text.split(",") if w.strip())


def _fmt(values):
    return ", ".join(repr(float(v)) for v in values)


def _get(section, key, conv, default, where):
    if key not in section:
        return default
    try:
        return conv(section[key])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}.{key}: {exc}") from None


def _known(parser, section, keys):
    if not parser.has_section(section):
        return {}
    sec = parser[section]
    extra = set(sec) - set(keys)
    if extra:
        raise ConfigError(f"[{section}]: unknown keys {sorted(extra)}")
    return sec


def parse(text):
    """Parse INI text into a validated :class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known_sections = {"vehicle", "weights", "sim", "sweep", "simulate", "validate", "output"}
    extra = set(parser.sections()) - known_sections
    if extra:
        raise ConfigError(f"unknown sections {sorted(extra)}")
    defaults = {f.name: (f.default_factory() if callable(f.default_factory) else f.default)
                for f in fields(RunConfig)}

    v = _known(parser, "vehicle", ("m_uav", "m_pl", "r_pl", "r_poi", "h_tot", "g"))
    dv = defaults["vehicle"]
    vec = lambda name: lambda s: _floats(s, name)  # noqa: E731
    try:
        h_text = _get(v, "h_tot", vec("vehicle.h_tot"), None, "vehicle")
        if h_text is None:
            h = dv.h_tot
        elif len(h_text) == 3:
            h = h_text
        elif len(h_text) == 9:
            h = np.reshape(h_text, (3, 3))
        else:
            raise ConfigError("vehicle.h_tot: give 3 principal values or 9 matrix entries")
        vehicle = VehicleParams(
            m_uav=_get(v, "m_uav", float, dv.m_uav, "vehicle"),
            m_pl=_get(v, "m_pl", float, dv.m_pl, "vehicle"),
            r_pl=_get(v, "r_pl", vec("vehicle.r_pl"), dv.r_pl, "vehicle"),
            r_poi=_get(v, "r_poi", vec("vehicle.r_poi"), dv.r_poi, "vehicle"),
            h_tot=h,
            g=_get(v, "g", float, dv.g, "vehicle"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"vehicle: {exc}") from None

    w = _known(parser, "weights", ("q1", "q2", "q3", "q4"))
    dw = defaults["weights"]
    try:
        weights = CostWeights(*(_get(w, k, float, getattr(dw, k), "weights")
                                for k in ("q1", "q2", "q3", "q4")))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"weights: {exc}") from None

    s = _known(parser, "sim", ("dt", "horizon", "integrator", "noise_sigma", "seed", "model",
                               "noise_channel"))
    ds = defaults["sim"]
    try:
        sim = SimConfig(
            dt=_get(s, "dt", float, ds.dt, "sim"),
            horizon=_get(s, "horizon", float, ds.horizon, "sim"),
            integrator=_get(s, "integrator", str.strip, ds.integrator, "sim"),
            noise_sigma=_get(s, "noise_sigma", float, ds.noise_sigma, "sim"),
            seed=_get(s, "seed", int, ds.seed, "sim"),
            model=_get(s, "model", str.strip, ds.model, "sim"),
            noise_channel=_get(s, "noise_channel", int, ds.noise_channel, "sim"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from None

    sw = _known(parser, "sweep", ("z_pl", "z_poi", "alpha"))
    sm = _known(parser, "simulate", ("initial_position", "initial_attitude", "alpha_magnitude",
                                     "models", "placements"))
    va = _known(parser, "validate", ("mc_alphas", "mc_sigma", "mc_seeds", "mc_window",
                                     "gap_weights"))
    out = _known(parser, "output", ("directory",))
    g = lambda sec, key, name: _get(sec, key, vec(name), defaults[name], name)  # noqa: E731
    return RunConfig(
        vehicle=vehicle,
        weights=weights,
        sim=sim,
        z_pl_grid=g(sw, "z_pl", "z_pl_grid"),
        z_poi_grid=g(sw, "z_poi", "z_poi_grid"),
        alpha_grid=g(sw, "alpha", "alpha_grid"),
        initial_position=g(sm, "initial_position", "initial_position"),
        initial_attitude=g(sm, "initial_attitude", "initial_attitude"),
        alpha_magnitude=_get(sm, "alpha_magnitude", float, defaults["alpha_magnitude"],
                             "simulate"),
        models=_get(sm, "models", _words, defaults["models"], "simulate"),
        placements=_get(sm, "placements", _words, defaults["placements"], "simulate"),
        mc_alphas=g(va, "mc_alphas", "mc_alphas"),
        mc_sigma=_get(va, "mc_sigma", float, defaults["mc_sigma"], "validate"),
        mc_seeds=_get(va, "mc_seeds", int, defaults["mc_seeds"], "validate"),
        mc_window=_get(va, "mc_window", float, defaults["mc_window"], "validate"),
        gap_weights=g(va, "gap_weights", "gap_weights"),
        output_dir=_get(out, "directory", str.strip, defaults["output_dir"], "output"),
    )


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse(text)


def dump(cfg):
    """Canonical INI text; ``parse(dump(cfg)) == cfg``."""
    v, s = cfg.vehicle, cfg.sim
    lines = [
        "[vehicle]",
        f"m_uav = {v.m_uav!r}",
        f"m_pl = {v.m_pl!r}",
        f"r_pl = {_fmt(v.r_pl)}",
        f"r_poi = {_fmt(v.r_poi)}",
        f"h_tot = {_fmt(np.ravel(v.h_tot))}",
        f"g = {v.g!r}",
        "",
        "[weights]",
        *(f"{k} = {getattr(cfg.weights, k)!r}" for k in ("q1", "q2", "q3", "q4")),
        "",
        "[sim]",
        f"dt = {s.dt!r}",
        f"horizon = {s.horizon!r}",
        f"integrator = {s.integrator}",
        f"noise_sigma = {s.noise_sigma!r}",
        f"seed = {int(s.seed)}",
        f"model = {s.model}",
        f"noise_channel = {s.noise_channel}",
        "",
        "[sweep]",
        f"z_pl = {_fmt(cfg.z_pl_grid)}",
        f"z_poi = {_fmt(cfg.z_poi_grid)}",
        f"alpha = {_fmt(cfg.alpha_grid)}",
        "",
        "[simulate]",
        f"initial_position = {_fmt(cfg.initial_position)}",
        f"initial_attitude = {_fmt(cfg.initial_attitude)}",
        f"alpha_magnitude = {cfg.alpha_magnitude!r}",
        f"models = {', '.join(cfg.models)}",
        f"placements = {', '.join(cfg.placements)}",
        "",
        "[validate]",
        f"mc_alphas = {_fmt(cfg.mc_alphas)}",
        f"mc_sigma = {cfg.mc_sigma!r}",
        f"mc_seeds = {cfg.mc_seeds}",
        f"mc_window = {cfg.mc_window!r}",
        f"gap_weights = {_fmt(cfg.gap_weights)}",
        "",
        "[output]",
        f"directory = {cfg.output_dir}",
        "",
    ]
    return "\n".join(lines)
