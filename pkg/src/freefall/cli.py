"""Command-line entry point: ``freefall {trajectory,phase,wigner,verify}``.

Parameters come from built-in defaults, then an optional INI file
(``--config``, keys in a ``[freefall]`` section named like the long flags with
dashes replaced by underscores), then command-line flags.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import interferometer as ai
from . import io, verify, wigner
from .moments import gaussian_moments
from .potential import Cubic, Exact, GravitySource, SingularityError
from .trajectory import IntegrationError, InitialConditions, integrate_exact, second_order_residual
from .wavepacket import GridError, PhaseWrapError, StepResolutionError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 20190101
TRAP_OMEGA = 100.0  # rad/s, sets the default released state for the wigner profile


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    units: str = "si"
    preset: Optional[str] = None
    seed: int = DEFAULT_SEED
    out: str = "."
    quick: bool = False
    uniform: bool = False
    g: Optional[float] = None
    R: Optional[float] = None
    t: Optional[float] = None
    k: Optional[float] = None
    mass: Optional[float] = None
    sigma_x: Optional[float] = None
    sigma_v: Optional[float] = None
    v0: List[str] = field(default_factory=list)
    r0: Optional[str] = None
    n_points: int = 200
    rel_tol: float = 1e-12

    @property
    def hbar(self) -> float:
        return 1.0 if self.units == "natural" else ai.HBAR

    @property
    def G(self) -> float:
        return 1.0 if self.units == "natural" else ai.G_NEWTON

    def metadata(self, command: str) -> dict:
        meta = {k: v for k, v in asdict(self).items() if v is not None and k not in ("out", "quick")}
        meta["v0"] = ";".join(self.v0)
        meta["command"] = command
        meta["hbar"] = self.hbar
        meta["G"] = self.G
        return meta


_FLOATS = {"g", "R", "t", "k", "mass", "sigma_x", "sigma_v", "rel_tol"}
_INTS = {"seed", "n_points"}
_BOOLS = {"quick", "uniform"}


def _coerce(key: str, raw: str):
    try:
        if key in _FLOATS:
            return float(raw)
        if key in _INTS:
            return int(raw)
        if key in _BOOLS:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if key == "v0":
            return [s.strip() for s in raw.split(";") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw.strip()


def load_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path!r}")
    section = parser["freefall"] if parser.has_section("freefall") else parser.defaults()
    names = {f.name for f in fields(RunConfig)}
    out = {}
    for key, raw in section.items():
        key = key.replace("-", "_")
        if key not in names:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and v != [] and v is not False:
            values[f.name] = v
    cfg = RunConfig(**values)
    if cfg.units not in ("si", "natural"):
        raise ConfigError(f"units must be si or natural, got {cfg.units!r}")
    for name in ("g", "R", "t", "k", "mass", "sigma_x", "sigma_v"):
        v = getattr(cfg, name)
        if v is not None and not (math.isfinite(v) or (name == "R" and v == math.inf)):
            raise ConfigError(f"{name} must be finite")
    return cfg


def _vec(text: str, name: str) -> tuple:
    try:
        parts = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise ConfigError(f"{name} must be three comma-separated numbers, got {text!r}") from None
    if len(parts) != 3:
        raise ConfigError(f"{name} must have three components")
    return parts


# trajectory


def cmd_trajectory(cfg: RunConfig) -> int:
    base = verify.LAB_SOURCE
    g = cfg.g if cfg.g is not None else base.g
    R = cfg.R if cfg.R is not None else base.R
    if cfg.uniform:
        model = Cubic.uniform(g)
        R_series = math.inf
    else:
        model = Exact(GravitySource(cfg.G, g * R**2 / cfg.G, R))
        R_series = R
    t_end = cfg.t if cfg.t is not None else 10.0
    r0 = _vec(cfg.r0, "r0") if cfg.r0 else (0.0, 0.0, 0.0)
    velocities = [_vec(v, "v0") for v in cfg.v0] if cfg.v0 else list(verify.LAUNCH_VELOCITIES)
    times = np.linspace(0.0, t_end, cfg.n_points)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = cfg.metadata("trajectory")
    meta.update(g_used=g, R_used=R, model=type(model).__name__)

    resid_cols, resid_header = [times], ["t"]
    for i, v in enumerate(velocities):
        ic = InitialConditions(r0, v)
        traj = integrate_exact(model, ic, t_end, rel_tol=cfg.rel_tol, times=times)
        rows = np.column_stack([traj.t, traj.r, traj.v])
        io.write_table(out / f"trajectory_{i}.csv", ["t", "x", "y", "z", "vx", "vy", "vz"], rows, {**meta, "v0": ",".join(map(repr, v))})
        curve = second_order_residual(model, ic, g=g, R=R_series, times=times, rel_tol=cfg.rel_tol)
        resid_cols += [curve.analytic, curve.numeric]
        resid_header += [f"analytic_{i}", f"numeric_{i}"]
    io.write_table(out / "residuals.csv", resid_header, np.column_stack(resid_cols), meta)
    return EXIT_OK


# phase


def _custom_ai(cfg: RunConfig) -> tuple:
    natural = cfg.units == "natural"
    defaults = dict(g=1.0, R=50.0, t=1.0, k=20.0, mass=1.0) if natural else dict(
        g=verify.LAB_SOURCE.g, R=verify.LAB_SOURCE.R, t=10.0, k=ai.K_LASER, mass=ai.M_ATOM
    )
    p = {n: getattr(cfg, n) if getattr(cfg, n) is not None else d for n, d in defaults.items()}
    R = math.inf if cfg.uniform else p["R"]
    conf = ai.AIConfig(k=p["k"], t=p["t"], m=p["mass"], hbar=cfg.hbar, g=p["g"], R=R)
    sigma_v = cfg.sigma_v if cfg.sigma_v is not None else 0.1 * conf.kick_velocity
    sigma_x = cfg.sigma_x if cfg.sigma_x is not None else cfg.hbar / (2 * conf.m * sigma_v)
    return conf, gaussian_moments(sigma_x, sigma_v)


def _preset_with_overrides(name: str, cfg: RunConfig) -> tuple:
    conf, mom = ai.preset(name)
    changes = {a: getattr(cfg, b) for a, b in (("g", "g"), ("R", "R"), ("t", "t"), ("k", "k"), ("m", "mass")) if getattr(cfg, b) is not None}
    if cfg.uniform:
        changes["R"] = math.inf
    if changes:
        conf = ai.AIConfig(**{**asdict(conf), **changes})
    if cfg.sigma_v is not None:
        mom = gaussian_moments(cfg.sigma_x or 1e-6, cfg.sigma_v)
    return conf, mom


def cmd_phase(cfg: RunConfig) -> int:
    if cfg.preset is None and cfg.units == "si" and all(
        getattr(cfg, n) is None for n in ("g", "R", "t", "k", "mass", "sigma_v")
    ):
        names = list(ai.PRESETS)
    elif cfg.preset is not None:
        if cfg.preset not in ai.PRESETS:
            raise ConfigError(f"unknown preset {cfg.preset!r}; choose from {sorted(ai.PRESETS)}")
        names = [cfg.preset]
    else:
        names = []
    result = {}
    for name in names:
        conf, mom = _preset_with_overrides(name, cfg)
        if name == "magnetic":
            b = ai.phase_budget_magnetic(conf.g, conf.R, conf, mom)
        else:
            b = ai.phase_budget(conf, mom)
        result[name] = b.to_json(conf)
    if not names:
        conf, mom = _custom_ai(cfg)
        result["custom"] = ai.phase_budget(conf, mom).to_json(conf)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = "phase_budget" if len(result) > 1 else f"phase_{next(iter(result))}"
    io.write_json(out / f"{stem}.json", {"presets": result}, cfg.metadata("phase"))
    return EXIT_OK


# wigner


def cmd_wigner(cfg: RunConfig) -> int:
    base = verify.LAB
    g = cfg.g if cfg.g is not None else base["g"]
    R = cfg.R if cfg.R is not None else base["R"]
    m = cfg.mass if cfg.mass is not None else base["m"]
    hbar = cfg.hbar
    t = cfg.t if cfg.t is not None else 10.0
    if cfg.sigma_v is None and cfg.sigma_x is None:
        state = wigner.trap_release_state(m, TRAP_OMEGA, hbar)
    else:
        sv = cfg.sigma_v if cfg.sigma_v is not None else hbar / (2 * m * cfg.sigma_x)
        sx = cfg.sigma_x if cfg.sigma_x is not None else hbar / (2 * m * sv)
        state = wigner.GaussianState1D(sx, sv)
    if t < 0:
        raise ConfigError("t must be non-negative")
    c, s = state.center(g, t), state.spread(t)
    x = c + s * np.linspace(-6.0, 6.0, 601)
    table = wigner.profile_table(state, x, g, R, m, hbar, t)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = cfg.metadata("wigner")
    meta.update(
        g_used=g,
        R_used=R,
        mass_used=m,
        t_used=t,
        sigma_x_used=state.sigma_x,
        sigma_v_used=state.sigma_v,
        P0=wigner.p0(g, R, m, hbar, state.sigma_v),
        eps_q=wigner.epsilon_q(g, R, m, hbar),
    )
    io.write_table(out / "profile.csv", ["x", "P_u", "P_q", "P_total"], table, meta)
    return EXIT_OK


# verify


def cmd_verify(cfg: RunConfig, spread_scale: float = 1.0) -> int:
    verify.MC_SEED = cfg.seed
    report = verify.run(quick=cfg.quick, spread_scale=spread_scale)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "verify_report.json", "w") as fh:
        json.dump(io._clean(report.to_dict()), fh, indent=2)
        fh.write("\n")
    print(f"{'ALL PASS' if report.passed else 'FAILURES'}: {sum(c.passed for c in report.checks)}/{len(report.checks)}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [freefall] section")
    common.add_argument("--preset", choices=sorted(ai.PRESETS))
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory (default: current)")
    common.add_argument("--quick", action="store_true", default=None, help="skip slow checks")
    common.add_argument("--uniform", action="store_true", default=None, help="switch off all gradient terms")
    common.add_argument("--units", choices=("si", "natural"))
    for flag in ("g", "R", "t", "k", "mass", "sigma-x", "sigma-v"):
        common.add_argument(f"--{flag}", type=float)
    common.add_argument("--r0", help="initial position x,y,z (m)")
    common.add_argument("--v0", action="append", help="initial velocity vx,vy,vz (m/s); repeatable")
    common.add_argument("--n-points", type=int)
    common.add_argument("--rel-tol", type=float)

    parser = argparse.ArgumentParser(prog="freefall", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("trajectory", parents=[common], help="second-order residual curves")
    sub.add_parser("phase", parents=[common], help="interferometer phase budget JSON")
    sub.add_parser("wigner", parents=[common], help="density profile with quantum correction")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    v.add_argument("--mutate-spread", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


COMMANDS = {"trajectory": cmd_trajectory, "phase": cmd_phase, "wigner": cmd_wigner}


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "verify":
            return cmd_verify(cfg, args.mutate_spread)
        return COMMANDS[args.command](cfg)
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, GridError, StepResolutionError, PhaseWrapError, SingularityError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
