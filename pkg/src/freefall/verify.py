"""Acceptance checks shared by ``freefall verify`` and the test suite.

Each check returns one or more :class:`Check` records.  Checks marked slow
(more than about ten seconds) are skipped by ``quick=True``.
"""
from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List

import numpy as np

from . import interferometer as ai
from . import wigner
from .moments import GaussianEnsemble, gaussian_moments, monte_carlo_average, positional_average
from .potential import (
    Cubic,
    Exact,
    GravitySource,
    MagneticAnalog,
    QuantumCorrectionParams,
    acceleration,
    epsilon_q,
    potential,
    potential_1d,
)
from .trajectory import InitialConditions, second_order_residual
from .wavepacket import (
    Grid1D,
    GridError,
    differential_phase,
    gaussian_packet,
    interferometer_grid,
    interferometer_phase,
    state_overlap,
    SplitStep,
)

LAUNCH_VELOCITIES = ((1e-3, 1e-3, 1e-3), (2e-3, 1e-3, 1e-3), (1e-3, 2e-3, 1e-3))
LAB_SOURCE = GravitySource(ai.G_NEWTON, 1e3, 1.5)

# natural-unit interferometer used for the velocity-spread oracle
NATURAL = dict(k=20.0, t=1.0, m=1.0, hbar=1.0, g=1.0)
ORACLE_R = 50.0
ORACLE_SIGMA_V = (0.05, 0.10)
# regime where the packet is small compared to the fringe scale, see spread_phase_companion
COMPANION_R = 1000.0
COMPANION_SIGMA_X = 1.0
COMPANION_SIGMA_V = (0.5, 1.0)
COMPANION_POINTS = 2048
COMPANION_NODES = 6
# frozen oracle result: measured / predicted in the companion regime
COMPANION_RATIO = 0.99698


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.measured, self.expected, self.tolerance = map(float, (self.measured, self.expected, self.tolerance))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: measured={self.measured:.6g} expected={self.expected:.6g} "
            f"tol={self.tolerance:.3g} ({self.seconds:.2f}s){' ' + self.detail if self.detail else ''}"
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _rel(measured: float, expected: float) -> float:
    return abs(measured - expected) / abs(expected)


def _close(name, measured, expected, rel_tol, detail="") -> Check:
    return Check(name, _rel(measured, expected) <= rel_tol, measured, expected, rel_tol, detail)


# criterion 1


def residual_curves() -> List[Check]:
    model = Exact(LAB_SOURCE)
    curves = []
    for v in LAUNCH_VELOCITIES:
        curves.append(second_order_residual(model, InitialConditions((0, 0, 0), v), t_end=10.0))
    scale = max(float(np.max(np.abs(c.analytic))) for c in curves)
    out = []
    for v, c in zip(LAUNCH_VELOCITIES, curves):
        dev = c.relative_deviation()
        label = "(" + ",".join(f"{x * 1e3:g}" for x in v) + ")mm/s"
        out.append(
            Check(
                f"residual_{label}",
                dev <= 0.05,
                dev,
                0.0,
                0.05,
                f"max|dev|={c.max_deviation():.3g}m curve_max={np.max(np.abs(c.analytic)):.3g}m "
                f"dev/figure_max={c.max_deviation() / scale:.3g}",
            )
        )
    return out


# criterion 2


def cubic_acceleration_estimate() -> List[Check]:
    g, R, x = LAB_SOURCE.g, LAB_SOURCE.R, 1e-2
    return [_close("cubic_term_acceleration", 3 * g * x**2 / R**2, 4e-12, 0.05)]


# criterion 3


def phase_presets() -> List[Check]:
    out = []
    for name, (theta0_pi, vx2_pi) in ai.QUOTED_VALUES.items():
        _, b = ai.preset_budget(name)
        if theta0_pi is not None:
            out.append(_close(f"preset_{name}_theta0_pi", b.theta0 / math.pi, theta0_pi, 0.05))
        out.append(_close(f"preset_{name}_theta_vx2_pi", b.theta_vx2 / math.pi, vx2_pi, 0.05))
    return out


# criteria 4 and 5


def _natural_cfg(R: float, **kw) -> ai.AIConfig:
    return ai.AIConfig(R=R, **{**NATURAL, **kw})


def _sigma_v_oracle(cfg, model, sigma_x, sigmas, n_points=4096, nodes=10, spread_scale=1.0):
    base = wigner.GaussianState1D(sigma_x, sigmas[0])
    d = differential_phase(cfg, model, base, "sigma_v", sigmas[0], sigmas[1], n_points=n_points, nodes=nodes)
    g, k, t = cfg.g, cfg.k, cfg.t
    inv_R = 0.0 if math.isinf(cfg.R) else 1.0 / cfg.R
    expected = spread_scale * 7 * g * k * t**4 * (sigmas[1] ** 2 - sigmas[0] ** 2) * inv_R**2 / 2
    return d, expected


def spread_phase_oracle(spread_scale: float = 1.0) -> List[Check]:
    """Velocity-spread phase at the natural-unit acceptance configuration.

    sigma_v = 0.05 forces sigma_x >= hbar/(2 m sigma_v) = 10, which is held
    fixed; the sigma_v = 0.10 state is then mixed.
    """
    sigma_x = 1.0 / (2 * ORACLE_SIGMA_V[0])
    cfg = _natural_cfg(ORACLE_R)
    d, expected = _sigma_v_oracle(cfg, Cubic(1.0, ORACLE_R), sigma_x, ORACLE_SIGMA_V, spread_scale=spread_scale)
    return [
        Check(
            "spread_phase_R50",
            _rel(abs(d.delta), expected) <= 0.05,
            abs(d.delta),
            expected,
            0.05,
            f"ratio={d.delta / expected:.4g} contrast={abs(d.overlap_b):.3g}",
        )
    ]


def spread_phase_null() -> List[Check]:
    sigma_x = 1.0 / (2 * ORACLE_SIGMA_V[0])
    cfg = _natural_cfg(math.inf)
    d, _ = _sigma_v_oracle(cfg, Cubic.uniform(1.0), sigma_x, ORACLE_SIGMA_V)
    return [Check("spread_phase_uniform_null", abs(d.delta) < 1e-8, abs(d.delta), 0.0, 1e-8)]


def spread_phase_companion(spread_scale: float = 1.0) -> List[Check]:
    """Velocity-spread phase where sigma_x is small against the fringe length.

    Also compares with the frozen oracle ratio so a 1% change of the
    coefficient is detected.
    """
    cfg = _natural_cfg(COMPANION_R)
    d, expected = _sigma_v_oracle(
        cfg,
        Cubic(1.0, COMPANION_R),
        COMPANION_SIGMA_X,
        COMPANION_SIGMA_V,
        n_points=COMPANION_POINTS,
        nodes=COMPANION_NODES,
        spread_scale=spread_scale,
    )
    ratio = d.delta / expected
    return [
        Check("spread_phase_R1000", _rel(abs(d.delta), expected) <= 0.05, abs(d.delta), expected, 0.05),
        Check("spread_phase_R1000_regression", abs(ratio - COMPANION_RATIO) <= 2e-3, ratio, COMPANION_RATIO, 2e-3),
    ]


def uniform_exactness() -> List[Check]:
    cfg = _natural_cfg(math.inf)
    model = Cubic.uniform(cfg.g)
    theta0 = cfg.g * cfg.k * cfg.t**2

    def phase(state, c=cfg):
        return interferometer_phase(state_overlap(state, c, model, n_points=1024))

    base = wigner.GaussianState1D(1.0, 0.5)
    p0 = phase(base)
    wrapped = math.remainder(p0 - theta0, 2 * math.pi)
    out = [Check("uniform_phase_gkt2", abs(wrapped) < 1e-6, abs(wrapped), 0.0, 1e-6, "phase - g k t^2 mod 2pi")]
    variations = {
        "sigma_x": phase(wigner.GaussianState1D(2.0, 0.25)),
        "mean_v": phase(wigner.GaussianState1D(1.0, 0.5, mean_v=0.3)),
        "mass": phase(wigner.GaussianState1D(1.0, 0.25), _natural_cfg(math.inf, m=2.0)),
    }
    for name, p in variations.items():
        shift = abs(math.remainder(p - p0, 2 * math.pi))
        out.append(Check(f"uniform_phase_independent_of_{name}", shift < 1e-8, shift, 0.0, 1e-8))
    return out


# criteria 6 and 7

LAB = dict(g=LAB_SOURCE.g, R=LAB_SOURCE.R, m=ai.M_ATOM, hbar=ai.HBAR)


def pq_checks() -> List[Check]:
    state = wigner.trap_release_state(ai.M_ATOM, 100.0, ai.HBAR)
    t = 10.0
    g, R, m, hbar = LAB["g"], LAB["R"], LAB["m"], LAB["hbar"]
    s, c = state.spread(t), state.center(g, t)
    x = c + s * np.linspace(-5, 5, 2001)
    closed = wigner.p_quantum(state, x, g, R, m, hbar, t)
    fd = -wigner.quantum_prefactor(g, R, m, hbar, t) * wigner.third_derivative(
        lambda u: wigner.p_uniform(state, u, g, t), x, 1e-3 * s
    )
    dev = float(np.max(np.abs(closed - fd)) / np.max(np.abs(closed)))
    out = [Check("pq_vs_third_derivative", dev < 1e-6, dev, 0.0, 1e-6)]
    mom = wigner.pq_moments(state, g, R, m, hbar, t)
    for n in range(3):
        out.append(Check(f"pq_moment_{n}", abs(mom.normalized[n]) <= 1e-10, abs(mom.normalized[n]), 0.0, 1e-10))
    out.append(_close("pq_moment_3", mom.raw[3], mom.expected_third, 1e-8))
    return out


def p0_values() -> List[Check]:
    g, R, m, hbar = LAB["g"], LAB["R"], LAB["m"], LAB["hbar"]
    return [
        _close("p0_sigma_v_2.3e-4", wigner.p0(g, R, m, hbar, 2.3e-4), 3.3e-13, 0.05),
        _close("p0_sigma_v_2.3e-6", wigner.p0(g, R, m, hbar, 2.3e-6), 3.3e-5, 0.05),
    ]


# criterion 8

MC_SEED = 20190101
MC_SAMPLES = 100_000


def random_states(n: int = 5, seed: int = 7) -> list:
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(n):
        states.append(
            GaussianEnsemble(
                sigma_r=tuple(10 ** rng.uniform(-4, -2, 3)),
                sigma_v=tuple(10 ** rng.uniform(-5, -3, 3)),
                mean_r=tuple(rng.uniform(-1e-2, 1e-2, 3)),
                mean_v=tuple(rng.uniform(-1e-3, 1e-3, 3)),
            )
        )
    return states


def moments_oracle(n_samples: int = MC_SAMPLES) -> List[Check]:
    model = Exact(LAB_SOURCE)
    t = 10.0
    out = []
    for i, ens in enumerate(random_states()):
        mc = monte_carlo_average(model, ens, t, n_samples=n_samples, seed=MC_SEED + i)
        pred = float(positional_average(ens.moments(), model.g, model.R, t))
        z = abs(mc.mean - pred) / mc.stderr
        out.append(Check(f"moments_vs_mc_state{i}", z <= 3.0, z, 0.0, 3.0, "|mean - prediction| / stderr"))
    return out


# criterion 9


def property_suite() -> List[Check]:
    out = []
    src = LAB_SOURCE
    e1 = epsilon_q(QuantumCorrectionParams(ai.HBAR, m=ai.M_ATOM), src)
    e2 = epsilon_q(QuantumCorrectionParams(ai.HBAR, m=2 * ai.M_ATOM), src)
    out.append(_close("eps_q_mass_scaling", e2 / e1, 0.25, 1e-12))
    g, R, m, hbar = LAB["g"], LAB["R"], LAB["m"], LAB["hbar"]
    out.append(_close("p0_sigma_v_scaling", wigner.p0(g, R, m, hbar, 1e-4) / wigner.p0(g, R, m, hbar, 2e-4), 16.0, 1e-12))

    cfg, _ = ai.preset("satellite-1000kg")
    mom = gaussian_moments(1e-6, 1e-3, mean_v=(2e-3, 0, 0))
    b = ai.phase_budget(cfg, mom)
    v2 = float(mom.second_v[0])
    out.append(_close("ratio_vx2_over_theta0", b.ratio_vx2_over_0, 7 * cfg.t**2 * v2 / (2 * cfg.R**2), 1e-12))
    out.append(_close("ratio_vx2_over_vx", b.ratio_vx2_over_vx, 7 * cfg.t * v2 / (4 * cfg.R * 2e-3), 1e-12))

    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.05, 0.05, (20, 3))
    for model in (Exact(src), Cubic.from_source(src), MagneticAnalog(0.1, 0.1)):
        worst = 0.0
        for r in pts:
            if isinstance(model, MagneticAnalog):
                r = np.array([r[0], 0.0, 0.0])
            grad = np.empty(3)
            for i in range(3):
                h = np.zeros(3)
                h[i] = 1e-6 * model.R
                grad[i] = (potential(model, r + h) - potential(model, r - h)) / (2 * h[i])
            a = acceleration(model, r)
            worst = max(worst, float(np.max(np.abs(a + grad)) / np.max(np.abs(a))))
        out.append(Check(f"gradient_consistency_{type(model).__name__}", worst < 1e-6, worst, 0.0, 1e-6))

    grid = Grid1D(-40.0, 40.0, 4096)
    packet = gaussian_packet(grid, 0.0, 1.0, 1.0, 1.0, 1.0)
    model = Cubic(1.0, 50.0)
    prop = SplitStep(grid, potential_1d(model, grid.x), 1.0, 1.0, 5e-5)
    psi = prop.run(packet.psi, 10_000)
    drift = abs(float(np.sum(np.abs(psi) ** 2) * grid.dx) - packet.norm())
    out.append(Check("unitarity_drift_1e4_steps", drift < 1e-10, drift, 0.0, 1e-10))
    out.append(determinism())
    return out


def determinism() -> Check:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp, "a"), Path(tmp, "b")
        for d in (a, b):
            for cmd in (["trajectory"], ["phase", "--preset", "satellite-1000kg"], ["wigner"]):
                code = main(cmd + ["--out", str(d)])
                if code != 0:
                    return Check("deterministic_reruns", False, float(code), 0.0, 0.0, "subcommand failed")
        names = sorted(p.name for p in a.iterdir())
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        ok = not mismatch and not errors and len(match) == len(names) > 0
        return Check("deterministic_reruns", ok, float(len(mismatch) + len(errors)), 0.0, 0.0, f"{len(names)} files")


@dataclass
class Group:
    name: str
    run: Callable[[], List[Check]]
    slow: bool = False


def groups(spread_scale: float = 1.0) -> List[Group]:
    return [
        Group("launch", residual_curves),
        Group("cubic_estimate", cubic_acceleration_estimate),
        Group("presets", phase_presets),
        Group("spread_phase", lambda: spread_phase_oracle(spread_scale), slow=True),
        Group("spread_phase_null", spread_phase_null, slow=True),
        Group("spread_phase_companion", lambda: spread_phase_companion(spread_scale)),
        Group("uniform", uniform_exactness),
        Group("pq", pq_checks),
        Group("p0", p0_values),
        Group("moments_mc", moments_oracle, slow=True),
        Group("properties", property_suite),
    ]


@dataclass
class Report:
    checks: List[Check] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "skipped": self.skipped,
        }


def run(quick: bool = False, spread_scale: float = 1.0, log: Callable[[str], None] = print) -> Report:
    report = Report()
    for grp in groups(spread_scale):
        if quick and grp.slow:
            report.skipped.append(grp.name)
            log(f"SKIP {grp.name} (quick)")
            continue
        start = time.perf_counter()
        try:
            checks = grp.run()
        except (GridError, ArithmeticError, ValueError, RuntimeError) as exc:
            checks = [Check(grp.name, False, math.nan, math.nan, math.nan, f"error: {exc}")]
        elapsed = time.perf_counter() - start
        for c in checks:
            c.seconds = elapsed / len(checks)
            report.checks.append(c)
            log(c.line())
    return report
