"""Closed-form phase budget of the three-pulse atom interferometer.

Two free-fall stages of equal duration ``t`` separated by instantaneous
``exp(+-ikx)`` kicks.  The budget has four pieces:

* ``theta0 = g k t**2`` -- uniform gravity;
* ``theta_prime`` -- state-independent first-gradient correction;
* ``theta_vx = 2 theta0 t <v_x> / R`` -- central-velocity term;
* ``theta_vx2 = 7 g k t**4 <v_x**2> / (2 R**2)`` -- velocity-spread term from the
  cubic part of the potential.  ``<v_x**2>`` is the raw second moment, which
  equals the variance only for a state with zero mean velocity.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict

from .moments import StateMoments, gaussian_moments
from .potential import GravitySource, MagneticAnalog

HBAR = 1.0546e-34
G_NEWTON = 6.67e-11
G_CODATA = 6.674e-11


@dataclass(frozen=True)
class AIConfig:
    k: float
    t: float
    m: float
    hbar: float
    g: float
    R: float

    def __post_init__(self):
        for name in ("k", "t", "m", "hbar", "g", "R"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not math.isfinite(self.kick_velocity):
            raise ValueError("kick velocity hbar k / m is not finite")

    @property
    def kick_velocity(self) -> float:
        return self.hbar * self.k / self.m


@dataclass(frozen=True)
class PhaseBreakdown:
    theta0: float
    theta_prime: float
    theta_vx: float
    theta_vx2: float
    ratio_vx2_over_0: float
    ratio_vx2_over_vx: float

    def to_json(self, config: AIConfig) -> dict:
        return {
            "theta0_rad": self.theta0,
            "theta0_pi": self.theta0 / math.pi,
            "theta_prime_rad": self.theta_prime,
            "theta_vx_rad": self.theta_vx,
            "theta_vx2_rad": self.theta_vx2,
            "theta_vx2_pi": self.theta_vx2 / math.pi,
            "ratios": {
                "theta_vx2_over_theta0": self.ratio_vx2_over_0,
                "theta_vx2_over_theta_vx": self.ratio_vx2_over_vx,
            },
            "config": asdict(config),
        }


def _inv(R: float) -> float:
    return 0.0 if math.isinf(R) else 1.0 / R


def phase_budget(cfg: AIConfig, moments: StateMoments, spread_scale: float = 1.0) -> PhaseBreakdown:
    """All closed-form phases for one configuration.

    ``spread_scale`` multiplies the velocity-spread coefficient; it exists only for
    the mutation check in ``verify`` and stays 1 otherwise.
    """
    g, k, t, R = cfg.g, cfg.k, cfg.t, cfg.R
    v_mean = float(moments.mean_v[0])
    v_sq = float(moments.second_v[0])
    k1 = _inv(R)
    theta0 = g * k * t**2
    theta_prime = 7 * theta0 * g * t**2 * k1 / 6 - theta0 * cfg.hbar * k * t * k1 / cfg.m
    theta_vx = 2 * theta0 * t * v_mean * k1
    theta_vx2 = spread_scale * 7 * g * k * t**4 * v_sq * k1**2 / 2
    return PhaseBreakdown(
        theta0=theta0,
        theta_prime=theta_prime,
        theta_vx=theta_vx,
        theta_vx2=theta_vx2,
        ratio_vx2_over_0=theta_vx2 / theta0,
        ratio_vx2_over_vx=theta_vx2 / theta_vx if theta_vx != 0 else math.inf,
    )


def phase_budget_magnetic(g_b: float, R: float, cfg: AIConfig, moments: StateMoments) -> PhaseBreakdown:
    """Same budget with the magnetic-analog acceleration in place of g.

    ``g_b = 0`` is allowed and gives all phases zero.
    """
    if g_b == 0:
        return PhaseBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    MagneticAnalog(g_b, R)  # validates
    swapped = AIConfig(k=cfg.k, t=cfg.t, m=cfg.m, hbar=cfg.hbar, g=g_b, R=R)
    return phase_budget(swapped, moments)


@dataclass(frozen=True)
class CommutatorCoefficients:
    """Scalar parts of the position-operator commutators.

    ``[x0, x1] = c01 * i``, ``[x0, x2] = (a_x x + a_v v_x + a_c) * i`` and
    ``[x0, [x0, x2]] = c002``.
    """

    c01: float
    affine: tuple
    c002: float


def commutator_coefficients(cfg: AIConfig) -> CommutatorCoefficients:
    g, t = cfg.g, cfg.t
    hm = cfg.hbar / cfg.m
    return CommutatorCoefficients(
        c01=-2 * g * t**3 / 3 * hm,
        affine=(2 * g * t**3 * hm, g * t**4 / 2 * hm, -7 * g**2 * t**5 / 30 * hm),
        c002=1.5 * g * t**4 * hm**2,
    )


# Presets: quoted experiment inputs, G = 6.67e-11.

LAMBDA = 500e-9
K_LASER = 2 * math.pi / LAMBDA
M_ATOM = 1e-25


def _spread_moments(m: float = M_ATOM, k: float = K_LASER, hbar: float = HBAR) -> StateMoments:
    """Zero-mean state with sqrt(<v_x^2>) = 0.1 hbar k / m."""
    return gaussian_moments(sigma_x=1e-6, sigma_v=0.1 * hbar * k / m)


def _satellite(M: float) -> tuple:
    src = GravitySource(G_NEWTON, M, 1.5)
    cfg = AIConfig(k=K_LASER, t=10.0, m=M_ATOM, hbar=HBAR, g=src.g, R=src.R)
    return cfg, _spread_moments()


def _earth() -> tuple:
    cfg = AIConfig(k=K_LASER, t=1.0, m=M_ATOM, hbar=HBAR, g=9.8, R=6.4e6)
    return cfg, _spread_moments()


def _magnetic() -> tuple:
    cfg = AIConfig(k=K_LASER, t=0.1, m=M_ATOM, hbar=HBAR, g=0.1, R=0.1)
    return cfg, _spread_moments()


PRESETS: Dict[str, Callable[[], tuple]] = {
    "earth": _earth,
    "satellite-1000kg": lambda: _satellite(1e3),
    "satellite-100kg": lambda: _satellite(1e2),
    "magnetic": _magnetic,
}

# (theta0 / pi, theta_vx2 / pi) as quoted; None where no value is given
QUOTED_VALUES = {
    "earth": (None, 5.9e-12),
    "satellite-1000kg": (12.0, 3.2e-3),
    "satellite-100kg": (1.2, 3.2e-4),
    "magnetic": (4e3, 0.025),
}


def preset(name: str) -> tuple:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def preset_budget(name: str) -> tuple:
    cfg, mom = preset(name)
    if name == "magnetic":
        return cfg, phase_budget_magnetic(cfg.g, cfg.R, cfg, mom)
    return cfg, phase_budget(cfg, mom)
