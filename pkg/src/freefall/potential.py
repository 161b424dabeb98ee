"""Gravitational and magnetic-analog field models.

Coordinates are displaced: the source sits at ``(-R, 0, 0)`` so a particle at
``r = (x, y, z)`` is a distance ``|(R + x, y, z)|`` from it, and "down" is -x.
All potentials are per unit test mass (J/kg).

Three models are provided:

* :class:`Exact` -- the point-source Newtonian potential.
* :class:`Cubic` -- its Taylor expansion to order ``1/R**2`` with the constant
  ``-GM/R`` dropped.  ``R = inf`` gives uniform gravity.
* :class:`MagneticAnalog` -- the 1-D x-only cubic form produced by a wire
  current acting on an atomic magnetic moment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

SINGULAR_FLOOR = 1e-12


class SingularityError(ValueError):
    """Raised when a position comes within the singular floor of a point source."""


@dataclass(frozen=True)
class GravitySource:
    G: float
    M: float
    R: float

    def __post_init__(self):
        if not (self.G > 0 and self.M > 0 and self.R > 0):
            raise ValueError(f"G, M, R must be positive, got {self}")
        if not math.isfinite(self.g):
            raise ValueError("derived g = GM/R^2 is not finite")

    @property
    def GM(self) -> float:
        return self.G * self.M

    @property
    def g(self) -> float:
        return self.G * self.M / self.R**2


@dataclass(frozen=True)
class Exact:
    source: GravitySource

    @property
    def g(self) -> float:
        return self.source.g

    @property
    def R(self) -> float:
        return self.source.R


@dataclass(frozen=True)
class Cubic:
    """Cubic expansion with surface acceleration ``g`` at reference distance ``R``.

    ``R = math.inf`` switches every gradient term off (uniform gravity).
    """

    g: float
    R: float = math.inf

    def __post_init__(self):
        if self.g < 0 or not self.R > 0:
            raise ValueError(f"need g >= 0 and R > 0, got {self}")

    @classmethod
    def from_source(cls, source: GravitySource) -> "Cubic":
        return cls(g=source.g, R=source.R)

    @classmethod
    def uniform(cls, g: float) -> "Cubic":
        return cls(g=g, R=math.inf)


@dataclass(frozen=True)
class MagneticAnalog:
    g_b: float
    R: float

    def __post_init__(self):
        if self.g_b < 0 or not self.R > 0:
            raise ValueError(f"need g_b >= 0 and R > 0, got {self}")

    @property
    def g(self) -> float:
        return self.g_b


GravityModel = Union[Exact, Cubic, MagneticAnalog]


@dataclass(frozen=True)
class QuantumCorrectionParams:
    hbar: float
    m: Optional[float] = None
    m1: Optional[float] = None
    m2: Optional[float] = None

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        for name in ("m", "m1", "m2"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive")


def _split(r):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise ValueError(f"position must have trailing dimension 3, got {r.shape}")
    return r[..., 0], r[..., 1], r[..., 2]


def _inv_R(R: float) -> float:
    return 0.0 if math.isinf(R) else 1.0 / R


def validity_ratio(model: GravityModel, r) -> np.ndarray:
    """Largest ``|component| / R``; the cubic forms need this to be small."""
    r = np.asarray(r, dtype=float)
    return np.max(np.abs(r), axis=-1) * _inv_R(model.R)


def _distance(source: GravitySource, r):
    x, y, z = _split(r)
    d = np.sqrt((source.R + x) ** 2 + y**2 + z**2)
    if np.any(d < SINGULAR_FLOOR * source.R):
        raise SingularityError("position within the singular floor of the source")
    return d


def potential_exact(model: Exact, r) -> np.ndarray:
    if not isinstance(model, Exact):
        raise TypeError("potential_exact requires an Exact model")
    return -model.source.GM / _distance(model.source, r)


def potential_cubic(model: Union[Cubic, MagneticAnalog], r) -> np.ndarray:
    x, y, z = _split(r)
    if isinstance(model, MagneticAnalog):
        k1 = _inv_R(model.R)
        return model.g_b * (x - k1 * x**2 + k1**2 * x**3)
    if not isinstance(model, Cubic):
        raise TypeError("potential_cubic requires a Cubic or MagneticAnalog model")
    g, k1 = model.g, _inv_R(model.R)
    rho2 = y**2 + z**2
    return g * (x - k1 * x**2 + 0.5 * k1 * rho2 + k1**2 * x**3 - 1.5 * k1**2 * rho2 * x)


def potential(model: GravityModel, r) -> np.ndarray:
    if isinstance(model, Exact):
        return potential_exact(model, r)
    return potential_cubic(model, r)


def acceleration(model: GravityModel, r) -> np.ndarray:
    """Acceleration ``-grad(potential)``, same leading shape as ``r``."""
    x, y, z = _split(r)
    if isinstance(model, Exact):
        d = _distance(model.source, r)
        f = -model.source.GM / d**3
        return np.stack([f * (model.source.R + x), f * y, f * z], axis=-1)
    if isinstance(model, MagneticAnalog):
        k1 = _inv_R(model.R)
        ax = -model.g_b * (1 - 2 * k1 * x + 3 * k1**2 * x**2)
        return np.stack([ax, np.zeros_like(ax), np.zeros_like(ax)], axis=-1)
    g, k1 = model.g, _inv_R(model.R)
    rho2 = y**2 + z**2
    ax = -g * (1 - 2 * k1 * x + 3 * k1**2 * x**2 - 1.5 * k1**2 * rho2)
    # y/z: exact gradient of the cubic form, not the straight-line approximation
    lateral = -g * k1 + 3 * g * k1**2 * x
    return np.stack([ax, lateral * y, lateral * z], axis=-1)


def potential_1d(model: GravityModel, x) -> np.ndarray:
    """Potential along the x axis (y = z = 0)."""
    x = np.asarray(x, dtype=float)
    r = np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=-1)
    return potential(model, r)


def surface_gravity(source: GravitySource, R_s: float) -> float:
    if not R_s > 0:
        raise ValueError("R_s must be positive")
    return source.GM / R_s**2


def epsilon_q(params: QuantumCorrectionParams, source: GravitySource) -> float:
    """Strength of the hbar^2 correction to the Liouville flow, GM hbar^2 / (4 R^4 m^2)."""
    if params.m is None:
        raise ValueError("single-particle epsilon_q needs params.m")
    return source.GM * params.hbar**2 / (4 * source.R**4 * params.m**2)


def epsilon_q_two_body(params: QuantumCorrectionParams, G: float, R: float) -> float:
    """Relative-motion form for masses m1, m2: hbar^2 G M^3 / (4 R^4 m1^2 m2^2), M = m1 + m2."""
    if params.m1 is None or params.m2 is None:
        raise ValueError("two-body epsilon_q needs params.m1 and params.m2")
    M = params.m1 + params.m2
    return params.hbar**2 * G * M**3 / (4 * R**4 * params.m1**2 * params.m2**2)


def magnetic_g_b(mu0: float, I: float, M_b: float, R: float, m: float) -> float:
    if mu0 <= 0 or I < 0 or M_b <= 0 or R <= 0 or m <= 0:
        raise ValueError("magnetic_g_b inputs must be positive")
    return mu0 * I * M_b / (2 * math.pi * R**2 * m)
