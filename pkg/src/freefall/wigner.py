"""Phase-space densities under uniform gravity and their lowest-order quantum correction.

The initial state is an uncorrelated Gaussian in (x, v_x).  Under uniform
gravity its phase-space density is a shear of the initial one, and its
position marginal ``p_uniform`` stays Gaussian.  The cubic part of the
potential adds a dynamical correction proportional to the third x-derivative
of that marginal::

    P_q = -(eps_q t**4 / 4) d3/dx3 P_u,    eps_q = g hbar**2 / (4 R**2 m**2)

which integrates to zero and leaves <x>, <x**2> unchanged but shifts <x**3>
by 3/2 eps_q t**4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .moments import GaussianEnsemble, propagate_samples
from .potential import GravityModel

SIGMA_V_FLOOR = 1e-12
SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class GaussianState1D:
    sigma_x: float
    sigma_v: float
    mean_x: float = 0.0
    mean_v: float = 0.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_v > 0):
            raise ValueError("sigma_x and sigma_v must be positive")

    def spread(self, t: float) -> float:
        """Position spread after free flight for time t."""
        return math.sqrt(self.sigma_x**2 + (self.sigma_v * t) ** 2)

    def center(self, g: float, t: float) -> float:
        return self.mean_x + self.mean_v * t - 0.5 * g * t**2


def trap_release_state(m: float, omega: float, hbar: float) -> GaussianState1D:
    """Harmonic-oscillator ground state of frequency omega, released at rest."""
    return GaussianState1D(
        sigma_x=math.sqrt(hbar / (2 * m * omega)),
        sigma_v=math.sqrt(hbar * omega / (2 * m)),
    )


@dataclass
class DensityProfile:
    x: np.ndarray
    density: np.ndarray
    t: float
    # Monte Carlo profiles also carry the raw sample statistics
    counts: Optional[np.ndarray] = None
    n_samples: int = 0
    sample_mean: float = math.nan
    sample_stderr: float = math.nan
    edges: Optional[np.ndarray] = None

    def integral(self) -> float:
        if self.edges is not None:
            return float(np.sum(self.density * np.diff(self.edges)))
        return float(integrate.simpson(self.density, x=self.x))


def f_initial(state: GaussianState1D, x, v_x):
    x = np.asarray(x, dtype=float)
    v_x = np.asarray(v_x, dtype=float)
    sx, sv = state.sigma_x, state.sigma_v
    return np.exp(
        -((x - state.mean_x) ** 2) / (2 * sx**2) - (v_x - state.mean_v) ** 2 / (2 * sv**2)
    ) / (2 * math.pi * sx * sv)


def f_uniform(state: GaussianState1D, x, v_x, g: float, t: float):
    """Phase-space density at time t: the initial density pulled back along the free-fall flow."""
    x = np.asarray(x, dtype=float)
    v_x = np.asarray(v_x, dtype=float)
    return f_initial(state, x - v_x * t - 0.5 * g * t**2, v_x + g * t)


def xi(state: GaussianState1D, x, g: float, t: float):
    return (np.asarray(x, dtype=float) - state.center(g, t)) / state.spread(t)


def p_uniform(state: GaussianState1D, x, g: float, t: float):
    z = xi(state, x, g, t)
    return np.exp(-0.5 * z**2) / (SQRT_2PI * state.spread(t))


def epsilon_q(g: float, R: float, m: float, hbar: float) -> float:
    return g * hbar**2 / (4 * R**2 * m**2)


def quantum_prefactor(g: float, R: float, m: float, hbar: float, t: float) -> float:
    """eps_q t^4 / 4, the factor multiplying -d3/dx3 P_u."""
    return epsilon_q(g, R, m, hbar) * t**4 / 4


def p0(g: float, R: float, m: float, hbar: float, sigma_v: float, floor: float = SIGMA_V_FLOOR) -> float:
    """Characteristic density g hbar^2 / (16 R^2 m^2 sigma_v^4)."""
    if not sigma_v > floor:
        raise ValueError(f"sigma_v = {sigma_v!r} is below the floor {floor!r}")
    return g * hbar**2 / (16 * R**2 * m**2 * sigma_v**4)


def pq_amplitude(state: GaussianState1D, g: float, R: float, m: float, hbar: float, t: float, floor=SIGMA_V_FLOOR) -> float:
    """P0 t^4 / ((sigma_x/sigma_v)^2 + t^2)^2, the scale of the correction profile."""
    P0 = p0(g, R, m, hbar, state.sigma_v, floor)
    return P0 * t**4 / ((state.sigma_x / state.sigma_v) ** 2 + t**2) ** 2


def p_quantum(state: GaussianState1D, x, g: float, R: float, m: float, hbar: float, t: float, floor=SIGMA_V_FLOOR):
    amp = pq_amplitude(state, g, R, m, hbar, t, floor)
    z = xi(state, x, g, t)
    return amp * (z**3 - 3 * z) * np.exp(-0.5 * z**2) / SQRT_2PI


def third_derivative(f: Callable, x, h: float):
    """Five-point central third derivative with one Richardson level (error O(h^4)).

    ``h`` is the finest step; the extrapolation partner uses ``2h`` so that
    rounding error stays at the level of a single h-stencil.
    """
    x = np.asarray(x, dtype=float)

    def d3(step):
        return (f(x + 2 * step) - 2 * f(x + step) + 2 * f(x - step) - f(x - 2 * step)) / (2 * step**3)

    return (4 * d3(h) - d3(2 * h)) / 3


@dataclass(frozen=True)
class PqMoments:
    raw: tuple  # integral of x^n P_q for n = 0..3
    normalized: tuple  # raw / (amplitude * s * (s + |center|)^n), dimensionless
    expected_third: float  # 3/2 eps_q t^4


def pq_moments(state: GaussianState1D, g: float, R: float, m: float, hbar: float, t: float) -> PqMoments:
    """Adaptive quadrature of x^n P_q(x, t), n = 0..3."""
    s = state.spread(t)
    c = state.center(g, t)
    expected = 1.5 * epsilon_q(g, R, m, hbar) * t**4
    if t == 0:
        return PqMoments((0.0,) * 4, (0.0,) * 4, expected)
    amp = pq_amplitude(state, g, R, m, hbar, t)
    raw, normed = [], []
    scale = s + abs(c)
    for n in range(4):
        # substitute x = c + s*z and divide by scale^n so the integrand is O(1)
        def integrand(z, n=n):
            u = (c + s * z) / scale
            return u**n * (z**3 - 3 * z) * math.exp(-0.5 * z * z) / SQRT_2PI

        val, _ = integrate.quad(
            integrand, -40.0, 40.0, epsabs=1e-13, epsrel=1e-12, limit=200, points=[-math.sqrt(3), 0.0, math.sqrt(3)]
        )
        if not math.isfinite(val):
            raise ArithmeticError(f"quadrature did not converge for n={n}")
        raw.append(amp * s * val * scale**n)
        normed.append(val)
    return PqMoments(tuple(raw), tuple(normed), expected)


def default_bins(state: GaussianState1D, g: float, t: float, n_bins: int = 101) -> np.ndarray:
    c, s = state.center(g, t), state.spread(t)
    return np.linspace(c - 6 * s, c + 6 * s, n_bins + 1)


def classical_density_mc(
    model: GravityModel,
    ensemble: GaussianEnsemble,
    t: float,
    x_bins: Optional[Sequence[float]] = None,
    n_samples: int = 100_000,
    seed: int = 20190101,
    rel_tol: float = 1e-10,
    workers: int = 1,
) -> DensityProfile:
    """Histogram of x(t) over trajectories integrated from sampled initial states.

    This is the Monte Carlo form of summing the initial density over phase-space
    cells whose orbits land in each bin.  Default bins: 101 over the
    uniform-gravity centre +- 6 spreads of the x axis.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    if x_bins is None:
        xs = GaussianState1D(ensemble.sigma_r[0], ensemble.sigma_v[0], ensemble.mean_r[0], ensemble.mean_v[0])
        x_bins = default_bins(xs, model.g, t)
    edges = np.asarray(x_bins, dtype=float)
    _, _, rt = propagate_samples(model, ensemble, t, n_samples, seed, rel_tol, workers)
    x = rt[:, 0]
    counts, _ = np.histogram(x, bins=edges)
    density = counts / (n_samples * np.diff(edges))
    return DensityProfile(
        x=0.5 * (edges[1:] + edges[:-1]),
        density=density,
        t=t,
        counts=counts,
        n_samples=n_samples,
        sample_mean=float(x.mean()),
        sample_stderr=float(x.std(ddof=1) / math.sqrt(n_samples)),
        edges=edges,
    )


def profile_table(state: GaussianState1D, x, g: float, R: float, m: float, hbar: float, t: float) -> np.ndarray:
    """Columns x, P_u, P_q, P_total on the given grid."""
    x = np.asarray(x, dtype=float)
    pu = p_uniform(state, x, g, t)
    pq = p_quantum(state, x, g, R, m, hbar, t)
    return np.column_stack([x, pu, pq, pu + pq])
