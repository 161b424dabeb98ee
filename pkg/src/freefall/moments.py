"""Ensemble averages of position under the second-order free-fall solution.

The mean position at time t depends on the initial state only through its
first and second moments (including the symmetrised position-velocity
correlation), and never on the particle mass.  ``positional_average`` evaluates
that dependence term by term from the order-by-order solution; the Monte Carlo
estimator integrates sampled trajectories and is the independent check.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .potential import GravityModel
from .trajectory import integrate_ensemble

CHUNK = 8192


def _vec3(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (3,):
        raise ValueError(f"expected trailing dimension 3, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class StateMoments:
    """First and second moments per axis.

    ``sym_rv[i]`` is ``<(r_i v_i + v_i r_i)/2>``.  Fields may carry extra
    leading dimensions, in which case each leading index is a separate state.
    """

    mean_r: np.ndarray
    mean_v: np.ndarray
    second_r: np.ndarray
    second_v: np.ndarray
    sym_rv: np.ndarray

    def __post_init__(self):
        for name in ("mean_r", "mean_v", "second_r", "second_v", "sym_rv"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        var_r = self.second_r - self.mean_r**2
        var_v = self.second_v - self.mean_v**2
        slack_r = 1e-12 * np.maximum(self.second_r, 1e-300)
        slack_v = 1e-12 * np.maximum(self.second_v, 1e-300)
        if np.any(var_r < -slack_r) or np.any(var_v < -slack_v):
            raise ValueError("second moments smaller than squared means")
        cov = self.sym_rv - self.mean_r * self.mean_v
        bound = np.sqrt(np.clip(var_r, 0, None) * np.clip(var_v, 0, None))
        if np.any(np.abs(cov) > bound * (1 + 1e-9) + 1e-300):
            raise ValueError("position-velocity covariance exceeds sigma_r * sigma_v")

    @property
    def var_r(self) -> np.ndarray:
        return self.second_r - self.mean_r**2

    @property
    def var_v(self) -> np.ndarray:
        return self.second_v - self.mean_v**2

    @classmethod
    def point(cls, r, v) -> "StateMoments":
        """Zero-variance (delta-distributed) state."""
        r, v = _vec3(r), _vec3(v)
        return cls(r, v, r**2, v**2, r * v)


def gaussian_moments(sigma_x, sigma_v, mean_r=(0.0, 0.0, 0.0), mean_v=(0.0, 0.0, 0.0)) -> StateMoments:
    """Moments of an uncorrelated Gaussian; ``sigma_x``/``sigma_v`` are scalars or per-axis."""
    sx = np.broadcast_to(np.asarray(sigma_x, dtype=float), (3,))
    sv = np.broadcast_to(np.asarray(sigma_v, dtype=float), (3,))
    if np.any(sx <= 0) or np.any(sv <= 0):
        raise ValueError("sigma_x and sigma_v must be positive")
    mr, mv = _vec3(mean_r), _vec3(mean_v)
    return StateMoments(mr, mv, sx**2 + mr**2, sv**2 + mv**2, mr * mv)


def empirical_moments(r: np.ndarray, v: np.ndarray) -> StateMoments:
    r, v = _vec3(r), _vec3(v)
    return StateMoments(
        r.mean(axis=0), v.mean(axis=0), (r**2).mean(axis=0), (v**2).mean(axis=0), (r * v).mean(axis=0)
    )


def positional_average(moments: StateMoments, g: float, R: float, t: float):
    """Mean x position at time t to second order in 1/R."""
    m = moments
    inv_R = 0.0 if math.isinf(R) else 1.0 / R
    x, vx = m.mean_r[..., 0], m.mean_v[..., 0]
    xx, yy, zz = m.second_r[..., 0], m.second_r[..., 1], m.second_r[..., 2]
    uu, vv, ww = m.second_v[..., 0], m.second_v[..., 1], m.second_v[..., 2]
    # <x v + v x> etc. are twice the symmetrised correlations
    ax_x, ax_y, ax_z = 2 * m.sym_rv[..., 0], 2 * m.sym_rv[..., 1], 2 * m.sym_rv[..., 2]

    zeroth = x + vx * t - g * t * t / 2
    first = g * t * t * (x + vx * t / 3 - g * t * t / 12)
    second = (
        5 * g * g * t**4 / 12 * x
        + 11 * g * g * t**5 / 60 * vx
        - 11 * g**3 * t**6 / 360
        - 3 * g * t * t / 4 * (2 * xx - yy - zz)
        - g * t**4 / 8 * (2 * uu - vv - ww)
        - g * t**3 / 2 * ax_x
        + g * t**3 / 4 * (ax_y + ax_z)
    )
    return zeroth + inv_R * first + inv_R * inv_R * second


@dataclass(frozen=True)
class GaussianEnsemble:
    """Uncorrelated Gaussian in (r, v) with per-axis spreads."""

    sigma_r: tuple
    sigma_v: tuple
    mean_r: tuple = (0.0, 0.0, 0.0)
    mean_v: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("sigma_r", "sigma_v", "mean_r", "mean_v"):
            val = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (3,))
            object.__setattr__(self, name, tuple(float(c) for c in val))
        if min(self.sigma_r) <= 0 or min(self.sigma_v) <= 0:
            raise ValueError("spreads must be positive")

    def moments(self) -> StateMoments:
        return gaussian_moments(self.sigma_r, self.sigma_v, self.mean_r, self.mean_v)

    def sample_chunk(self, rng: np.random.Generator, n: int) -> tuple:
        z = rng.standard_normal((n, 6))
        r = np.asarray(self.mean_r) + z[:, :3] * np.asarray(self.sigma_r)
        v = np.asarray(self.mean_v) + z[:, 3:] * np.asarray(self.sigma_v)
        return r, v


def chunk_streams(seed: int, n_samples: int) -> list:
    """(generator, size) per fixed-size chunk; the split never depends on worker count."""
    n_chunks = -(-n_samples // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [n_samples - CHUNK * (n_chunks - 1)]
    return [(np.random.default_rng(s), n) for s, n in zip(seqs, sizes)]


def propagate_samples(
    model: GravityModel,
    ensemble: GaussianEnsemble,
    t: float,
    n_samples: int,
    seed: int,
    rel_tol: float = 1e-10,
    workers: int = 1,
) -> tuple:
    """Sample initial states chunk by chunk and integrate each to time t.

    Returns ``(r0, v0, r_t)`` stacked over all samples.
    """

    def run(stream):
        rng, n = stream
        r0, v0 = ensemble.sample_chunk(rng, n)
        rt, _ = integrate_ensemble(model, r0, v0, t, rel_tol=rel_tol)
        return r0, v0, rt

    streams = chunk_streams(seed, n_samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, streams))
    else:
        parts = [run(s) for s in streams]
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    n_samples: int
    # same samples pushed through the perturbative series: isolates the series error
    paired_mean: float
    paired_diff: float
    paired_diff_stderr: float


def monte_carlo_average(
    model: GravityModel,
    ensemble: GaussianEnsemble,
    t: float,
    n_samples: int = 100_000,
    seed: int = 20190101,
    rel_tol: float = 1e-10,
    workers: int = 1,
    g: Optional[float] = None,
    R: Optional[float] = None,
) -> MonteCarloResult:
    """Sample mean of x(t) over integrated trajectories from Gaussian initial states."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    r0, v0, rt = propagate_samples(model, ensemble, t, n_samples, seed, rel_tol, workers)
    x = rt[:, 0]
    g = model.g if g is None else g
    R = model.R if R is None else R
    series = positional_average(StateMoments.point(r0, v0), g, R, t)
    diff = x - series
    sq = math.sqrt(n_samples)
    return MonteCarloResult(
        mean=float(x.mean()),
        stderr=float(x.std(ddof=1) / sq),
        n_samples=n_samples,
        paired_mean=float(series.mean()),
        paired_diff=float(diff.mean()),
        paired_diff_stderr=float(diff.std(ddof=1) / sq),
    )
