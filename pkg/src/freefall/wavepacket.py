"""Split-step Schrodinger simulation of the three-pulse interferometer in 1-D.

The wave function lives on a periodic grid; free fall between pulses is
Strang-split spectral propagation, and each pulse is the pointwise factor
``exp(+-ikx)``.  The two output branches are::

    up   = U(t) exp(-ikx) U(t) exp(+ikx) psi
    down = exp(-ikx) U(t) exp(+ikx) U(t) psi

and the interferometer phase is read off ``<down|up>``.  The interferometer
phase is reported as ``-arg<down|up>``, which is ``+g k t**2`` under uniform
gravity.

States with ``sigma_v > hbar / (2 m sigma_x)`` are mixed: they are represented
as an incoherent Gauss-Hermite mixture of minimum-uncertainty packets with
shifted mean velocities, which reproduces the uncorrelated Gaussian Wigner
function exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .interferometer import AIConfig, phase_budget
from .moments import gaussian_moments
from .potential import GravityModel, potential_1d
from .wigner import GaussianState1D

SUPPORT_SIGMAS = 8.0
MAX_STEP_PHASE = math.pi / 4


class GridError(ValueError):
    """The wave function does not fit the grid with the required margin."""


class StepResolutionError(ValueError):
    """The time step is too coarse for the grid's potential or kinetic range."""


class PhaseWrapError(ValueError):
    """The predicted phase difference is too large to unwrap unambiguously."""


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 256 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 256, got {n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.dx)


@dataclass
class WavePacket:
    grid: Grid1D
    psi: np.ndarray
    m: float
    hbar: float

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def mean_x(self) -> float:
        return float(np.sum(self.grid.x * self.density()) * self.grid.dx / self.norm())

    def var_x(self) -> float:
        mu = self.mean_x()
        return float(np.sum((self.grid.x - mu) ** 2 * self.density()) * self.grid.dx / self.norm())

    def _momentum_weights(self):
        w = np.abs(np.fft.fft(self.psi)) ** 2
        return self.hbar * self.grid.wavenumbers, w / w.sum()

    def mean_p(self) -> float:
        p, w = self._momentum_weights()
        return float(np.sum(p * w))

    def var_p(self) -> float:
        p, w = self._momentum_weights()
        mu = np.sum(p * w)
        return float(np.sum((p - mu) ** 2 * w))

    def mean_v(self) -> float:
        return self.mean_p() / self.m

    def overlap(self, other: "WavePacket") -> complex:
        """<self|other>."""
        return complex(np.sum(np.conj(self.psi) * other.psi) * self.grid.dx)

    def check_support(self, margin: float = SUPPORT_SIGMAS):
        mu, sd = self.mean_x(), math.sqrt(self.var_x())
        if mu - margin * sd < self.grid.x_min or mu + margin * sd > self.grid.x_max:
            raise GridError(
                f"packet at {mu:.6g} +- {margin:g}*{sd:.3g} leaves grid [{self.grid.x_min:.6g}, {self.grid.x_max:.6g}]"
            )


def gaussian_packet(grid: Grid1D, x0: float, v0: float, sigma_x: float, m: float, hbar: float) -> WavePacket:
    """Minimum-uncertainty packet: position spread sigma_x, velocity spread hbar/(2 m sigma_x)."""
    if x0 - SUPPORT_SIGMAS * sigma_x < grid.x_min or x0 + SUPPORT_SIGMAS * sigma_x > grid.x_max:
        raise GridError("packet does not fit the grid")
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4 * sigma_x**2) + 1j * (m * v0 / hbar) * (x - x0))
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return WavePacket(grid, psi, m, hbar)


def apply_kick(packet: WavePacket, k: float) -> WavePacket:
    return replace(packet, psi=packet.psi * np.exp(1j * k * packet.grid.x))


class SplitStep:
    """Strang propagator for a fixed grid, potential and time step.

    The potential is a per-unit-mass specific potential (J/kg); a constant
    offset only adds a global phase, so the step check uses its half-range.
    """

    def __init__(self, grid: Grid1D, phi: np.ndarray, m: float, hbar: float, dt: float):
        self.grid, self.m, self.hbar, self.dt = grid, m, hbar, dt
        V = m * np.asarray(phi, dtype=float)
        V = V - 0.5 * (V.max() + V.min())
        kin = hbar * grid.wavenumbers**2 / (2 * m)
        v_phase = np.max(np.abs(V)) * abs(dt) / hbar
        k_phase = np.max(kin) * abs(dt)
        if v_phase >= MAX_STEP_PHASE or k_phase >= MAX_STEP_PHASE:
            raise StepResolutionError(
                f"per-step phase too large: potential {v_phase:.3g}, kinetic {k_phase:.3g} (limit pi/4)"
            )
        self.v_step = np.exp(-1j * V * dt / hbar)
        self.k_half = np.exp(-0.5j * kin * dt)
        self.k_full = self.k_half**2

    def run(self, psi: np.ndarray, n_steps: int) -> np.ndarray:
        fft, ifft = np.fft.fft, np.fft.ifft
        phi_k = fft(psi) * self.k_half
        for _ in range(n_steps - 1):
            phi_k = fft(self.v_step * ifft(phi_k)) * self.k_full
        phi_k = fft(self.v_step * ifft(phi_k)) * self.k_half
        return ifft(phi_k)


def min_steps(grid: Grid1D, model: GravityModel, m: float, hbar: float, T: float, safety: float = 0.9) -> int:
    """Smallest step count keeping per-step phases below pi/4 (times ``safety``)."""
    phi = potential_1d(model, grid.x)
    V = m * phi
    half_range = 0.5 * (V.max() - V.min())
    kin = hbar * np.max(grid.wavenumbers**2) / (2 * m)
    rate = max(half_range / hbar, kin)
    return max(1, math.ceil(abs(T) * rate / (safety * MAX_STEP_PHASE)))


def evolve(packet: WavePacket, model: GravityModel, T: float, n_steps: Optional[int] = None) -> WavePacket:
    """Propagate along the x axis of ``model`` for time T."""
    if n_steps is None:
        n_steps = min_steps(packet.grid, model, packet.m, packet.hbar, T)
    prop = SplitStep(packet.grid, potential_1d(model, packet.grid.x), packet.m, packet.hbar, T / n_steps)
    out = replace(packet, psi=prop.run(packet.psi, n_steps))
    out.check_support()
    return out


def branch_overlap(
    packet: WavePacket, cfg: AIConfig, model: GravityModel, n_steps: Optional[int] = None
) -> complex:
    """<down|up> for the three-pulse sequence with stage duration cfg.t.

    ``n_steps`` is per stage; both branches use identical steps so any global
    splitting phase cancels.
    """
    grid = packet.grid
    if n_steps is None:
        n_steps = min_steps(grid, model, packet.m, packet.hbar, cfg.t)
    prop = SplitStep(grid, potential_1d(model, grid.x), packet.m, packet.hbar, cfg.t / n_steps)
    kick = np.exp(1j * cfg.k * grid.x)

    def stage(psi):
        out = prop.run(psi, n_steps)
        WavePacket(grid, out, packet.m, packet.hbar).check_support()
        return out

    up = stage(np.conj(kick) * stage(kick * packet.psi))
    down = np.conj(kick) * stage(kick * stage(packet.psi))
    return complex(np.sum(np.conj(down) * up) * grid.dx)


def interferometer_phase(overlap: complex) -> float:
    return -math.atan2(overlap.imag, overlap.real)


def interferometer_grid(cfg: AIConfig, state: GaussianState1D, n_points: int = 4096, margin: float = 1.15) -> Grid1D:
    """Grid wide enough for both branches, each with 8-sigma clearance throughout."""
    T = 2 * cfg.t
    sigma_x = state.sigma_x
    sd_end = math.sqrt(sigma_x**2 + (state.sigma_v * T) ** 2)
    spread_v = 4 * state.sigma_v * T  # mixture components move with their own mean velocity
    lo = state.mean_x + min(0.0, state.mean_v * T) - 0.5 * cfg.g * T**2 - spread_v
    hi = state.mean_x + max(0.0, state.mean_v * T) + cfg.kick_velocity * cfg.t + spread_v
    half = SUPPORT_SIGMAS * sd_end
    center = 0.5 * (lo + hi)
    width = margin * (hi - lo + 2 * half)
    return Grid1D(center - width / 2, center + width / 2, n_points)


def mixture(state: GaussianState1D, m: float, hbar: float, nodes: int = 10) -> list:
    """(weight, mean velocity) pairs representing ``state`` as minimum-uncertainty packets."""
    sv0 = hbar / (2 * m * state.sigma_x)
    excess = state.sigma_v**2 - sv0**2
    if excess < -1e-12 * sv0**2:
        raise ValueError(
            f"sigma_x * sigma_v = {state.sigma_x * state.sigma_v:.6g} violates hbar/2m = {hbar / (2 * m):.6g}"
        )
    if excess <= 1e-12 * sv0**2:
        return [(1.0, state.mean_v)]
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    s = math.sqrt(excess)
    return [(float(wi), state.mean_v + s * float(zi)) for zi, wi in zip(z, w)]


def state_overlap(
    state: GaussianState1D,
    cfg: AIConfig,
    model: GravityModel,
    grid: Optional[Grid1D] = None,
    n_points: int = 4096,
    n_steps: Optional[int] = None,
    nodes: int = 10,
) -> complex:
    """<down|up> averaged over the (possibly mixed) Gaussian state."""
    if grid is None:
        grid = interferometer_grid(cfg, state, n_points)
    if n_steps is None:
        n_steps = min_steps(grid, model, cfg.m, cfg.hbar, cfg.t)
    total = 0j
    for weight, v0 in mixture(state, cfg.m, cfg.hbar, nodes):
        packet = gaussian_packet(grid, state.mean_x, v0, state.sigma_x, cfg.m, cfg.hbar)
        total += weight * branch_overlap(packet, cfg, model, n_steps)
    return total


VARIABLES = ("mean_v", "sigma_v", "mean_x")


def _with(state: GaussianState1D, vary: str, value: float) -> GaussianState1D:
    if vary not in VARIABLES:
        raise ValueError(f"vary must be one of {VARIABLES}, got {vary!r}")
    return replace(state, **{vary: value})


def predicted_phase(cfg: AIConfig, state: GaussianState1D) -> float:
    """State-dependent part of the interferometer phase from the closed forms.

    In the ``-arg<down|up>`` convention the central-velocity and
    central-position terms enter with a minus sign and the velocity-spread
    term with a plus sign.
    """
    mom = gaussian_moments(
        state.sigma_x, state.sigma_v, (state.mean_x, 0.0, 0.0), (state.mean_v, 0.0, 0.0)
    )
    b = phase_budget(cfg, mom)
    inv_R = 0.0 if math.isinf(cfg.R) else 1.0 / cfg.R
    theta_x = 2 * b.theta0 * state.mean_x * inv_R
    return -b.theta_vx - theta_x + b.theta_vx2


@dataclass(frozen=True)
class DifferentialPhase:
    delta: float
    predicted: float
    overlap_a: complex
    overlap_b: complex


def differential_phase(
    cfg: AIConfig,
    model: GravityModel,
    base: GaussianState1D,
    vary: str,
    value_a: float,
    value_b: float,
    grid: Optional[Grid1D] = None,
    n_points: int = 4096,
    n_steps: Optional[int] = None,
    nodes: int = 10,
) -> DifferentialPhase:
    """Change of interferometer phase when one state parameter moves from a to b.

    The grid is shared by both runs (sized for the wider state) so the
    discretisation is identical.
    """
    sa, sb = _with(base, vary, value_a), _with(base, vary, value_b)
    predicted = predicted_phase(cfg, sb) - predicted_phase(cfg, sa)
    if abs(predicted) > math.pi / 2:
        raise PhaseWrapError(f"predicted change {predicted:.3g} rad exceeds pi/2")
    if grid is None:
        ga, gb = interferometer_grid(cfg, sa, n_points), interferometer_grid(cfg, sb, n_points)
        grid = Grid1D(min(ga.x_min, gb.x_min), max(ga.x_max, gb.x_max), n_points)
    if n_steps is None:
        n_steps = min_steps(grid, model, cfg.m, cfg.hbar, cfg.t)
    oa = state_overlap(sa, cfg, model, grid, n_steps=n_steps, nodes=nodes)
    ob = state_overlap(sb, cfg, model, grid, n_steps=n_steps, nodes=nodes)
    delta = interferometer_phase(ob * np.conj(oa))
    return DifferentialPhase(delta=delta, predicted=predicted, overlap_a=oa, overlap_b=ob)


def phase_sweep(
    cfg: AIConfig,
    model: GravityModel,
    base: GaussianState1D,
    vary: str,
    values: Iterable[float],
    n_points: int = 4096,
    nodes: int = 10,
    workers: int = 1,
) -> list:
    """Rows (param, value, phase_rad, overlap_modulus) over a shared grid.

    Each value is an independent task with its own propagator, so ``workers``
    only changes wall time, never the rows.
    """
    values = list(values)
    states = [_with(base, vary, v) for v in values]
    grids = [interferometer_grid(cfg, s, n_points) for s in states]
    grid = Grid1D(min(g.x_min for g in grids), max(g.x_max for g in grids), n_points)
    n_steps = min_steps(grid, model, cfg.m, cfg.hbar, cfg.t)

    def task(state):
        return state_overlap(state, cfg, model, grid, n_steps=n_steps, nodes=nodes)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            overlaps = list(pool.map(task, states))
    else:
        overlaps = [task(s) for s in states]
    return [(vary, v, interferometer_phase(ov), abs(ov)) for v, ov in zip(values, overlaps)]


def write_sweep_csv(path, rows, metadata: Optional[dict] = None):
    from .io import write_table

    write_table(path, ["param", "value", "phase_rad", "overlap_modulus"], rows, metadata or {})
