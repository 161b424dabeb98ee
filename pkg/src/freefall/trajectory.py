"""Classical free fall: second-order perturbative solution and numerical oracle.

The perturbative solution expands ``x(t)`` in powers of ``1/R`` around uniform
free fall, ``x = x0 + x1/R + x2/R**2``, with the lateral motion taken as
straight lines.  :func:`integrate_exact` integrates the full equations of
motion of any :data:`~freefall.potential.GravityModel` and is what the
expansion is checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .potential import Cubic, Exact, GravityModel, MagneticAnalog, acceleration


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t = {t_reached!r} s)")
        self.t_reached = t_reached


@dataclass(frozen=True)
class InitialConditions:
    r: tuple
    v: tuple

    def __post_init__(self):
        r = tuple(float(c) for c in self.r)
        v = tuple(float(c) for c in self.v)
        if len(r) != 3 or len(v) != 3:
            raise ValueError("r and v must have three components")
        if not all(math.isfinite(c) for c in r + v):
            raise ValueError("initial conditions must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class PerturbativeCoefficients:
    alpha: float
    beta: float
    gamma: float
    alpha_t: float
    beta_t: float
    gamma_t: float


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    r: tuple
    v: tuple


@dataclass
class Trajectory:
    t: np.ndarray  # (n,)
    r: np.ndarray  # (n, 3)
    v: np.ndarray  # (n, 3)

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[TrajectorySample]:
        for i in range(len(self.t)):
            yield TrajectorySample(float(self.t[i]), tuple(self.r[i]), tuple(self.v[i]))


def _inv(R: float) -> float:
    return 0.0 if math.isinf(R) else 1.0 / R


def perturbative_coefficients(g: float, R: float, t: float) -> PerturbativeCoefficients:
    if t < 0 or not R > 0:
        raise ValueError("need t >= 0 and R > 0")
    k1 = _inv(R)
    gt2 = g * t**2
    return PerturbativeCoefficients(
        alpha=1 + gt2 * k1 + 5 * gt2**2 * k1**2 / 12,
        beta=t * (1 + gt2 * k1 / 3 + 11 * gt2**2 * k1**2 / 60),
        gamma=0.5 * gt2 * (1 + gt2 * k1 / 6 + 11 * gt2**2 * k1**2 / 180),
        alpha_t=3 * gt2 * k1**2 / 4,
        beta_t=g * t**4 * k1**2 / 8,
        gamma_t=g * t**3 * k1**2 / 2,
    )


def x_perturbative(ic: InitialConditions, g: float, R: float, t: float) -> float:
    c = perturbative_coefficients(g, R, t)
    (x, y, z), (vx, vy, vz) = ic.r, ic.v
    return (
        c.alpha * x
        + c.beta * vx
        - c.gamma
        - c.alpha_t * (2 * x**2 - y**2 - z**2)
        - c.beta_t * (2 * vx**2 - vy**2 - vz**2)
        - c.gamma_t * (2 * x * vx - y * vy - z * vz)
    )


# Order-by-order pieces. These take array t.


def x0(ic: InitialConditions, g: float, t):
    t = np.asarray(t, dtype=float)
    return ic.r[0] + ic.v[0] * t - 0.5 * g * t**2


def x1(ic: InitialConditions, g: float, t):
    t = np.asarray(t, dtype=float)
    return g * t**2 * (ic.r[0] + ic.v[0] * t / 3 - g * t**2 / 12)


def x2(ic: InitialConditions, g: float, t):
    t = np.asarray(t, dtype=float)
    (x, y, z), (vx, vy, vz) = ic.r, ic.v
    return (
        5 * g**2 * t**4 / 12 * x
        + 11 * g**2 * t**5 / 60 * vx
        - 11 * g**3 * t**6 / 360
        - 3 * g * t**2 / 4 * (2 * x**2 - y**2 - z**2)
        - g * t**4 / 8 * (2 * vx**2 - vy**2 - vz**2)
        - g * t**3 / 2 * (2 * x * vx - y * vy - z * vz)
    )


def _scales(model: GravityModel) -> tuple:
    R = model.R
    L = R if math.isfinite(R) else 1.0
    g = model.g
    T = math.sqrt(L / g) if g > 0 else 1.0
    return L, T


def _check_tols(rel_tol: float, abs_tol: Optional[float]):
    if not 0 < rel_tol <= 1e-3:
        raise ValueError("rel_tol must lie in (0, 1e-3]")
    if abs_tol is not None and not abs_tol > 0:
        raise ValueError("abs_tol must be positive")


def _solve(model, r0, v0, t_end, rel_tol, abs_tol, t_eval):
    """Integrate a batch (n, 3) of initial states in scaled units."""
    L, T = _scales(model)
    n = r0.shape[0]
    y0 = np.concatenate([(r0 / L).ravel(), (v0 * T / L).ravel()])
    atol = (1e-15 * L if abs_tol is None else abs_tol) / L

    def rhs(_, y):
        r = y[: 3 * n].reshape(n, 3) * L
        a = acceleration(model, r) * T**2 / L
        return np.concatenate([y[3 * n :], a.ravel()])

    sol = solve_ivp(
        rhs,
        (0.0, t_end / T),
        y0,
        method="DOP853",
        rtol=rel_tol,
        atol=atol,
        t_eval=None if t_eval is None else np.asarray(t_eval) / T,
    )
    if sol.status != 0:
        t_reached = float(sol.t[-1] * T) if sol.t.size else 0.0
        raise IntegrationError(sol.message, t_reached)
    r = sol.y[: 3 * n].T.reshape(-1, n, 3) * L
    v = sol.y[3 * n :].T.reshape(-1, n, 3) * L / T
    return sol.t * T, r, v


def integrate_exact(
    model: GravityModel,
    ic: InitialConditions,
    t_end: float,
    rel_tol: float = 1e-12,
    abs_tol: Optional[float] = None,
    times: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Adaptive 8(5,3) Runge-Kutta integration of ``d2r/dt2 = acceleration(model, r)``.

    ``abs_tol`` is in metres and defaults to ``1e-15 * R``.  Output is sampled at
    ``times`` (default: 200 uniform points on ``[0, t_end]``); ``t_end`` may be
    negative to integrate backwards.
    """
    _check_tols(rel_tol, abs_tol)
    if times is None:
        times = np.linspace(0.0, t_end, 200)
    times = np.asarray(times, dtype=float)
    _, r, v = _solve(
        model,
        np.array([ic.r]),
        np.array([ic.v]),
        t_end,
        rel_tol,
        abs_tol,
        times,
    )
    return Trajectory(t=times.copy(), r=r[:, 0, :], v=v[:, 0, :])


def integrate_ensemble(
    model: GravityModel,
    r0: np.ndarray,
    v0: np.ndarray,
    t_end: float,
    rel_tol: float = 1e-10,
    abs_tol: Optional[float] = None,
) -> tuple:
    """Final positions and velocities, each (n, 3), for a batch of initial states."""
    _check_tols(rel_tol, abs_tol)
    r0 = np.atleast_2d(np.asarray(r0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    if t_end == 0:
        return r0.copy(), v0.copy()
    _, r, v = _solve(model, r0, v0, t_end, rel_tol, abs_tol, [t_end])
    return r[-1], v[-1]


def energy(model: GravityModel, r, v) -> np.ndarray:
    from .potential import potential

    v = np.asarray(v, dtype=float)
    return 0.5 * np.sum(v**2, axis=-1) + potential(model, r)


@dataclass
class ResidualCurve:
    t: np.ndarray
    analytic: np.ndarray  # x2(t) / R**2
    numeric: np.ndarray  # x_num - x0 - x1/R

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.analytic - self.numeric)))

    def relative_deviation(self) -> float:
        scale = np.max(np.abs(self.analytic))
        return self.max_deviation() / scale if scale > 0 else self.max_deviation()


def second_order_residual(
    model: GravityModel,
    ic: InitialConditions,
    g: Optional[float] = None,
    R: Optional[float] = None,
    times: Optional[Sequence[float]] = None,
    t_end: float = 10.0,
    n_points: int = 200,
    rel_tol: float = 1e-12,
) -> ResidualCurve:
    """Second-order correction from the analytic series and from the numerical orbit."""
    if not isinstance(model, (Exact, Cubic, MagneticAnalog)):
        raise TypeError("unknown model")
    g = model.g if g is None else g
    R = model.R if R is None else R
    if times is None:
        times = np.linspace(0.0, t_end, n_points)
    times = np.asarray(times, dtype=float)
    traj = integrate_exact(model, ic, float(times[-1]), rel_tol=rel_tol, times=times)
    k1 = _inv(R)
    numeric = traj.r[:, 0] - x0(ic, g, times) - x1(ic, g, times) * k1
    analytic = x2(ic, g, times) * k1**2 + 0.0  # no negative zeros in output
    return ResidualCurve(t=times, analytic=analytic, numeric=numeric)
