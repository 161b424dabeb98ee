import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from freefall.moments import GaussianEnsemble, positional_average
from freefall.potential import Cubic, Exact, GravitySource
from freefall.wigner import (
    DensityProfile,
    GaussianState1D,
    classical_density_mc,
    epsilon_q,
    f_initial,
    f_uniform,
    p0,
    p_quantum,
    p_uniform,
    pq_moments,
    profile_table,
    quantum_prefactor,
    third_derivative,
    trap_release_state,
    xi,
)

HBAR, M = 1.0546e-34, 1e-25
SRC = GravitySource(6.67e-11, 1e3, 1.5)
G, R = SRC.g, SRC.R
TRAP = trap_release_state(M, 100.0, HBAR)
UNIT = GaussianState1D(1.0, 1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        GaussianState1D(0.0, 1.0)


def test_trap_state_is_minimum_uncertainty():
    assert TRAP.sigma_x * TRAP.sigma_v == pytest.approx(HBAR / (2 * M))
    assert TRAP.sigma_x == pytest.approx(2.3e-6, rel=0.01)


def test_f_initial_peak_and_norm():
    assert f_initial(UNIT, 0.0, 0.0) == pytest.approx(1 / (2 * math.pi))
    s = GaussianState1D(0.5, 2.0, 1.0, -1.0)
    total, _ = integrate.dblquad(lambda v, x: f_initial(s, x, v), -5, 7, -17, 15, epsabs=1e-12)
    assert total == pytest.approx(1, abs=1e-8)


def test_f_initial_marginal():
    s = GaussianState1D(0.7, 1.3)
    x = np.linspace(-3, 3, 13)
    marg = [integrate.quad(lambda v: f_initial(s, xx, v), -15, 15)[0] for xx in x]
    assert np.allclose(marg, stats.norm.pdf(x, scale=0.7), atol=1e-12)


def test_f_uniform_reduces_at_t0():
    x, v = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(-3, 3, 7))
    assert np.array_equal(f_uniform(UNIT, x, v, 9.8, 0.0), f_initial(UNIT, x, v))


def test_f_uniform_norm_and_ballistic_spread():
    s = GaussianState1D(0.5, 0.8)
    t = 2.0
    total, _ = integrate.dblquad(lambda v, x: f_uniform(s, x, v, 1.0, t), -15, 10, -10, 10, epsabs=1e-12)
    assert total == pytest.approx(1, abs=1e-8)
    var, _ = integrate.dblquad(lambda v, x: x**2 * f_uniform(s, x, v, 0.0, t), -12, 12, -10, 10, epsabs=1e-12)
    assert var == pytest.approx(0.25 + 0.64 * 4, rel=1e-8)


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 3))
def test_p_uniform_is_velocity_marginal(sx, sv, mx, mv, t):
    s = GaussianState1D(sx, sv, mx, mv)
    spread = s.spread(t)
    x = s.center(1.0, t) + spread * np.linspace(-4, 4, 9)
    v = np.linspace(mv - t - 12 * sv, mv - t + 12 * sv, 4001)
    marg = integrate.simpson(f_uniform(s, x[:, None], v[None, :], 1.0, t), x=v, axis=1)
    assert np.max(np.abs(marg - p_uniform(s, x, 1.0, t))) * spread < 1e-9


def test_p_uniform_peak_location():
    t = 1.5
    x = np.linspace(-5, 2, 70001)
    assert x[np.argmax(p_uniform(UNIT, x, 1.0, t))] == pytest.approx(-1.125, abs=1e-4)
    assert xi(UNIT, -1.125, 1.0, t) == 0


def test_pq_matches_third_derivative():
    t = 10.0
    s, c = TRAP.spread(t), TRAP.center(G, t)
    x = c + s * np.linspace(-5, 5, 1001)
    closed = p_quantum(TRAP, x, G, R, M, HBAR, t)
    fd = -quantum_prefactor(G, R, M, HBAR, t) * third_derivative(lambda u: p_uniform(TRAP, u, G, t), x, 1e-3 * s)
    assert np.max(np.abs(closed - fd)) / np.max(np.abs(closed)) < 1e-6


def test_third_derivative_of_cubic_is_exact():
    assert third_derivative(lambda u: u**3, np.array([0.0, 1.0]), 0.1) == pytest.approx(6.0, rel=1e-12)


def test_zeros_and_odd_symmetry():
    t = 5.0
    c, s = TRAP.center(G, t), TRAP.spread(t)
    for z in (0.0, math.sqrt(3), -math.sqrt(3)):
        assert abs(p_quantum(TRAP, c + s * z, G, R, M, HBAR, t)) < 1e-12 * p0(G, R, M, HBAR, TRAP.sigma_v)
    z = np.linspace(0.1, 5, 50)
    a = p_quantum(TRAP, c + s * z, G, R, M, HBAR, t)
    b = p_quantum(TRAP, c - s * z, G, R, M, HBAR, t)
    assert np.allclose(a, -b, rtol=1e-9, atol=0)


def test_sign_changes():
    t = 10.0
    c, s = TRAP.center(G, t), TRAP.spread(t)
    pq = p_quantum(TRAP, c + s * np.linspace(-5, 5, 1000), G, R, M, HBAR, t)
    # one change at each root of xi^3 - 3 xi
    assert np.count_nonzero(np.diff(np.sign(pq))) == 3


def test_p0_values():
    assert p0(G, R, M, HBAR, 2.3e-4) == pytest.approx(3.3e-13, rel=0.05)
    assert p0(G, R, M, HBAR, 2.3e-6) == pytest.approx(3.3e-5, rel=0.05)


@given(st.floats(1e-6, 1e-2))
def test_p0_quartic_scaling(sv):
    assert p0(G, R, M, HBAR, sv / 2) == pytest.approx(16 * p0(G, R, M, HBAR, sv), rel=1e-14)


def test_sigma_v_floor():
    with pytest.raises(ValueError):
        p0(G, R, M, HBAR, 1e-13)
    with pytest.raises(ValueError):
        p_quantum(GaussianState1D(1.0, 1e-6), 0.0, G, R, M, HBAR, 1.0, floor=1e-5)


def test_linear_in_epsilon_q():
    t = 3.0
    x = TRAP.center(G, t) + TRAP.spread(t) * np.linspace(-3, 3, 31)
    one = p_quantum(TRAP, x, G, R, M, HBAR, t)
    two = p_quantum(TRAP, x, G, R, M, math.sqrt(2) * HBAR, t)
    assert np.allclose(two, 2 * one, rtol=1e-13, atol=0)
    assert epsilon_q(G, R, M, math.sqrt(2) * HBAR) == pytest.approx(2 * epsilon_q(G, R, M, HBAR), rel=1e-15)


def test_moment_identities():
    mom = pq_moments(TRAP, G, R, M, HBAR, 10.0)
    assert all(abs(v) <= 1e-10 for v in mom.normalized[:3])
    assert mom.raw[3] == pytest.approx(1.5 * epsilon_q(G, R, M, HBAR) * 10.0**4, rel=1e-8)
    assert mom.expected_third == pytest.approx(mom.raw[3], rel=1e-8)


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 5))
def test_moment_identities_natural_units(sx, sv, mx, mv, t):
    s = GaussianState1D(sx, sv, mx, mv)
    mom = pq_moments(s, 1.0, 20.0, 1.0, 1.0, t)
    assert all(abs(v) <= 1e-10 for v in mom.normalized[:3])
    assert mom.raw[3] == pytest.approx(mom.expected_third, rel=1e-8)


def test_moments_vanish_at_t0():
    mom = pq_moments(TRAP, G, R, M, HBAR, 0.0)
    assert mom.raw == (0.0,) * 4 and mom.normalized == (0.0,) * 4


def test_small_t_growth_law():
    tau = TRAP.sigma_x / TRAP.sigma_v
    ts = tau * np.array([1e-3, 2e-3, 4e-3, 8e-3])
    peaks = []
    for t in ts:
        x = TRAP.center(G, t) + TRAP.spread(t) * np.linspace(-4, 4, 2001)
        peaks.append(np.max(np.abs(p_quantum(TRAP, x, G, R, M, HBAR, t))))
    slope = np.polyfit(np.log(ts), np.log(peaks), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.05)


def test_profile_table_integrals():
    t = 10.0
    x = TRAP.center(G, t) + TRAP.spread(t) * np.linspace(-8, 8, 4001)
    table = profile_table(TRAP, x, G, R, M, HBAR, t)
    pu = DensityProfile(x, table[:, 1], t).integral()
    pq = DensityProfile(x, table[:, 2], t).integral()
    assert pu == pytest.approx(1, abs=1e-6)
    assert abs(pq) < 1e-6
    assert np.array_equal(table[:, 3], table[:, 1] + table[:, 2])


def _bin_average(state, edges, g, t):
    cdf = stats.norm.cdf(edges, loc=state.center(g, t), scale=state.spread(t))
    return np.diff(cdf) / np.diff(edges)


def test_mc_needs_samples():
    with pytest.raises(ValueError):
        classical_density_mc(Cubic.uniform(1.0), GaussianEnsemble(1.0, 1.0), 1.0, n_samples=9999)


def test_mc_histogram_uniform_gravity():
    ens = GaussianEnsemble(1.0, 0.5)
    state = GaussianState1D(1.0, 0.5)
    t = 2.0
    prof = classical_density_mc(Cubic.uniform(1.0), ens, t, n_samples=50_000, seed=4)
    expected = _bin_average(state, prof.edges, 1.0, t)
    ok = prof.counts >= 25
    rel = np.abs(prof.density[ok] - expected[ok]) / expected[ok]
    assert np.all(rel <= 4 / np.sqrt(prof.counts[ok]))
    assert prof.integral() == pytest.approx(1, abs=1e-3)


def test_mc_histogram_at_t0():
    ens = GaussianEnsemble(0.3, 0.5, (1.0, 0, 0))
    prof = classical_density_mc(Cubic(1.0, 50.0), ens, 0.0, n_samples=20_000, seed=2)
    expected = _bin_average(GaussianState1D(0.3, 0.5, 1.0), prof.edges, 1.0, 0.0)
    ok = prof.counts >= 25
    assert np.all(np.abs(prof.density[ok] - expected[ok]) / expected[ok] <= 4 / np.sqrt(prof.counts[ok]))


def test_mc_mean_matches_moment_formula():
    ens = GaussianEnsemble(TRAP.sigma_x, TRAP.sigma_v)
    t = 10.0
    prof = classical_density_mc(Exact(SRC), ens, t, n_samples=100_000)
    pred = float(positional_average(ens.moments(), G, R, t))
    assert abs(prof.sample_mean - pred) <= 3 * prof.sample_stderr


def test_total_probability_with_correction():
    ens = GaussianEnsemble(TRAP.sigma_x, TRAP.sigma_v)
    t = 10.0
    prof = classical_density_mc(Exact(SRC), ens, t, n_samples=20_000)
    pq = p_quantum(TRAP, prof.x, G, R, M, HBAR, t)
    total = np.sum((prof.density + pq) * np.diff(prof.edges))
    outside = 1 - prof.counts.sum() / prof.n_samples
    assert total == pytest.approx(1 - outside, abs=1e-6)


def test_mc_deterministic():
    ens = GaussianEnsemble(1.0, 0.5)
    a = classical_density_mc(Cubic(1.0, 30.0), ens, 1.0, n_samples=10_000, seed=9)
    b = classical_density_mc(Cubic(1.0, 30.0), ens, 1.0, n_samples=10_000, seed=9, workers=2)
    assert np.array_equal(a.counts, b.counts) and a.sample_mean == b.sample_mean
