import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from freefall.interferometer import (
    G_NEWTON,
    HBAR,
    K_LASER,
    M_ATOM,
    QUOTED_VALUES,
    AIConfig,
    commutator_coefficients,
    phase_budget,
    phase_budget_magnetic,
    preset,
    preset_budget,
)
from freefall.moments import gaussian_moments


def spread_state(cfg, mean_v=0.0):
    return gaussian_moments(1e-6, 0.1 * cfg.kick_velocity, mean_v=(mean_v, 0, 0))


def test_earth_velocity_spread_phase():
    _, b = preset_budget("earth")
    assert b.theta_vx2 / math.pi == pytest.approx(5.9e-12, rel=0.02)


@pytest.mark.parametrize("name", ["satellite-1000kg", "satellite-100kg", "magnetic"])
def test_quoted_presets(name):
    theta0_pi, vx2_pi = QUOTED_VALUES[name]
    _, b = preset_budget(name)
    assert b.theta0 / math.pi == pytest.approx(theta0_pi, rel=0.05)
    assert b.theta_vx2 / math.pi == pytest.approx(vx2_pi, rel=0.05)


def test_preset_inputs_are_the_quoted_ones():
    cfg, mom = preset("satellite-1000kg")
    assert cfg.k == 2 * math.pi / 500e-9 == K_LASER
    assert cfg.m == 1e-25 == M_ATOM
    assert cfg.hbar == HBAR
    assert cfg.g == G_NEWTON * 1e3 / 1.5**2
    assert mom.second_v[0] == pytest.approx((0.1 * HBAR * K_LASER / M_ATOM) ** 2, rel=1e-15)
    cfg, _ = preset("magnetic")
    assert (cfg.g, cfg.R, cfg.t) == (0.1, 0.1, 0.1)


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("moon")


def test_theta0_and_scaling_in_t():
    cfg, mom = preset("magnetic")
    b1 = phase_budget(cfg, mom)
    b2 = phase_budget(AIConfig(cfg.k, 2 * cfg.t, cfg.m, cfg.hbar, cfg.g, cfg.R), mom)
    assert b1.theta0 == cfg.g * cfg.k * cfg.t**2
    assert b2.theta0 == pytest.approx(4 * b1.theta0, rel=1e-15)
    assert b2.theta_vx2 == pytest.approx(16 * b1.theta_vx2, rel=1e-15)


def test_magnetic_zero_field():
    cfg, mom = preset("magnetic")
    b = phase_budget_magnetic(0.0, 0.1, cfg, mom)
    assert (b.theta0, b.theta_prime, b.theta_vx, b.theta_vx2) == (0, 0, 0, 0)


def test_raw_second_moment_is_used():
    cfg, _ = preset("satellite-1000kg")
    sv = 0.1 * cfg.kick_velocity
    centred = phase_budget(cfg, gaussian_moments(1e-6, sv))
    shifted = phase_budget(cfg, gaussian_moments(1e-6, sv, mean_v=(sv, 0, 0)))
    assert shifted.theta_vx2 == pytest.approx(2 * centred.theta_vx2, rel=1e-14)


@given(
    st.floats(1e-3, 1e3),
    st.floats(1e-2, 10),
    st.floats(1e-3, 1e6),
    st.floats(1e-4, 1e-1).flatmap(lambda v: st.tuples(st.just(v), st.floats(1e-5, 1e-1))),
)
def test_ratio_identities(g, t, R, velocity):
    mean_v, sigma_v = velocity
    cfg = AIConfig(k=K_LASER, t=t, m=M_ATOM, hbar=HBAR, g=g, R=R)
    mom = gaussian_moments(1e-6, sigma_v, mean_v=(mean_v, 0, 0))
    b = phase_budget(cfg, mom)
    v2 = float(mom.second_v[0])
    assert b.ratio_vx2_over_0 == pytest.approx(7 * t**2 * v2 / (2 * R**2), rel=1e-12)
    assert b.ratio_vx2_over_vx == pytest.approx(7 * t * v2 / (4 * R * mean_v), rel=1e-12)
    assert b.ratio_vx2_over_0 == pytest.approx(b.theta_vx2 / b.theta0, rel=1e-15)


def test_earth_ordering():
    cfg, _ = preset("earth")
    b = phase_budget(cfg, spread_state(cfg, mean_v=0.1 * cfg.kick_velocity))
    assert b.ratio_vx2_over_0 < b.ratio_vx2_over_vx < 1e-6


def test_recoil_term_vanishes_for_heavy_atoms():
    cfg, mom = preset("satellite-1000kg")
    heavy = AIConfig(cfg.k, cfg.t, 1e10, cfg.hbar, cfg.g, cfg.R)
    b = phase_budget(heavy, mom)
    assert b.theta_prime == pytest.approx(7 * b.theta0 * cfg.g * cfg.t**2 / (6 * cfg.R), rel=1e-12)


def test_uniform_gravity_has_only_theta0():
    b = phase_budget(AIConfig(20, 1, 1, 1, 1, math.inf), gaussian_moments(1, 1, mean_v=(0.3, 0, 0)))
    assert b.theta0 == 20 and b.theta_prime == b.theta_vx == b.theta_vx2 == 0


@pytest.mark.parametrize("field", ["k", "t", "m", "hbar", "g", "R"])
def test_config_requires_positive(field):
    args = dict(k=1.0, t=1.0, m=1.0, hbar=1.0, g=1.0, R=1.0)
    args[field] = 0.0
    with pytest.raises(ValueError):
        AIConfig(**args)


def test_json_shape():
    cfg, b = preset_budget("satellite-1000kg")
    doc = b.to_json(cfg)
    assert set(doc) == {
        "theta0_rad", "theta0_pi", "theta_prime_rad", "theta_vx_rad",
        "theta_vx2_rad", "theta_vx2_pi", "ratios", "config",
    }
    assert doc["config"]["k"] == cfg.k
    json.dumps({k: v for k, v in doc.items() if k != "ratios"})


def test_commutators_at_t0():
    c = commutator_coefficients(AIConfig(1, 1e-300, 1, 1, 1, 1))
    assert abs(c.c01) < 1e-299 and abs(c.c002) < 1e-299


def test_commutators_natural_units():
    c = commutator_coefficients(AIConfig(1, 1, 1, 1, 1, 1))
    assert c.c01 == pytest.approx(-2 / 3)
    assert c.affine == pytest.approx((2, 0.5, -7 / 30))
    assert c.c002 == pytest.approx(1.5)


def test_commutators_power_counting():
    c1 = commutator_coefficients(AIConfig(1, 1.3, 1, 1, 1, 1))
    c2 = commutator_coefficients(AIConfig(1, 1.3, 1, 1, 2, 1))
    assert c2.c01 == pytest.approx(2 * c1.c01)
    assert c2.c002 == pytest.approx(2 * c1.c002)
    assert c2.affine[2] == pytest.approx(4 * c1.affine[2])
