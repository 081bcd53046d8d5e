"""Rotating-frame dynamics: frame consistency, gravity, reference body."""

import math

import numpy as np
import pytest

from phjb.dynamics import (
    AsteroidParams,
    GrowthBounds,
    Harmonics,
    SpacecraftParams,
    CASTALIA_MASS_KG,
    G_KM3_KG_S2,
    cartesian_to_spherical,
    castalia_params,
    circular_rotating_velocity,
    f_tilde_axisym,
    f_tilde_cartesian,
    f_tilde_planar,
    f_tilde_spherical,
    gravity_potential,
    gravity_sph,
    growth_bounds,
    jacobian_axisym,
    numerical_jacobian,
    spherical_basis,
    spherical_to_cartesian,
)

AST = AsteroidParams(omega=4.2883e-4, gm=9.40477e-8,
                     harmonics=Harmonics(c20=-7.275e-2, c22=2.984e-2,
                                         ref_radius=0.5431))
SC = SpacecraftParams(m_dry=1000.0, m_propellant=0.2, t_max=1.0e-4,
                      v_exhaust=19.6)


def _rand_sph_state(rng):
    return np.array([
        rng.uniform(2.0, 9.0),
        rng.uniform(-math.pi, math.pi),
        rng.uniform(-1.2, 1.2),
        rng.uniform(-2e-3, 2e-3),
        rng.uniform(-3e-3, 3e-3),
        rng.uniform(-2e-3, 2e-3),
        rng.uniform(1000.0, 1000.2),
    ])


def test_frame_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(200):
        s = _rand_sph_state(rng)
        back = np.asarray(cartesian_to_spherical(spherical_to_cartesian(s)))
        # theta is only defined mod 2 pi
        dth = (back[1] - s[1] + math.pi) % (2.0 * math.pi) - math.pi
        assert abs(dth) < 1e-12
        back[1] = s[1]
        assert np.allclose(back, s, rtol=0.0, atol=1e-12)


def test_spherical_and_cartesian_flows_agree():
    """Both frames must integrate to the same physical path."""
    rng = np.random.default_rng(12)
    h = 1.0e-3
    for _ in range(100):
        s = _rand_sph_state(rng)
        ctrl = (rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi),
                rng.uniform(0.0, SC.t_max))
        fs = f_tilde_spherical(s, ctrl, AST, SC)
        c = np.asarray(spherical_to_cartesian(s))
        e_r, e_t, e_p = spherical_basis(s[1], s[2])
        alpha, delta, T = ctrl
        u = T * (math.cos(alpha) * e_r
                 + math.sin(alpha) * math.sin(delta) * e_t
                 + math.sin(alpha) * math.cos(delta) * e_p)
        fc = f_tilde_cartesian(c, u, AST, SC)
        sph_step = np.asarray(cartesian_to_spherical(c + h * fc))
        sph_ref = s + h * fs
        dth = (sph_step[1] - sph_ref[1] + math.pi) % (2.0 * math.pi) - math.pi
        err = max(abs(dth), np.abs(np.delete(sph_step - sph_ref, 1)).max())
        assert err < 5e-9 * max(1.0, np.abs(s).max())


def test_gravity_is_potential_gradient():
    rng = np.random.default_rng(13)
    h = 1e-6
    for _ in range(100):
        rho, psi, th = rng.uniform(2.0, 8.0), rng.uniform(-1.2, 1.2), \
            rng.uniform(-3.0, 3.0)
        a_r, a_t, a_p = gravity_sph(rho, psi, th, AST)
        dr = (gravity_potential(rho + h, psi, th, AST)
              - gravity_potential(rho - h, psi, th, AST)) / (2 * h)
        dp = (gravity_potential(rho, psi + h, th, AST)
              - gravity_potential(rho, psi - h, th, AST)) / (2 * h * rho)
        dt = (gravity_potential(rho, psi, th + h, AST)
              - gravity_potential(rho, psi, th - h, AST)) / (
                  2 * h * rho * math.cos(psi))
        # accelerations are ~1e-9 km/s^2; the bound must sit well below them
        assert abs(a_r - dr) < 1e-12
        assert abs(a_p - dp) < 1e-12
        assert abs(a_t - dt) < 1e-12


def test_gravity_guard_raises_inside_body():
    with pytest.raises(ValueError):
        gravity_sph(0.2, 0.0, 0.0, AST, r_guard=0.5)
    with pytest.raises(ValueError):
        f_tilde_axisym(np.array([0.2, 0.0, 0.0, 1000.1]), (0.0, 0.0), AST, SC,
                       r_guard=0.5)


def test_planar_and_axisym_match_spherical_on_equator():
    point = AsteroidParams(omega=AST.omega, gm=AST.gm)  # reductions: no harmonics
    rng = np.random.default_rng(14)
    for _ in range(100):
        rho, th = rng.uniform(2.0, 8.0), rng.uniform(-3.0, 3.0)
        v_r, v_t = rng.uniform(-2e-3, 2e-3), rng.uniform(-3e-3, 3e-3)
        m = rng.uniform(1000.0, 1000.2)
        alpha, T = rng.uniform(-math.pi, math.pi), rng.uniform(0.0, SC.t_max)
        full = f_tilde_spherical(
            np.array([rho, th, 0.0, v_r, v_t, 0.0, m]), (alpha, math.pi / 2, T),
            point, SC)
        pl = f_tilde_planar(np.array([rho, th, v_r, v_t, m]), (alpha, T),
                            point, SC)
        ax = f_tilde_axisym(np.array([rho, v_r, v_t, m]), (alpha, T), point, SC)
        assert np.allclose(pl, full[[0, 1, 3, 4, 6]], rtol=0.0, atol=1e-15)
        assert np.allclose(ax, full[[0, 3, 4, 6]], rtol=0.0, atol=1e-15)
        assert abs(full[5]) < 1e-15  # no out-of-plane drift on the equator


def test_axisym_jacobian_matches_finite_differences():
    rng = np.random.default_rng(15)
    for _ in range(50):
        s = np.array([rng.uniform(5.0, 7.0), rng.uniform(-1e-4, 1e-4),
                      rng.uniform(-3e-3, -2e-3), rng.uniform(1000.1, 1000.2)])
        ctrl = (rng.uniform(-math.pi, math.pi), rng.uniform(0.0, SC.t_max))
        ja = jacobian_axisym(s, ctrl, AST, SC)
        jn = numerical_jacobian(lambda x: f_tilde_axisym(x, ctrl, AST, SC), s)
        assert np.allclose(ja, jn, rtol=1e-5, atol=1e-9)


def test_circular_orbit_is_an_equilibrium():
    """Coast dynamics vanish at the circular-orbit velocity (point mass)."""
    point = AsteroidParams(omega=AST.omega, gm=AST.gm)
    rho = 6.1175
    v_t = circular_rotating_velocity(rho, point)
    f = f_tilde_axisym(np.array([rho, 0.0, v_t, 1000.2]), (0.0, 0.0), point, SC)
    assert np.abs(f).max() < 1e-15


def test_castalia_reference_values():
    ast = castalia_params()
    assert ast.gm == pytest.approx(G_KM3_KG_S2 * CASTALIA_MASS_KG)
    assert ast.gm == pytest.approx(9.40477e-8, rel=1e-5)
    assert circular_rotating_velocity(6.1175, ast) == pytest.approx(
        -2.49938e-3, abs=1e-7)


def test_growth_bounds_cover_sampled_field():
    bounds = growth_bounds(
        lambda s, u: f_tilde_axisym(s, u, AST, SC),
        [6.0, -1e-4, -3e-3, 1000.1],
        [6.2, 1e-4, -2e-3, 1000.2],
        [(0.0, 0.0), (1.0, SC.t_max)],
        n_samples=200,
        seed=7,
    )
    assert bounds.c_f > 0.0 and bounds.l_f > 0.0
    assert bounds.l_tf(0.0) == 1.0
    assert bounds.l_tf(2.0) > bounds.l_tf(1.0) >= 1.0
    # position-velocity coupling puts l_f near 1, so second-scale horizons
    # saturate the exp bound; inf must come back instead of an overflow
    assert bounds.l_tf(1800.0) == float("inf")
