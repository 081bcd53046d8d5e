"""Closed-form Hamiltonian pieces: angles, switch function, bounds."""

import math

import numpy as np
import pytest

from phjb.dynamics import AsteroidParams, SpacecraftParams, f_tilde_spherical
from phjb.hamiltonian import (
    advective_term,
    dissipation_bounds,
    hamiltonian,
    hamiltonian_direct,
    optimal_angles,
    optimal_thrust,
    switch_function,
)

AST = AsteroidParams(omega=4.2883e-4, gm=9.40477e-8)
SC = SpacecraftParams(m_dry=900.0, m_propellant=200.0, t_max=1.0e-4,
                      v_exhaust=19.6)


def _unit(alpha, delta):
    return np.array([
        math.cos(alpha),
        math.sin(alpha) * math.sin(delta),
        math.sin(alpha) * math.cos(delta),
    ])


def test_optimal_angles_reach_minus_norm():
    rng = np.random.default_rng(21)
    for _ in range(500):
        q = rng.normal(0.0, 2.0, 3)
        a, d = optimal_angles(q)
        qn = np.linalg.norm(q)
        assert abs(float(q @ _unit(a, d)) + qn) < 1e-12 * max(1.0, qn)
        assert -math.pi <= a <= math.pi
        assert -math.pi / 2 <= d <= math.pi / 2


def test_optimal_angles_beat_random_directions():
    rng = np.random.default_rng(22)
    for _ in range(200):
        q = rng.normal(0.0, 1.0, 3)
        a, d = optimal_angles(q)
        best = float(q @ _unit(a, d))
        angles = rng.uniform(-math.pi, math.pi, (20, 2))
        for aa, dd in angles:
            assert best <= float(q @ _unit(aa, dd)) + 1e-12


def test_optimal_angles_zero_costate():
    assert optimal_angles(np.zeros(3)) == (0.0, 0.0)


def test_switch_function_controls_thrust():
    # sigma >= 0 burns (ties included), sigma < 0 coasts
    q_on = np.array([1.0, 0.0, 0.0])
    assert optimal_thrust(q_on, 0.0, 1000.0, SC) == SC.t_max
    q_m_tie = -SC.v_exhaust / 1000.0  # sigma = |q_v|/m + q_m/v_ex = 0
    assert optimal_thrust(q_on, q_m_tie * 1.0000001, 1000.0, SC) == 0.0
    assert abs(switch_function(q_on, q_m_tie, 1000.0, SC)) < 1e-12
    assert optimal_thrust(q_on, q_m_tie, 1000.0, SC) == SC.t_max


def _rand_state(rng):
    return np.array([
        rng.uniform(2.0, 9.0),
        rng.uniform(-math.pi, math.pi),
        rng.uniform(-1.2, 1.2),
        rng.uniform(-3e-3, 3e-3),
        rng.uniform(-3e-3, 3e-3),
        rng.uniform(-3e-3, 3e-3),
        rng.uniform(950.0, 1100.0),
    ])


def test_hamiltonian_dominates_every_explicit_control():
    """The closed form is the maximum of -t_f q.f over the control set."""
    rng = np.random.default_rng(23)
    for _ in range(200):
        s = _rand_state(rng)
        q = rng.normal(0.0, 1.0, 7)
        t_f = rng.uniform(10.0, 4000.0)
        h = hamiltonian(s, t_f, q, AST, SC)
        for _ in range(10):
            ctrl = (rng.uniform(-math.pi, math.pi),
                    rng.uniform(-math.pi, math.pi),
                    rng.uniform(0.0, SC.t_max))
            assert hamiltonian_direct(s, t_f, q, ctrl, AST, SC) <= h + 1e-9
        # the closed-form minimizer attains it
        from phjb.hamiltonian import optimal_angles as oa

        a, d = oa(q[3:6])
        t = optimal_thrust(q[3:6], q[6], s[6], SC)
        attained = hamiltonian_direct(s, t_f, q, (a, d, t), AST, SC)
        assert h == pytest.approx(attained, rel=1e-12, abs=1e-12)


def test_hamiltonian_scales_linearly_in_t_f():
    rng = np.random.default_rng(24)
    s = _rand_state(rng)
    q = rng.normal(0.0, 1.0, 7)
    h1 = hamiltonian(s, 100.0, q, AST, SC)
    h5 = hamiltonian(s, 500.0, q, AST, SC)
    assert h5 == pytest.approx(5.0 * h1, rel=1e-12)


def test_advective_term_is_coast_pairing():
    rng = np.random.default_rng(25)
    s = _rand_state(rng)
    q = rng.normal(0.0, 1.0, 7)
    f0 = f_tilde_spherical(s, (0.0, 0.0, 0.0), AST, SC)
    assert advective_term(s, q, AST, SC) == pytest.approx(float(q @ f0))


def test_dissipation_bounds_cover_hamiltonian_slopes():
    """alphas bound |dH/dq_d| for states and costates over the region."""
    rng = np.random.default_rng(26)
    max_coast = np.array([3e-3, 1e-3, 1e-3, 2e-9, 1e-9, 1e-9, 6e-6])
    mask = np.array([False, False, False, True, True, True, False])
    t_f = 1000.0
    alphas = dissipation_bounds(max_coast, mask, 6, t_f, SC, m_min=950.0)
    # the coast part of dH/dq_d is t_f * f_coast_d; add the thrust authority
    s = np.array([6.0, 0.1, 0.05, 1e-3, -5e-4, 2e-4, 980.0])
    f0 = f_tilde_spherical(s, (0.0, 0.0, 0.0), AST, SC)
    for d in range(7):
        bound = t_f * abs(f0[d])
        if mask[d]:
            bound += t_f * SC.t_max / 950.0
        if d == 6:
            bound += t_f * SC.t_max / SC.v_exhaust
        if abs(f0[d]) <= max_coast[d]:
            assert alphas[d] >= bound - 1e-15


def test_dissipation_bounds_validation():
    with pytest.raises(ValueError):
        dissipation_bounds(np.ones(3), [True] * 3, 2, -1.0, SC, 900.0)
    with pytest.raises(ValueError):
        dissipation_bounds(np.array([1.0, -1.0, 1.0]), [True] * 3, 2, 1.0, SC,
                           900.0)
