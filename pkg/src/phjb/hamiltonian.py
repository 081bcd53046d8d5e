"""Minimized Hamiltonian of the time-rescaled transfer problem.

The costate q is a plain float64 array ordered like the state.  Over the
thrust ball the minimum of q . f has a closed form: the thrust direction
opposes the velocity-slot costate (magnitude Q), and the magnitude is
bang-off with switch function sigma = Q/m + q_m/v_exhaust (full thrust
when sigma >= 0, ties included).  The marched Hamiltonian is the negative
of the theorem-side minimum:

    H_hat = -t_f * (q . f_coast) + t_f * T_max * max(sigma, 0)

which is positively homogeneous of degree one in t_f.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import AsteroidParams, SpacecraftParams, f_tilde_spherical

#: Costate vectors are plain float64 arrays ordered like the state
#: (position slots, velocity slots, mass last for the full spherical frame).
Costate = np.ndarray


def advective_term(state, q, ast: AsteroidParams, sc: SpacecraftParams) -> float:
    """q . f_tilde at zero thrust (spherical frame, 7 components)."""
    f0 = f_tilde_spherical(state, (0.0, 0.0, 0.0), ast, sc)
    return float(np.asarray(q, dtype=float) @ f0)


def optimal_angles(q_vel) -> tuple[float, float]:
    """Thrust angles (alpha, delta) minimizing the velocity-costate coupling.

    q_vel = (q3, q4, q5), the costate components on (v_rho, v_theta,
    v_psi).  The returned angles satisfy

        q3 cos a + sin a (q4 sin d + q5 cos d) = -|q_vel|

    with alpha in [-pi, pi] and delta in [-pi/2, pi/2].  Zero costate
    returns (0, 0).
    """
    q3, q4, q5 = (float(v) for v in q_vel)
    qn = math.sqrt(q3 * q3 + q4 * q4 + q5 * q5)
    if qn == 0.0:
        return 0.0, 0.0
    c = max(-1.0, min(1.0, -q3 / qn))
    if q5 <= 0.0:
        return math.acos(c), math.atan2(-q4, -q5)
    return -math.acos(c), math.atan2(q4, q5)


def switch_function(q_vel, q_m: float, m: float, sc: SpacecraftParams) -> float:
    """sigma = |q_vel|/m + q_m/v_exhaust; thrust is on when sigma >= 0."""
    qn = float(np.linalg.norm(np.asarray(q_vel, dtype=float)))
    return qn / m + q_m / sc.v_exhaust


def optimal_thrust(q_vel, q_m: float, m: float, sc: SpacecraftParams) -> float:
    """Bang-off thrust magnitude; the tie sigma = 0 resolves to full thrust."""
    return sc.t_max if switch_function(q_vel, q_m, m, sc) >= 0.0 else 0.0


def hamiltonian(state, t_f: float, q, ast: AsteroidParams, sc: SpacecraftParams) -> float:
    """Marched Hamiltonian H_hat = -t_f * min_u q . f_tilde (spherical frame)."""
    q = np.asarray(q, dtype=float)
    m = float(np.asarray(state, dtype=float)[6])
    sigma = switch_function(q[3:6], q[6], m, sc)
    adv = advective_term(state, q, ast, sc)
    return t_f * (sc.t_max * max(sigma, 0.0) - adv)


def hamiltonian_direct(
    state, t_f: float, q, ctrl, ast: AsteroidParams, sc: SpacecraftParams
) -> float:
    """-t_f * q . f_tilde at an explicit control, for spot checks."""
    f = f_tilde_spherical(state, ctrl, ast, sc)
    return -t_f * float(np.asarray(q, dtype=float) @ f)


def dissipation_bounds(
    max_coast,
    thrust_mask,
    mass_dim: int,
    t_f: float,
    sc: SpacecraftParams,
    m_min: float,
) -> np.ndarray:
    """Per-dimension bounds on |dH_hat/dq_d| over a grid region.

    max_coast[d] is the interval maximum of |f_tilde_coast_d| over the
    region; velocity slots gain the thrust-authority bound T_max/m_min and
    the mass slot T_max/v_exhaust.  Returns alphas already scaled by t_f.
    """
    if t_f < 0.0:
        raise ValueError("t_f must be non-negative")
    mc = np.asarray(max_coast, dtype=float)
    if (mc < 0.0).any():
        raise ValueError("coast maxima must be non-negative")
    out = mc.copy()
    for d in range(out.size):
        if thrust_mask[d]:
            out[d] += sc.t_max / m_min
    out[mass_dim] += sc.t_max / sc.v_exhaust
    return t_f * out
