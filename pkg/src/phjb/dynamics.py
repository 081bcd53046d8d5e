"""Rotating-frame dynamics about a uniformly spinning small body.

States are expressed either in body-fixed Cartesian coordinates
(x, y, z, vx, vy, vz, m) or in a spherical frame (rho, theta, psi, v_rho,
v_theta, v_psi, m) where theta is the azimuth, psi the latitude, and the
velocity components are physical speeds along the local basis
(e_rho, e_theta, e_psi).  Controls are (alpha, delta, T): alpha the
in-plane thrust angle from the radial direction, delta the out-of-plane
angle, T the thrust magnitude.  Thrust acceleration in the local basis is
(T/m)(cos alpha, sin alpha sin delta, sin alpha cos delta); propellant
flow is -T/v_exhaust.

All quantities are km-kg-s; thrust is in kg km/s^2 (1 N = 1e-3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class Harmonics:
    """Degree-2 gravity field coefficients with their reference radius (km)."""

    c20: float
    c22: float
    ref_radius: float

    def __post_init__(self):
        if self.ref_radius <= 0.0:
            raise ValueError("ref_radius must be positive")


@dataclass(frozen=True)
class AsteroidParams:
    omega: float  # [rad/s] spin rate about +z
    gm: float  # [km^3/s^2]
    harmonics: Harmonics | None = None

    def __post_init__(self):
        if self.omega < 0.0:
            raise ValueError("omega must be non-negative")
        if self.gm <= 0.0:
            raise ValueError("gm must be positive")


@dataclass(frozen=True)
class SpacecraftParams:
    m_dry: float  # [kg]
    m_propellant: float  # [kg]
    t_max: float  # [kg km/s^2]
    v_exhaust: float  # [km/s]

    def __post_init__(self):
        for name in ("m_dry", "m_propellant", "t_max", "v_exhaust"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def m_max(self) -> float:
        return self.m_dry + self.m_propellant


# Reference small body: asteroid 4769 Castalia.  The gravitational
# parameter comes from G times the radar-shape-model mass; the spin rate
# from the 4.07 h rotation period.
G_KM3_KG_S2 = 6.67430e-20
CASTALIA_MASS_KG = 1.4091e12
CASTALIA_OMEGA_RAD_S = 4.2883e-4


def castalia_params(harmonics: Harmonics | None = None) -> AsteroidParams:
    return AsteroidParams(
        omega=CASTALIA_OMEGA_RAD_S,
        gm=G_KM3_KG_S2 * CASTALIA_MASS_KG,
        harmonics=harmonics,
    )


def circular_rotating_velocity(rho: float, ast: AsteroidParams) -> float:
    """Tangential body-frame velocity of the circular orbit of radius rho.

    Point-mass balance: the inertial circular speed sqrt(gm/rho) minus the
    frame rotation omega*rho; negative when the body spins faster than the
    orbit.
    """
    return math.sqrt(ast.gm / rho) - ast.omega * rho


class StateVector(NamedTuple):
    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float
    m: float


class SphericalState(NamedTuple):
    rho: float
    theta: float
    psi: float
    v_rho: float
    v_theta: float
    v_psi: float
    m: float


class ControlSpherical(NamedTuple):
    alpha: float
    delta: float
    thrust: float


# ---------------------------------------------------------------------------
# Gravity
# ---------------------------------------------------------------------------

def gravity_potential(rho, psi, theta, ast: AsteroidParams):
    """Gravitational potential with a = grad U convention (U = gm/rho + ...)."""
    rho = np.asarray(rho, dtype=float)
    u = ast.gm / rho
    if ast.harmonics is not None:
        h = ast.harmonics
        sp, cp = np.sin(psi), np.cos(psi)
        br = h.c20 * (3.0 * sp * sp - 1.0) / 2.0 + 3.0 * h.c22 * cp * cp * np.cos(
            2.0 * np.asarray(theta)
        )
        u = u + ast.gm * h.ref_radius**2 / rho**3 * br
    return u


def gravity_sph(rho, psi, theta, ast: AsteroidParams, r_guard: float = 0.0):
    """Gravity acceleration components (a_rho, a_theta, a_psi) in the local basis."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= r_guard) or np.any(rho <= 0.0):
        raise ValueError("radius at or below the singularity guard")
    a_r = -ast.gm / rho**2
    a_t = np.zeros_like(a_r)
    a_p = np.zeros_like(a_r)
    if ast.harmonics is not None:
        h = ast.harmonics
        sp, cp = np.sin(psi), np.cos(psi)
        c2t, s2t = np.cos(2.0 * np.asarray(theta)), np.sin(2.0 * np.asarray(theta))
        k = ast.gm * h.ref_radius**2 / rho**4
        br = h.c20 * (3.0 * sp * sp - 1.0) / 2.0 + 3.0 * h.c22 * cp * cp * c2t
        a_r = a_r - 3.0 * k * br
        # a_psi = (1/rho) dU/dpsi, a_theta = (1/(rho cos psi)) dU/dtheta
        a_p = a_p + k * (3.0 * h.c20 - 6.0 * h.c22 * c2t) * sp * cp
        with np.errstate(invalid="ignore"):
            a_t = a_t - 6.0 * k * h.c22 * cp * s2t
    return a_r, a_t, a_p


def spherical_basis(theta, psi):
    """Local basis vectors (e_rho, e_theta, e_psi) as (..., 3) arrays."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(psi), np.cos(psi)
    e_r = np.stack([cp * ct, cp * st, sp + np.zeros_like(ct)], axis=-1)
    e_t = np.stack([-st, ct, np.zeros_like(ct)], axis=-1)
    e_p = np.stack([-sp * ct, -sp * st, cp + np.zeros_like(ct)], axis=-1)
    return e_r, e_t, e_p


def gravity_accel(pos, ast: AsteroidParams, r_guard: float = 0.0) -> np.ndarray:
    """Cartesian gravity acceleration at positions (..., 3)."""
    pos = np.asarray(pos, dtype=float)
    rho = np.sqrt(np.sum(pos * pos, axis=-1))
    if np.any(rho <= r_guard) or np.any(rho <= 0.0):
        raise ValueError("radius at or below the singularity guard")
    theta = np.arctan2(pos[..., 1], pos[..., 0])
    psi = np.arcsin(np.clip(pos[..., 2] / rho, -1.0, 1.0))
    a_r, a_t, a_p = gravity_sph(rho, psi, theta, ast, r_guard=0.0)
    e_r, e_t, e_p = spherical_basis(theta, psi)
    return (
        a_r[..., None] * e_r + a_t[..., None] * e_t + a_p[..., None] * e_p
    )


# ---------------------------------------------------------------------------
# Frame conversions
# ---------------------------------------------------------------------------

def spherical_to_cartesian(s) -> StateVector:
    rho, theta, psi, v_r, v_t, v_p, m = s
    e_r, e_t, e_p = spherical_basis(theta, psi)
    pos = rho * e_r
    vel = v_r * e_r + v_t * e_t + v_p * e_p
    return StateVector(pos[0], pos[1], pos[2], vel[0], vel[1], vel[2], m)


def cartesian_to_spherical(s) -> SphericalState:
    x, y, z, vx, vy, vz, m = s
    rho = math.sqrt(x * x + y * y + z * z)
    if rho == 0.0:
        raise ValueError("spherical frame undefined at the origin")
    theta = math.atan2(y, x)
    psi = math.asin(max(-1.0, min(1.0, z / rho)))
    e_r, e_t, e_p = spherical_basis(theta, psi)
    vel = np.array([vx, vy, vz])
    return SphericalState(
        rho, theta, psi, float(vel @ e_r), float(vel @ e_t), float(vel @ e_p), m
    )


# ---------------------------------------------------------------------------
# Control-affine vector fields (per unit physical time)
# ---------------------------------------------------------------------------

def f_tilde_cartesian(
    state, u, ast: AsteroidParams, sc: SpacecraftParams, r_guard: float = 0.0
) -> np.ndarray:
    """Rotating-frame Cartesian dynamics; u is the thrust force vector (3,)."""
    x, y, z, vx, vy, vz, m = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    gx, gy, gz = gravity_accel(np.array([x, y, z]), ast, r_guard)
    w = ast.omega
    return np.array(
        [
            vx,
            vy,
            vz,
            w * w * x + 2.0 * w * vy + gx + u[0] / m,
            w * w * y - 2.0 * w * vx + gy + u[1] / m,
            gz + u[2] / m,
            -math.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2) / sc.v_exhaust,
        ]
    )


def f_tilde_spherical(
    state, ctrl, ast: AsteroidParams, sc: SpacecraftParams, r_guard: float = 0.0
) -> np.ndarray:
    """Spherical-frame dynamics with curvature, centrifugal and Coriolis terms."""
    rho, theta, psi, v_r, v_t, v_p, m = np.asarray(state, dtype=float)
    alpha, delta, T = ctrl
    a_r, a_t, a_p = gravity_sph(rho, psi, theta, ast, r_guard)
    w = ast.omega
    sp, cp = math.sin(psi), math.cos(psi)
    tanp = sp / cp
    acc = T / m
    return np.array(
        [
            v_r,
            v_t / (rho * cp),
            v_p / rho,
            a_r + w * w * rho * cp * cp + 2.0 * w * v_t * cp
            + (v_t * v_t + v_p * v_p) / rho + acc * math.cos(alpha),
            a_t - 2.0 * w * (v_r * cp - v_p * sp) - v_r * v_t / rho
            + v_t * v_p * tanp / rho + acc * math.sin(alpha) * math.sin(delta),
            a_p - w * w * rho * cp * sp - 2.0 * w * v_t * sp - v_r * v_p / rho
            - v_t * v_t * tanp / rho + acc * math.sin(alpha) * math.cos(delta),
            -abs(T) / sc.v_exhaust,
        ]
    )


def f_tilde_planar(
    state, ctrl, ast: AsteroidParams, sc: SpacecraftParams, r_guard: float = 0.0
) -> np.ndarray:
    """Equatorial-plane dynamics (rho, theta, v_rho, v_theta, m); ctrl = (alpha, T)."""
    rho, theta, v_r, v_t, m = np.asarray(state, dtype=float)
    alpha, T = ctrl
    a_r, a_t, _ = gravity_sph(rho, 0.0, theta, ast, r_guard)
    w = ast.omega
    acc = T / m
    return np.array(
        [
            v_r,
            v_t / rho,
            a_r + w * w * rho + 2.0 * w * v_t + v_t * v_t / rho
            + acc * math.cos(alpha),
            a_t - 2.0 * w * v_r - v_r * v_t / rho + acc * math.sin(alpha),
            -abs(T) / sc.v_exhaust,
        ]
    )


def f_tilde_axisym(
    state, ctrl, ast: AsteroidParams, sc: SpacecraftParams, r_guard: float = 0.0
) -> np.ndarray:
    """Axisymmetric reduction (rho, v_rho, v_theta, m); point-mass gravity only."""
    rho, v_r, v_t, m = np.asarray(state, dtype=float)
    alpha, T = ctrl
    w = ast.omega
    acc = T / m
    if rho <= r_guard or rho <= 0.0:
        raise ValueError("radius at or below the singularity guard")
    return np.array(
        [
            v_r,
            -ast.gm / rho**2 + w * w * rho + 2.0 * w * v_t + v_t * v_t / rho
            + acc * math.cos(alpha),
            -2.0 * w * v_r - v_r * v_t / rho + acc * math.sin(alpha),
            -abs(T) / sc.v_exhaust,
        ]
    )


def rescale(f_value: np.ndarray, t_f: float) -> np.ndarray:
    """Time-rescaled dynamics on the unit interval: f = t_f * f_tilde."""
    if t_f < 0.0:
        raise ValueError("t_f must be non-negative")
    return t_f * np.asarray(f_value, dtype=float)


# ---------------------------------------------------------------------------
# Jacobians and growth/Lipschitz bounds
# ---------------------------------------------------------------------------

def numerical_jacobian(
    f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = 1.0e-6
) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        jac[:, j] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * step)
    return jac


def jacobian_axisym(state, ctrl, ast: AsteroidParams, sc: SpacecraftParams):
    rho, v_r, v_t, m = np.asarray(state, dtype=float)
    alpha, T = ctrl
    w = ast.omega
    j = np.zeros((4, 4))
    j[0, 1] = 1.0
    j[1, 0] = 2.0 * ast.gm / rho**3 + w * w - v_t * v_t / rho**2
    j[1, 2] = 2.0 * w + 2.0 * v_t / rho
    j[1, 3] = -(T / (m * m)) * math.cos(alpha)
    j[2, 0] = v_r * v_t / rho**2
    j[2, 1] = -2.0 * w - v_t / rho
    j[2, 2] = -v_r / rho
    j[2, 3] = -(T / (m * m)) * math.sin(alpha)
    return j


def jacobian_planar_pointmass(state, ctrl, ast: AsteroidParams, sc: SpacecraftParams):
    rho, theta, v_r, v_t, m = np.asarray(state, dtype=float)
    alpha, T = ctrl
    w = ast.omega
    j = np.zeros((5, 5))
    j[0, 2] = 1.0
    j[1, 0] = -v_t / rho**2
    j[1, 3] = 1.0 / rho
    j[2, 0] = 2.0 * ast.gm / rho**3 + w * w - v_t * v_t / rho**2
    j[2, 3] = 2.0 * w + 2.0 * v_t / rho
    j[2, 4] = -(T / (m * m)) * math.cos(alpha)
    j[3, 0] = v_r * v_t / rho**2
    j[3, 2] = -2.0 * w - v_t / rho
    j[3, 3] = -v_r / rho
    j[3, 4] = -(T / (m * m)) * math.sin(alpha)
    return j


def jacobian_cartesian_pointmass(state, u, ast: AsteroidParams, sc: SpacecraftParams):
    x, y, z, vx, vy, vz, m = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    pos = np.array([x, y, z])
    rho = math.sqrt(float(pos @ pos))
    w = ast.omega
    j = np.zeros((7, 7))
    j[0, 3] = j[1, 4] = j[2, 5] = 1.0
    tidal = ast.gm * (3.0 * np.outer(pos, pos) / rho**5 - np.eye(3) / rho**3)
    j[3:6, 0:3] = tidal
    j[3, 0] += w * w
    j[4, 1] += w * w
    j[3, 4] += 2.0 * w
    j[4, 3] += -2.0 * w
    j[3:6, 6] = -u / (m * m)
    return j


@dataclass(frozen=True)
class GrowthBounds:
    """Sampled bounds: |f| <= c_f (1 + |r|) and |J_r f| <= l_f on the region."""

    c_f: float
    l_f: float

    def l_tf(self, t_f: float) -> float:
        """Lipschitz constant of the flow map on the unit pseudo-time interval."""
        a = t_f * self.l_f
        if a > 700.0:  # exp overflow; inf is still a valid upper bound
            return math.inf
        return 1.0 + a * math.exp(a)


def growth_bounds(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    region_lower: Sequence[float],
    region_upper: Sequence[float],
    controls: Sequence,
    jac: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    n_samples: int = 1000,
    seed: int = 0,
    safety: float = 1.1,
) -> GrowthBounds:
    """Estimate growth and Lipschitz constants by sampling the region.

    jac(state, control) supplies the analytic state Jacobian; when None a
    central-difference Jacobian of f is used.  Maxima over samples are
    inflated by the safety factor.
    """
    lo = np.asarray(region_lower, dtype=float)
    hi = np.asarray(region_upper, dtype=float)
    rng = np.random.default_rng(seed)
    c_f = 0.0
    l_f = 0.0
    for _ in range(n_samples):
        r = lo + rng.random(lo.size) * (hi - lo)
        for u in controls:
            fv = np.asarray(f(r, u))
            c_f = max(c_f, float(np.linalg.norm(fv)) / (1.0 + float(np.linalg.norm(r))))
            if jac is None:
                jm = numerical_jacobian(lambda s: f(s, u), r)
            else:
                jm = np.asarray(jac(r, u))
            l_f = max(l_f, float(np.linalg.norm(jm, 2)))
    return GrowthBounds(c_f=safety * c_f, l_f=safety * l_f)
