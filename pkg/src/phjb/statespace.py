"""Per-mode state-space assembly: grids of drift, constraints, and controls.

Four modes share one solver kernel; each mode declares which state slots
receive thrust acceleration, which slot is mass, and how to evaluate the
control-free drift (coast) fields over a grid:

- ``toy``        (x, v, m): double integrator with signed thrust [-T, T]
- ``axisym``     (rho, v_rho, v_theta, m): equatorial ring, point mass
- ``planar``     (rho, theta, v_rho, v_theta, m): equatorial plane
- ``cartesian3d`` (x, y, z, vx, vy, vz, m): full body-fixed frame

Controls are mode arrays: [T] (toy), [alpha, T] (axisym/planar), or the
force vector [ux, uy, uz] (cartesian3d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics as dyn
from .constraints import ConstraintConfig, TargetConfig, g_rho_m, nu_weighted
from .grid import Grid

MODES = ("toy", "axisym", "planar", "cartesian3d")

_MODE_LAYOUT = {
    "toy": (("x", "v", "m"), (1,), 2, (False, False, False)),
    "axisym": (("rho", "v_rho", "v_theta", "m"), (1, 2), 3, (False,) * 4),
    "planar": (
        ("rho", "theta", "v_rho", "v_theta", "m"),
        (2, 3),
        4,
        (False, True, False, False, False),
    ),
    "cartesian3d": (
        ("x", "y", "z", "vx", "vy", "vz", "m"),
        (3, 4, 5),
        6,
        (False,) * 7,
    ),
}


@dataclass(frozen=True)
class ToyBox:
    """Box constraints of the toy double integrator."""

    x_min: float
    x_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.v_min < self.v_max):
            raise ValueError("toy box bounds must be ordered")


@dataclass(frozen=True)
class Problem:
    """A fully specified transfer problem in one of the supported modes."""

    mode: str
    ast: dyn.AsteroidParams | None
    sc: dyn.SpacecraftParams
    ccfg: ConstraintConfig
    tgt: TargetConfig
    toy_box: ToyBox | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "toy":
            if self.toy_box is None:
                raise ValueError("toy mode requires toy_box")
        else:
            if self.ast is None:
                raise ValueError(f"{self.mode} mode requires asteroid parameters")
            if self.mode == "axisym" and self.ast.harmonics is not None:
                raise ValueError("axisym mode requires point-mass gravity")
        if len(self.tgt.r_target) != self.ndim:
            raise ValueError("target dimension does not match mode")

    @property
    def names(self) -> tuple[str, ...]:
        return _MODE_LAYOUT[self.mode][0]

    @property
    def thrust_dims(self) -> tuple[int, ...]:
        return _MODE_LAYOUT[self.mode][1]

    @property
    def mass_dim(self) -> int:
        return _MODE_LAYOUT[self.mode][2]

    @property
    def periodic(self) -> tuple[bool, ...]:
        return _MODE_LAYOUT[self.mode][3]

    @property
    def ndim(self) -> int:
        return len(self.names)

    @property
    def r_guard(self) -> float:
        return 0.5 * self.ccfg.rho_min

    # -- pointwise dynamics ------------------------------------------------

    def f_tilde(self, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Per-unit-time derivative at one state for a mode control array."""
        state = np.asarray(state, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.mode == "toy":
            x, v, m = state
            return np.array([v, u[0] / m, -abs(u[0]) / self.sc.v_exhaust])
        if self.mode == "axisym":
            return dyn.f_tilde_axisym(state, (u[0], u[1]), self.ast, self.sc,
                                      self.r_guard)
        if self.mode == "planar":
            return dyn.f_tilde_planar(state, (u[0], u[1]), self.ast, self.sc,
                                      self.r_guard)
        return dyn.f_tilde_cartesian(state, u, self.ast, self.sc, self.r_guard)

    def optimal_control(self, q: np.ndarray, m: float) -> np.ndarray:
        """Pointwise minimizer of q . f over the control set."""
        q = np.asarray(q, dtype=float)
        qv = q[list(self.thrust_dims)]
        qn = float(np.linalg.norm(qv))
        on = qn / m + q[self.mass_dim] / self.sc.v_exhaust >= 0.0
        tm = self.sc.t_max
        if self.mode == "toy":
            if not on:
                return np.array([0.0])
            return np.array([tm if qv[0] <= 0.0 else -tm])
        if self.mode in ("axisym", "planar"):
            alpha = math.atan2(-qv[1], -qv[0]) if qn > 0.0 else 0.0
            return np.array([alpha, tm if on else 0.0])
        if not on or qn == 0.0:
            return np.zeros(3)
        return -tm * qv / qn

    def control_sample(self, n_dirs: int = 8, n_mags: int = 2) -> list[np.ndarray]:
        """Deterministic control lattice covering directions and magnitudes."""
        tm = self.sc.t_max
        mags = np.linspace(0.0, tm, n_mags)
        if self.mode == "toy":
            out = {0.0}
            for t in mags:
                out.update((t, -t))
            return [np.array([t]) for t in sorted(out)]
        if self.mode in ("axisym", "planar"):
            angles = np.linspace(-math.pi, math.pi, n_dirs, endpoint=False)
            ctrls = [np.array([0.0, 0.0])]
            for a in angles:
                for t in mags[1:]:
                    ctrls.append(np.array([a, t]))
            return ctrls
        ctrls = [np.zeros(3)]
        # Fibonacci sphere directions
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for k in range(n_dirs):
            zc = 1.0 - 2.0 * (k + 0.5) / n_dirs
            r = math.sqrt(max(0.0, 1.0 - zc * zc))
            a = golden * k
            d = np.array([r * math.cos(a), r * math.sin(a), zc])
            for t in mags[1:]:
                ctrls.append(t * d)
        return ctrls

    # -- grid fields -------------------------------------------------------

    def check_grid(self, grid: Grid):
        if grid.ndim != self.ndim:
            raise ValueError(f"{self.mode} mode needs a {self.ndim}-D grid")
        if grid.periodic != self.periodic:
            raise ValueError("grid periodicity does not match mode")
        if self.mode != "toy" and grid.lower[0] <= self.r_guard:
            raise ValueError("grid reaches below the gravity singularity guard")

    def coast_fields(self, grid: Grid) -> np.ndarray:
        """(ndim, npoints) control-free drift, C-order flattened."""
        self.check_grid(grid)
        m = grid.meshes()
        shape = grid.shape
        if self.mode == "toy":
            rows = [m[1], np.zeros(shape), np.zeros(shape)]
        elif self.mode == "axisym":
            rho, v_r, v_t = m[0], m[1], m[2]
            w = self.ast.omega
            rows = [
                v_r,
                -self.ast.gm / rho**2 + w * w * rho + 2.0 * w * v_t
                + v_t * v_t / rho,
                -2.0 * w * v_r - v_r * v_t / rho,
                np.zeros(shape),
            ]
        elif self.mode == "planar":
            rho, th, v_r, v_t = m[0], m[1], m[2], m[3]
            a_r, a_t, _ = dyn.gravity_sph(rho, 0.0, th, self.ast, self.r_guard)
            w = self.ast.omega
            rows = [
                v_r,
                v_t / rho,
                a_r + w * w * rho + 2.0 * w * v_t + v_t * v_t / rho,
                a_t - 2.0 * w * v_r - v_r * v_t / rho,
                np.zeros(shape),
            ]
        else:
            pos = np.stack(np.broadcast_arrays(m[0], m[1], m[2]), axis=-1)
            gvec = dyn.gravity_accel(pos, self.ast, self.r_guard)
            w = self.ast.omega
            rows = [
                m[3],
                m[4],
                m[5],
                w * w * m[0] + 2.0 * w * m[4] + gvec[..., 0],
                w * w * m[1] - 2.0 * w * m[3] + gvec[..., 1],
                gvec[..., 2] + np.zeros(shape),
                np.zeros(shape),
            ]
        out = np.empty((self.ndim, grid.size))
        for d in range(self.ndim):
            out[d] = np.ascontiguousarray(np.broadcast_to(rows[d], shape)).ravel()
        return out

    def thrust_gain_field(self, grid: Grid) -> np.ndarray:
        """(npoints,) thrust acceleration bound T_max/m."""
        m = grid.meshes()[self.mass_dim]
        full = np.broadcast_to(self.sc.t_max / m, grid.shape)
        return np.ascontiguousarray(full).ravel()

    def g_field(self, grid: Grid) -> np.ndarray:
        m = grid.meshes()
        mass = m[self.mass_dim]
        if self.mode == "toy":
            b = self.toy_box
            ls, vs = self.ccfg.length_scale, self.ccfg.velocity_scale
            gv = np.maximum.reduce(
                np.broadcast_arrays(
                    (b.x_min - m[0]) / ls,
                    (m[0] - b.x_max) / ls,
                    (b.v_min - m[1]) / vs,
                    (m[1] - b.v_max) / vs,
                    (self.ccfg.m_min - mass) / self.ccfg.mass_scale,
                )
            )
        else:
            gv = np.broadcast_to(g_rho_m(m[0], mass, self.ccfg), grid.shape)
        return np.ascontiguousarray(gv).ravel()

    def g_state(self, state: np.ndarray) -> float:
        """Constraint function at one state (same formula as g_field)."""
        state = np.asarray(state, dtype=float)
        mass = state[self.mass_dim]
        if self.mode == "toy":
            b = self.toy_box
            ls, vs = self.ccfg.length_scale, self.ccfg.velocity_scale
            return float(max(
                (b.x_min - state[0]) / ls,
                (state[0] - b.x_max) / ls,
                (b.v_min - state[1]) / vs,
                (state[1] - b.v_max) / vs,
                (self.ccfg.m_min - mass) / self.ccfg.mass_scale,
            ))
        return float(g_rho_m(state[0], mass, self.ccfg))

    def _target_deltas(self, coords: list[np.ndarray], grid: Grid | None):
        deltas = []
        for d in range(self.ndim):
            dd = coords[d] - self.tgt.r_target[d]
            if self.periodic[d]:
                per = 2.0 * math.pi
                dd = (dd + per / 2.0) % per - per / 2.0
            deltas.append(dd)
        return deltas

    def nu_field(self, grid: Grid) -> np.ndarray:
        m = grid.meshes()
        deltas = self._target_deltas(m, grid)
        acc = np.zeros(grid.shape)
        for d in range(self.ndim):
            w = self.tgt.weights[d]
            if w != 0.0:
                acc = acc + (w * deltas[d]) ** 2
        return (np.sqrt(acc) - self.tgt.epsilon).ravel()

    def nu_state(self, state: np.ndarray) -> float:
        coords = [np.asarray(float(v)) for v in np.asarray(state, dtype=float)]
        deltas = np.array(self._target_deltas(coords, None))
        return float(nu_weighted(deltas, self.tgt.weights, self.tgt.epsilon))

    def frozen_mask(self, grid: Grid) -> np.ndarray:
        """Points outside the admissible set are pinned to the obstacle."""
        return self.g_field(grid) > 0.0

    def max_coast(self, grid: Grid) -> np.ndarray:
        """Per-dimension interval maxima of |coast| over the grid box."""
        return np.abs(self.coast_fields(grid)).max(axis=1)

    def growth_bounds(
        self, lower, upper, n_samples: int = 400, seed: int = 0
    ) -> dyn.GrowthBounds:
        """Sampled growth/Lipschitz bounds of f_tilde over a state box."""
        jac = None
        if self.mode == "toy":
            def jac(s, u):
                j = np.zeros((3, 3))
                j[0, 1] = 1.0
                j[1, 2] = -u[0] / (s[2] * s[2])
                return j
        elif self.mode == "axisym":
            def jac(s, u):
                return dyn.jacobian_axisym(s, (u[0], u[1]), self.ast, self.sc)
        elif self.mode == "planar" and self.ast.harmonics is None:
            def jac(s, u):
                return dyn.jacobian_planar_pointmass(s, (u[0], u[1]), self.ast, self.sc)
        elif self.mode == "cartesian3d" and self.ast.harmonics is None:
            def jac(s, u):
                return dyn.jacobian_cartesian_pointmass(s, u, self.ast, self.sc)
        controls = self.control_sample(4, 2)
        return dyn.growth_bounds(
            self.f_tilde, lower, upper, controls, jac=jac,
            n_samples=n_samples, seed=seed,
        )
