"""Mass/time trade-off extraction from solved value-function slices.

Feasibility of an objective budget z = (z1, z2) from a start state r0 is
encoded by

    vartheta(r0, z) = min over the t_f schedule of
                      max( omega(0, r0; z1, t_f), t_f - z2 )

which is non-positive exactly when some solved transfer meets both
budgets.  The Pareto surface is swept by rays from the utopian point
z* = (-m_max, z2*): along direction mu (simplex weights) the scalar

    Theta(mu) = inf { tau >= 0 : vartheta(r0, z* + mu tau) <= 0 }

is found by bracketing and bisection (vartheta is non-increasing along
any non-negative direction), and the front is the dominance-filtered set
of ray endpoints.  Rays are sampled uniformly in a normalized objective
space (per-axis scales default to the schedule spans); the recorded mu
and Theta are the raw simplex quantities, so z = z* + mu Theta holds
exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridRangeError
from .statespace import Problem

BIG = 1.0e30


class InfeasibleError(RuntimeError):
    """No solved slice is feasible from the queried start state."""


class ScheduleRangeError(ValueError):
    """Queried z1 lies outside the solved z1 schedule."""


@dataclass(frozen=True)
class ObjectivePoint:
    z1: float  # -final mass [kg]
    z2: float  # transfer-time budget [s]


@dataclass(frozen=True)
class UtopianPoint:
    z1: float
    z2: float


@dataclass(frozen=True)
class RaySample:
    mu: tuple[float, float]  # raw simplex weights, mu1 + mu2 = 1
    theta: float  # ray length to feasibility; inf marks an infeasible ray
    z: ObjectivePoint
    t_f_argmin: float
    residual: float  # vartheta at the returned point

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.theta)


@dataclass(frozen=True)
class ParetoFront:
    utopian: UtopianPoint
    samples: tuple[RaySample, ...]  # every swept ray, infeasible ones included
    front: tuple[RaySample, ...]  # dominance-filtered feasible endpoints


@dataclass(frozen=True)
class FrontConfig:
    n_rays: int = 64
    n_scan: int = 64
    tau_tol_rel: float = 1.0e-3
    value_tol: float = 1.0e-6
    objective_scales: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n_rays < 2 or self.n_scan < 2:
            raise ValueError("n_rays and n_scan must be >= 2")
        if self.tau_tol_rel <= 0.0 or self.value_tol < 0.0:
            raise ValueError("tolerances must be positive")


class SnapshotTable:
    """omega(0, r; z1, t_f) evaluated over the solved (z1, t_f) schedules."""

    def __init__(self, grid: Grid, problem: Problem, fields: dict):
        """fields maps (z1, t_f) to a grid-shaped omega(0) array."""
        self.grid = grid
        self.problem = problem
        self.z1s = np.array(sorted({k[0] for k in fields}))
        self.tfs = np.array(sorted({k[1] for k in fields}))
        self._stack = np.empty((self.z1s.size, self.tfs.size) + grid.shape)
        for i, z1 in enumerate(self.z1s):
            for j, tf in enumerate(self.tfs):
                key = (z1, tf)
                if key not in fields:
                    raise ValueError(f"missing slice {key}; schedules must be full")
                self._stack[i, j] = np.asarray(fields[key]).reshape(grid.shape)
        self._r0_cache: dict[bytes, np.ndarray] = {}

    def omega_at(self, r0) -> np.ndarray:
        """(n_z1, n_tf) table of state-interpolated omega(0) values."""
        r0 = np.asarray(r0, dtype=float)
        key = r0.tobytes()
        hit = self._r0_cache.get(key)
        if hit is not None:
            return hit
        tab = np.empty((self.z1s.size, self.tfs.size))
        for i in range(self.z1s.size):
            for j in range(self.tfs.size):
                tab[i, j] = self.grid.interp(self._stack[i, j], r0)
        self._r0_cache[key] = tab
        return tab

    def omega_row(self, r0, z1: float) -> np.ndarray:
        """omega(0) per t_f, linearly interpolated in z1 (strict range check)."""
        if not self.z1s[0] <= z1 <= self.z1s[-1]:
            raise ScheduleRangeError(
                f"z1={z1} outside solved schedule [{self.z1s[0]}, {self.z1s[-1]}]"
            )
        tab = self.omega_at(r0)
        out = np.empty(self.tfs.size)
        for j in range(self.tfs.size):
            out[j] = np.interp(z1, self.z1s, tab[:, j])
        return out

    def vartheta(self, r0, z: ObjectivePoint) -> tuple[float, float]:
        """(value, minimizing t_f); the argmin is refined by a 3-point parabola.

        The returned value is the exact minimum over the schedule, which
        keeps the monotonicity of the underlying value functions intact;
        the parabolic refinement only sharpens the reported t_f.
        """
        vals = np.maximum(self.omega_row(r0, z.z1), self.tfs - z.z2)
        j = int(np.argmin(vals))
        t_star = float(self.tfs[j])
        if 0 < j < self.tfs.size - 1:
            t_star = _parabola_argmin(
                self.tfs[j - 1], self.tfs[j], self.tfs[j + 1],
                vals[j - 1], vals[j], vals[j + 1],
            )
        t_star = max(min(t_star, z.z2), float(self.tfs[0]))
        return float(vals[j]), t_star

    def _vartheta_ray(self, r0, z1: float, z2: float) -> float:
        """vartheta for ray stepping: below-schedule z1 counts as infeasible."""
        if z1 < self.z1s[0]:
            return BIG
        z1 = min(z1, float(self.z1s[-1]))
        vals = np.maximum(self.omega_row(r0, z1), self.tfs - z2)
        return float(vals.min())


def _parabola_argmin(t0, t1, t2, v0, v1, v2) -> float:
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (v1 - v0) + t1 * (v0 - v2) + t0 * (v2 - v1)) / denom
    if a <= 0.0:
        return float(t1)
    b = (t2 * t2 * (v0 - v1) + t1 * t1 * (v2 - v0) + t0 * t0 * (v1 - v2)) / denom
    t = -b / (2.0 * a)
    return float(min(max(t, t0), t2))


def utopian(table: SnapshotTable, r0, cfg: FrontConfig = FrontConfig()) -> UtopianPoint:
    """Componentwise ideal objectives: exact mass bound and refined time bound.

    z1* = -m_max (no propellant spent).  z2* is the smallest feasible
    transfer time at the most permissive solved mass budget; infeasibility
    of every slice raises InfeasibleError.
    """
    z1_perm = float(table.z1s[-1])
    row = table.omega_row(r0, z1_perm)
    feas = np.nonzero(row <= 0.0)[0]
    if feas.size == 0:
        raise InfeasibleError(
            f"no admissible transfer from r0 at any solved (z1, t_f); "
            f"min omega = {row.min():.3e}"
        )
    j = int(feas[0])
    z2_star = float(table.tfs[j])
    if j > 0:
        # linear root between the last infeasible and first feasible times
        t0, t1 = table.tfs[j - 1], table.tfs[j]
        w0, w1 = row[j - 1], row[j]
        if w0 > 0.0 >= w1 and w0 != w1:
            z2_star = float(t0 + w0 * (t1 - t0) / (w0 - w1))
    return UtopianPoint(z1=-table.problem.sc.m_max, z2=z2_star)


def theta_ray(
    table: SnapshotTable,
    r0,
    mu_hat: float,
    utop: UtopianPoint,
    cfg: FrontConfig = FrontConfig(),
) -> RaySample:
    """Sweep one ray: mu_hat is the normalized mass weight in [0, 1]."""
    mu_hat = float(mu_hat)
    s1, s2 = _scales(table, cfg)
    d1, d2 = mu_hat * s1, (1.0 - mu_hat) * s2
    if d1 + d2 <= 0.0:
        raise ValueError("degenerate ray direction")
    mu1 = d1 / (d1 + d2)
    mu2 = d2 / (d1 + d2)
    z1_perm = float(table.z1s[-1])

    if mu1 == 0.0:
        # pure time ray: feasibility at the most permissive mass budget
        def val(tau):
            return table._vartheta_ray(r0, z1_perm, utop.z2 + tau)

        cap = max(float(table.tfs[-1]) - utop.z2, 0.0) + s2
    else:
        def val(tau):
            return table._vartheta_ray(r0, utop.z1 + mu1 * tau, utop.z2 + mu2 * tau)

        cap = (table.problem.sc.m_propellant - 1.0e-12) / mu1
        cap = min(cap, (z1_perm - utop.z1) / mu1)

    tau_tol = cfg.tau_tol_rel * cap
    taus = np.linspace(0.0, cap, cfg.n_scan)
    vals = np.array([val(t) for t in taus])
    hit = np.nonzero(vals <= 0.0)[0]
    if hit.size > 0:
        k = int(hit[0])
        theta = _bisect(val, taus, k, 0.0, tau_tol)
    else:
        k_soft = np.nonzero(vals <= cfg.value_tol)[0]
        if k_soft.size == 0:
            z = ObjectivePoint(utop.z1 + mu1 * cap, utop.z2 + mu2 * cap)
            return RaySample((mu1, mu2), float("inf"), z, float("nan"),
                             float(vals.min()))
        theta = _bisect(val, taus, int(k_soft[0]), cfg.value_tol, tau_tol)
    z1 = utop.z1 + mu1 * theta if mu1 > 0.0 else z1_perm
    z2 = utop.z2 + mu2 * theta
    value, t_star = table.vartheta(r0, ObjectivePoint(z1, z2))
    return RaySample((mu1, mu2), theta, ObjectivePoint(z1, z2), t_star, value)


def _bisect(val, taus, k, level, tau_tol) -> float:
    if k == 0:
        return 0.0
    lo, hi = float(taus[k - 1]), float(taus[k])
    while hi - lo > tau_tol:
        mid = 0.5 * (lo + hi)
        if val(mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def _scales(table: SnapshotTable, cfg: FrontConfig) -> tuple[float, float]:
    if cfg.objective_scales is not None:
        return cfg.objective_scales
    s1 = float(table.z1s[-1] - table.z1s[0])
    s2 = float(table.tfs[-1] - table.tfs[0])
    return (s1 if s1 > 0.0 else 1.0), (s2 if s2 > 0.0 else 1.0)


def sigma_front(
    table: SnapshotTable, r0, cfg: FrontConfig = FrontConfig()
) -> ParetoFront:
    """Sweep n_rays rays and dominance-filter the feasible endpoints."""
    utop = utopian(table, r0, cfg)
    samples = [
        theta_ray(table, r0, mu_hat, utop, cfg)
        for mu_hat in np.linspace(0.0, 1.0, cfg.n_rays)
    ]
    feas = [s for s in samples if s.feasible]
    keep = dominance_filter([s.z for s in feas])
    front = sorted(
        (s for s in feas if s.z in keep),
        key=lambda s: (s.z.z2, s.z.z1),
    )
    return ParetoFront(utop, tuple(samples), tuple(front))


def dominance_filter(points: list[ObjectivePoint]) -> set[ObjectivePoint]:
    """Non-dominated subset: p survives unless some q <= p with q != p.

    Duplicates of a surviving point all survive.  O(n^2) pairwise scan.
    """
    keep = set()
    for p in points:
        dominated = False
        for q in points:
            if (q.z1 <= p.z1 and q.z2 <= p.z2) and (q.z1 < p.z1 or q.z2 < p.z2):
                dominated = True
                break
        if not dominated:
            keep.add(p)
    return keep


FRONT_CSV_COLUMNS = ["mu1", "theta", "z1", "z2", "t_f_argmin", "vartheta_residual"]


def write_front_csv(path, front: ParetoFront) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FRONT_CSV_COLUMNS)
        for s in front.front:
            w.writerow(
                [
                    repr(float(s.mu[0])),
                    repr(float(s.theta)),
                    repr(float(s.z.z1)),
                    repr(float(s.z.z2)),
                    repr(float(s.t_f_argmin)),
                    repr(float(s.residual)),
                ]
            )


def read_front_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: float(v) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]
