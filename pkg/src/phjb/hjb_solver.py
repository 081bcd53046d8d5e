"""Level-set march for the constrained reachability value function.

The value function omega(kappa, r; z1, t_f) satisfies an obstacle-form
Hamilton-Jacobi equation on pseudo-time kappa in [0, 1]:

    min( d_kappa omega + H_hat(r, grad omega),  omega - g ) = 0
    omega(1, r) = max( -m - z1, nu(r), g(r) )

marched backward from kappa = 1 with WENO5 one-sided gradients, a
Lax-Friedrichs numerical Hamiltonian with per-dimension dissipation, and
third-order TVD Runge-Kutta stages; the obstacle projection
omega <- max(omega, g) and the frozen-region overwrite (omega = g outside
the admissible corridor) are applied after every stage.  omega(0, r) <= 0
exactly when the transfer objectives (z1, t_f) are achievable from r.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import GHOST, Grid
from .hamiltonian import dissipation_bounds
from .statespace import Problem


class SolverNumericalError(RuntimeError):
    """March produced non-finite values or violated its step bound."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.6
    diagnostics_every: int = 1
    max_steps: int = 500_000
    history_stride: int = 0  # 0 disables kappa-history capture

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.diagnostics_every < 1 or self.max_steps < 1:
            raise ValueError("diagnostics_every and max_steps must be >= 1")


@dataclass(frozen=True)
class ValueField:
    grid: Grid
    values: np.ndarray  # shaped like the grid
    z1: float
    t_f: float
    kappa: float = 0.0


@dataclass(frozen=True)
class SliceProblem:
    """Scenario-level fields shared by every (z1, t_f) slice."""

    problem: Problem
    grid: Grid
    coast: np.ndarray  # (D, P) control-free drift
    gain: np.ndarray  # (P,) T_max/m
    g: np.ndarray  # (P,)
    nu: np.ndarray  # (P,)
    frozen: np.ndarray  # (P,) bool
    alphas_unit: np.ndarray  # (D,) per-unit-time dissipation bounds
    thrust_mask: np.ndarray  # (D,) bool


def build_slice_problem(problem: Problem, grid: Grid) -> SliceProblem:
    problem.check_grid(grid)
    coast = problem.coast_fields(grid)
    mask = np.zeros(problem.ndim, dtype=np.bool_)
    for d in problem.thrust_dims:
        mask[d] = True
    alphas = dissipation_bounds(
        np.abs(coast).max(axis=1), mask, problem.mass_dim, 1.0, problem.sc,
        problem.ccfg.m_min,
    )
    return SliceProblem(
        problem=problem,
        grid=grid,
        coast=coast,
        gain=problem.thrust_gain_field(grid),
        g=problem.g_field(grid),
        nu=problem.nu_field(grid),
        frozen=problem.frozen_mask(grid),
        alphas_unit=alphas,
        thrust_mask=mask,
    )


def terminal_condition(sp: SliceProblem, z1: float) -> np.ndarray:
    """Flat terminal data max(-m - z1, nu, g) with the frozen overwrite."""
    mass = np.ascontiguousarray(
        np.broadcast_to(sp.grid.meshes()[sp.problem.mass_dim], sp.grid.shape)
    ).ravel()
    w = np.maximum(np.maximum(-mass - z1, sp.nu), sp.g)
    w[sp.frozen] = sp.g[sp.frozen]
    return w


def weno_gradients(grid: Grid, values_flat: np.ndarray):
    """One-sided WENO5 gradients; returns (d_minus, d_plus), each (D, P)."""
    shape = grid.shape
    vals = values_flat.reshape(shape)
    dm = np.empty((grid.ndim, values_flat.size))
    dp = np.empty((grid.ndim, values_flat.size))
    for d in range(grid.ndim):
        ext = grid.extend(vals, d)
        moved = np.moveaxis(ext, d, -1)
        lines = np.ascontiguousarray(moved).reshape(-1, shape[d] + 2 * GHOST)
        lm, lp = kernels.weno5_lines(lines, grid.spacing[d])
        back = moved.shape[:-1] + (shape[d],)
        dm[d] = np.moveaxis(lm.reshape(back), -1, d).ravel()
        dp[d] = np.moveaxis(lp.reshape(back), -1, d).ravel()
    return dm, dp


def lax_friedrichs_rhs(sp: SliceProblem, dm, dp, t_f: float) -> np.ndarray:
    """Numerical Hamiltonian with dissipation; equals H_hat when dm == dp."""
    return kernels.lf_rhs(
        np.ascontiguousarray(dm),
        np.ascontiguousarray(dp),
        sp.coast,
        sp.gain,
        sp.thrust_mask,
        sp.problem.mass_dim,
        sp.problem.sc.t_max / sp.problem.sc.v_exhaust,
        sp.alphas_unit,
        t_f,
    )


def obstacle_step(values: np.ndarray, sp: SliceProblem) -> np.ndarray:
    """Project onto the obstacle and pin the frozen region to g."""
    out = np.maximum(values, sp.g)
    out[sp.frozen] = sp.g[sp.frozen]
    return out


@dataclass
class MarchResult:
    field: ValueField
    n_steps: int
    diagnostics: list = field(default_factory=list)  # (step, kappa, max_change, dt)
    history_kappas: np.ndarray | None = None
    history_fields: list | None = None

    def history_at(self, kappa: float) -> np.ndarray:
        """Linear interpolation between stored kappa levels (flat array)."""
        ks = self.history_kappas
        if ks is None:
            raise ValueError("march was run without history capture")
        kappa = min(max(kappa, ks[0]), ks[-1])
        j = int(np.searchsorted(ks, kappa))
        if j == 0:
            return self.history_fields[0].copy()
        t = (kappa - ks[j - 1]) / (ks[j] - ks[j - 1])
        return (1.0 - t) * self.history_fields[j - 1] + t * self.history_fields[j]


def march(
    sp: SliceProblem, z1: float, t_f: float, cfg: SolverConfig = SolverConfig()
) -> MarchResult:
    """Backward march from kappa = 1 to 0 for one (z1, t_f) slice."""
    if t_f < 0.0:
        raise ValueError("t_f must be non-negative")
    grid = sp.grid
    w = obstacle_step(terminal_condition(sp, z1), sp)
    speed = sum(
        t_f * sp.alphas_unit[d] / grid.spacing[d] for d in range(grid.ndim)
    )
    capture = cfg.history_stride > 0
    hk: list[float] = []
    hf: list[np.ndarray] = []
    diagnostics: list[tuple[int, float, float, float]] = []
    if capture:
        hk.append(1.0)
        hf.append(w.copy())
    if speed <= 0.0:
        # t_f = 0: no dynamics, the terminal data is the exact solution
        res = MarchResult(
            field=ValueField(grid, w.reshape(grid.shape), z1, t_f), n_steps=0
        )
        if capture:
            res.history_kappas = np.array([0.0, 1.0])
            res.history_fields = [w.copy(), w]
        return res
    n_steps = int(math.ceil(speed / cfg.cfl))
    if n_steps > cfg.max_steps:
        raise SolverNumericalError(
            f"march needs {n_steps} steps, above max_steps={cfg.max_steps}"
        )
    dt = 1.0 / n_steps
    if dt * speed > 1.0 + 1.0e-12:
        raise SolverNumericalError(f"CFL violation: dt*speed = {dt * speed}")

    def stage(v):
        dm, dp = weno_gradients(grid, v)
        return v - dt * lax_friedrichs_rhs(sp, dm, dp, t_f)

    for n in range(n_steps):
        w1 = obstacle_step(stage(w), sp)
        w2 = obstacle_step(0.75 * w + 0.25 * stage(w1), sp)
        w_new = obstacle_step(w / 3.0 + (2.0 / 3.0) * stage(w2), sp)
        # integer ratio so the final level is exactly kappa = 0
        kappa = (n_steps - (n + 1)) / n_steps
        max_change = float(np.max(np.abs(w_new - w)))
        w = w_new
        last = n == n_steps - 1
        if (n + 1) % cfg.diagnostics_every == 0 or last:
            diagnostics.append((n + 1, kappa, max_change, dt))
            if not np.isfinite(w).all():
                raise SolverNumericalError(
                    f"non-finite values at step {n + 1}", diagnostics
                )
        if capture and ((n + 1) % cfg.history_stride == 0 or last):
            hk.append(kappa)
            hf.append(w.copy())
    res = MarchResult(
        field=ValueField(grid, w.reshape(grid.shape), z1, t_f),
        n_steps=n_steps,
        diagnostics=diagnostics,
    )
    if capture:
        order = np.argsort(hk)
        res.history_kappas = np.asarray(hk)[order]
        res.history_fields = [hf[i] for i in order]
    return res


def auto_history_stride(sp: SliceProblem, t_f: float, cfg: SolverConfig,
                        max_levels: int = 150) -> int:
    """Stride that keeps the stored kappa-history at or below max_levels."""
    speed = sum(
        t_f * sp.alphas_unit[d] / sp.grid.spacing[d] for d in range(sp.grid.ndim)
    )
    n_steps = max(1, int(math.ceil(speed / cfg.cfl)))
    return max(1, int(math.ceil(n_steps / max_levels)))


@dataclass(frozen=True)
class SliceOutcome:
    z1: float
    t_f: float
    status: str  # "ok" or "failed: ..."
    n_steps: int = 0
    final_max_change: float = float("nan")
    field: ValueField | None = None
    diagnostics: tuple = ()


def enforce_z1_ordering(outcomes: list[SliceOutcome]) -> None:
    """Make the solved fields elementwise non-increasing along ascending z1.

    A tighter final-mass demand (smaller z1) can only raise the value
    function, and the exact solution satisfies that ordering.  The
    high-order reconstruction is not order-preserving, so scattered
    violations of a fraction of a cell appear, away from the zero level.
    This projects them out conservatively: walking from the most permissive
    z1 downward, each stricter field is raised to the running elementwise
    maximum.  Values only ever increase, so no state gains feasibility.
    """
    groups: dict[float, list[SliceOutcome]] = {}
    for o in outcomes:
        if o.status == "ok" and o.field is not None:
            groups.setdefault(o.t_f, []).append(o)
    for group in groups.values():
        group.sort(key=lambda o: o.z1, reverse=True)
        for prev, cur in zip(group, group[1:]):
            np.maximum(cur.field.values, prev.field.values,
                       out=cur.field.values)


def solve_all(
    problem: Problem,
    grid: Grid,
    z1_schedule,
    t_f_schedule,
    cfg: SolverConfig = SolverConfig(),
    threads: int = 1,
) -> list[SliceOutcome]:
    """March every (z1, t_f) slice; failures are isolated per slice.

    Slices are independent, so they run on a thread pool (the hot kernels
    release the GIL); each slice is internally sequential and the returned
    list follows schedule order regardless of thread count.  After all
    marches finish the fields are passed through enforce_z1_ordering, a
    deterministic post-pass, so the persisted table is monotone in z1.
    """
    sp = build_slice_problem(problem, grid)
    jobs = [(z1, tf) for z1 in z1_schedule for tf in t_f_schedule]
    if threads == 0:
        threads = min(len(jobs), os.cpu_count() or 1)

    def run(job):
        z1, tf = job
        try:
            res = march(sp, z1, tf, cfg)
        except SolverNumericalError as e:
            return SliceOutcome(z1, tf, f"failed: {e}")
        last = res.diagnostics[-1][2] if res.diagnostics else 0.0
        return SliceOutcome(
            z1, tf, "ok", res.n_steps, last, res.field, tuple(res.diagnostics)
        )

    if threads <= 1:
        outcomes = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, jobs))
    enforce_z1_ordering(outcomes)
    return outcomes
