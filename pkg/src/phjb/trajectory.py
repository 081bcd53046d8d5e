"""Optimal trajectory reconstruction from the marched value function.

The march for the requested (z1, t_f) slice is rerun with kappa-history
capture; at each pseudo-time step the costate is estimated by central
differences of the (kappa-interpolated) value field, the control comes
from the closed-form Hamiltonian minimizer, and a literal one-step
lookahead minimization double-checks it: when the two disagree beyond
tolerance a warning is recorded and the lookahead minimizer is used.
States advance with a 4th-order Adams-Bashforth-Moulton
predictor-corrector bootstrapped by three RK4 steps, holding the control
constant over each step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridRangeError
from .hjb_solver import (
    MarchResult,
    SliceProblem,
    SolverConfig,
    auto_history_stride,
    march,
)
from .pareto import ObjectivePoint
from .statespace import Problem


@dataclass(frozen=True)
class TrajectoryConfig:
    n_steps: int = 400
    control_dirs: int = 16  # lookahead direction sample density
    agree_tol_rel: float = 0.05
    history_levels: int = 150

    def __post_init__(self):
        if self.n_steps < 8:
            raise ValueError("n_steps must be >= 8")


@dataclass
class Trajectory:
    t_f: float
    s: np.ndarray  # (N+1,) pseudo-time samples
    states: np.ndarray  # (N+1, D)
    controls: np.ndarray  # (N, C), constant over [s_k, s_{k+1})
    z: ObjectivePoint  # requested budgets
    achieved: ObjectivePoint
    flags: list[str] = field(default_factory=list)
    onoff_agree: int = 0  # steps where both control routes pick the same on/off
    onoff_total: int = 0
    warn_steps: int = 0  # lookahead overrides beyond tolerance

    @property
    def complete(self) -> bool:
        return self.states.shape[0] == self.s.size


def costate_estimate(grid: Grid, values_flat: np.ndarray, state) -> np.ndarray:
    """Gradient of the value field at a state by one-cell central differences.

    Probes that would leave the grid box fall back to one-sided
    differences from the interior side; linear fields are reproduced
    exactly either way.
    """
    state = np.asarray(state, dtype=float)
    vals = np.asarray(values_flat)
    q = np.empty(grid.ndim)
    for d in range(grid.ndim):
        h = grid.spacing[d]
        up = state.copy()
        dn = state.copy()
        up[d] += h
        dn[d] -= h
        can_up = grid.periodic[d] or up[d] <= grid.upper[d]
        can_dn = grid.periodic[d] or dn[d] >= grid.lower[d]
        if can_up and can_dn:
            q[d] = (grid.interp(vals, up) - grid.interp(vals, dn)) / (2.0 * h)
        elif can_up:
            q[d] = (grid.interp(vals, up) - grid.interp(vals, state)) / h
        elif can_dn:
            q[d] = (grid.interp(vals, state) - grid.interp(vals, dn)) / h
        else:
            raise GridRangeError(f"dim {d}: grid too narrow for gradient probes")
    return q


def control_select(
    sp: SliceProblem,
    w_next: np.ndarray,
    state: np.ndarray,
    q: np.ndarray,
    t_f: float,
    h: float,
    cfg: TrajectoryConfig = TrajectoryConfig(),
):
    """Closed-form control with a literal one-step DP verification.

    Returns (control, agree_onoff, warned).  The lookahead score of a
    candidate u is max(interp(w_next, r + h t_f f(r, u)), g(r)); the
    closed-form minimizer is accepted unless its score exceeds the
    sampled minimum beyond tolerance, in which case the sampled
    minimizer wins and the step is flagged.
    """
    problem = sp.problem
    u_a = problem.optimal_control(q, float(state[problem.mass_dim]))
    cands = problem.control_sample(cfg.control_dirs, 2)
    cands.append(u_a)
    g_here = problem.g_state(state)

    def score(u):
        dest = state + h * t_f * problem.f_tilde(state, u)
        try:
            w = float(sp.grid.interp(w_next, dest))
        except GridRangeError:
            return float("inf")
        return max(w, g_here)

    scores = [score(u) for u in cands]
    k = int(np.argmin(scores))
    s_best, s_a = scores[k], scores[-1]
    u_l = cands[k]
    tol = cfg.agree_tol_rel * (abs(s_best) + h * t_f * float(np.sum(sp.alphas_unit)))
    warned = s_a > s_best + tol
    chosen = u_l if warned else u_a
    on_a = float(np.linalg.norm(u_a)) > 0.0
    on_l = float(np.linalg.norm(u_l)) > 0.0
    return chosen, on_a == on_l, warned


def rk4_step(f, s: float, r: np.ndarray, h: float) -> np.ndarray:
    k1 = f(s, r)
    k2 = f(s + 0.5 * h, r + 0.5 * h * k1)
    k3 = f(s + 0.5 * h, r + 0.5 * h * k2)
    k4 = f(s + h, r + h * k3)
    return r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_abm4(f, r0: np.ndarray, n_steps: int) -> np.ndarray:
    """ABM4 predictor-corrector on s in [0, 1]; RK4 bootstraps 3 steps.

    f(s, r) must accept the running pseudo-time; returns (n_steps+1, D)
    states.
    """
    h = 1.0 / n_steps
    r = np.asarray(r0, dtype=float)
    out = np.empty((n_steps + 1, r.size))
    out[0] = r
    hist = [np.asarray(f(0.0, r))]
    for k in range(n_steps):
        s = k * h
        if k < 3:
            r = rk4_step(f, s, r, h)
            out[k + 1] = r
            hist.append(np.asarray(f(s + h, r)))
            continue
        fk, fk1, fk2, fk3 = hist[k], hist[k - 1], hist[k - 2], hist[k - 3]
        pred = r + (h / 24.0) * (55.0 * fk - 59.0 * fk1 + 37.0 * fk2 - 9.0 * fk3)
        fp = np.asarray(f(s + h, pred))
        r = r + (h / 24.0) * (9.0 * fp + 19.0 * fk - 5.0 * fk1 + 1.0 * fk2)
        out[k + 1] = r
        hist.append(np.asarray(f(s + h, r)))
    return out


def reconstruct(
    sp: SliceProblem,
    res: MarchResult,
    r0,
    z: ObjectivePoint,
    cfg: TrajectoryConfig = TrajectoryConfig(),
) -> Trajectory:
    """Rebuild the optimal state/control path for the slice marched in res."""
    if res.history_kappas is None:
        raise ValueError("reconstruction needs a march with history capture")
    problem = sp.problem
    t_f = res.field.t_f
    n = cfg.n_steps
    h = 1.0 / n
    D = problem.ndim
    states = [np.asarray(r0, dtype=float)]
    controls = []
    fhist: list[np.ndarray] = []
    flags: list[str] = []
    agree = total = warned_steps = 0
    r = states[0].copy()
    for k in range(n):
        s_k = k * h
        w_here = res.history_at(s_k)
        w_next = res.history_at(s_k + h)
        try:
            q = costate_estimate(sp.grid, w_here, r)
            u, ok, warned = control_select(sp, w_next, r, q, t_f, h, cfg)
        except GridRangeError:
            flags.append(f"grid-exit at s={s_k:.4f}")
            break
        total += 1
        agree += int(ok)
        warned_steps += int(warned)

        def fstep(_s, rr):
            return t_f * problem.f_tilde(rr, u)

        fk = fstep(s_k, r)
        if len(fhist) < 3:
            r_new = rk4_step(fstep, s_k, r, h)
        else:
            pred = r + (h / 24.0) * (
                55.0 * fk - 59.0 * fhist[-1] + 37.0 * fhist[-2] - 9.0 * fhist[-3]
            )
            fp = fstep(s_k + h, pred)
            r_new = r + (h / 24.0) * (
                9.0 * fp + 19.0 * fk - 5.0 * fhist[-1] + 1.0 * fhist[-2]
            )
        fhist.append(fk)
        controls.append(u)
        r = r_new
        states.append(r.copy())
        if not sp.grid.contains(r).all():
            flags.append(f"grid-exit at s={(k + 1) * h:.4f}")
            break
    states_arr = np.asarray(states)
    m_final = float(states_arr[-1, problem.mass_dim])
    achieved = ObjectivePoint(z1=-m_final, z2=t_f)
    if states_arr.shape[0] == n + 1 and problem.nu_state(states_arr[-1]) >= 0.0:
        flags.append("terminal state outside target set")
    traj = Trajectory(
        t_f=t_f,
        s=np.linspace(0.0, 1.0, n + 1),
        states=states_arr,
        controls=np.asarray(controls).reshape(len(controls), -1),
        z=z,
        achieved=achieved,
        flags=flags,
        onoff_agree=agree,
        onoff_total=total,
        warn_steps=warned_steps,
    )
    return traj


def reconstruct_from_problem(
    problem: Problem,
    sp: SliceProblem,
    r0,
    z: ObjectivePoint,
    t_f: float,
    solver_cfg: SolverConfig = SolverConfig(),
    cfg: TrajectoryConfig = TrajectoryConfig(),
) -> Trajectory:
    """March the (z1, t_f) slice with history and reconstruct in one call."""
    stride = auto_history_stride(sp, t_f, solver_cfg, cfg.history_levels)
    scfg = SolverConfig(
        cfl=solver_cfg.cfl,
        diagnostics_every=solver_cfg.diagnostics_every,
        max_steps=solver_cfg.max_steps,
        history_stride=stride,
    )
    res = march(sp, z.z1, t_f, scfg)
    return reconstruct(sp, res, r0, z, cfg)


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    max_g: float
    nu_final: float
    m_final: float
    mass_slack: float  # m_final - m_min
    objective_slack: tuple[float, float]  # z - achieved, per component
    onoff_agreement: float
    notes: tuple[str, ...]


def audit(
    traj: Trajectory,
    problem: Problem,
    tol_g: float,
    tol_obj: tuple[float, float] = (0.0, 0.0),
) -> AuditReport:
    """Admissibility audit: constraints along the path, target hit, budgets met."""
    notes = list(traj.flags)
    gvals = np.array([problem.g_state(s) for s in traj.states])
    max_g = float(gvals.max())
    nu_f = problem.nu_state(traj.states[-1])
    m_f = float(traj.states[-1, problem.mass_dim])
    ok = traj.complete
    if not traj.complete:
        notes.append("trajectory terminated before s = 1")
    if max_g > tol_g:
        ok = False
        notes.append(f"constraint violation: max g = {max_g:.3e} > {tol_g:.3e}")
    if nu_f >= 0.0:
        ok = False
        notes.append(f"final state outside target set: nu = {nu_f:.3e}")
    if m_f <= problem.ccfg.m_min - tol_g * problem.ccfg.mass_scale:
        ok = False
        notes.append(f"final mass {m_f} below floor {problem.ccfg.m_min}")
    slack = (
        traj.z.z1 - traj.achieved.z1 + tol_obj[0],
        traj.z.z2 - traj.achieved.z2 + tol_obj[1],
    )
    if slack[0] < 0.0 or slack[1] < 0.0:
        ok = False
        notes.append(f"objective budgets exceeded beyond tolerance: slack={slack}")
    agreement = traj.onoff_agree / traj.onoff_total if traj.onoff_total else 0.0
    return AuditReport(
        ok=ok,
        max_g=max_g,
        nu_final=float(nu_f),
        m_final=m_f,
        mass_slack=m_f - problem.ccfg.m_min,
        objective_slack=slack,
        onoff_agreement=agreement,
        notes=tuple(notes),
    )


def write_trajectory_csv(path, traj: Trajectory, problem: Problem) -> None:
    cols = (
        ["s", "t"]
        + list(problem.names)
        + [f"u{i}" for i in range(traj.controls.shape[1])]
        + ["g", "nu", "propellant_used"]
    )
    m0 = traj.states[0, problem.mass_dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for k in range(traj.states.shape[0]):
            if traj.controls.shape[0] == 0:
                u = np.zeros(0)
            else:
                u = traj.controls[min(k, traj.controls.shape[0] - 1)]
            row = (
                [traj.s[k], traj.s[k] * traj.t_f]
                + list(traj.states[k])
                + list(u)
                + [
                    problem.g_state(traj.states[k]),
                    problem.nu_state(traj.states[k]),
                    m0 - traj.states[k, problem.mass_dim],
                ]
            )
            w.writerow([repr(float(v)) for v in row])


def write_thrust_glyphs(path, traj: Trajectory, problem: Problem) -> None:
    """Per-step thrust arrows: pseudo-time, position slots, direction, throttle."""
    tm = problem.sc.t_max
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        ndir = len(problem.thrust_dims)
        w.writerow(
            ["s", "t"]
            + [problem.names[d] for d in range(problem.ndim) if d not in
               problem.thrust_dims and d != problem.mass_dim]
            + [f"dir_{i}" for i in range(ndir)]
            + ["throttle"]
        )
        for k in range(traj.controls.shape[0]):
            u = traj.controls[k]
            if problem.mode == "toy":
                mag = abs(u[0])
                direction = [math.copysign(1.0, u[0]) if mag > 0 else 0.0]
            elif problem.mode in ("axisym", "planar"):
                mag = u[1]
                direction = [math.cos(u[0]), math.sin(u[0])] if mag > 0 else [0.0, 0.0]
            else:
                mag = float(np.linalg.norm(u))
                direction = list(u / mag) if mag > 0 else [0.0, 0.0, 0.0]
            pos = [
                traj.states[k, d]
                for d in range(problem.ndim)
                if d not in problem.thrust_dims and d != problem.mass_dim
            ]
            w.writerow(
                [repr(float(v)) for v in
                 [traj.s[k], traj.s[k] * traj.t_f] + pos + direction + [mag / tm]]
            )
