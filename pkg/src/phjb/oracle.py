"""Independent verification oracles built on a different discretization.

The oracle path never touches the WENO/Lax-Friedrichs march: it solves a
1-D double integrator with mass flow (the toy problem) by semi-Lagrangian
dynamic programming with multilinear interpolation, enumerates budget
feasibility over a (z1, t_f) lattice, and produces golden values that are
generated once, written with a config hash, and never hand-edited.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .constraints import ConstraintConfig, TargetConfig
from .dynamics import GrowthBounds, SpacecraftParams
from .grid import Grid
from .pareto import ObjectivePoint, dominance_filter
from .statespace import Problem, ToyBox
from .trajectory import rk4_step

BIG = kernels.BIG


@dataclass(frozen=True)
class ToyProblem:
    """Double integrator with propellant: state (x, v, m), control T in [-T, T].

    x'' = T/m, m' = -|T|/v_exhaust, box constraints on x and v, mass floor
    m_dry, target |x - target_center| <= target_half_width at final time.
    """

    x0: float = 1.0
    v0: float = 0.0
    m0: float = 1.0
    m_dry: float = 0.7
    m_prop: float = 0.3
    t_max: float = 1.0
    v_exhaust: float = 10.0
    x_min: float = -1.45
    x_max: float = 1.45
    v_min: float = -1.55
    v_max: float = 1.55
    target_center: float = 0.0
    target_half_width: float = 0.05

    @property
    def m_max(self) -> float:
        return self.m_dry + self.m_prop

    @property
    def r0(self) -> np.ndarray:
        return np.array([self.x0, self.v0, self.m0])

    def g(self, x, v, m):
        """Box-constraint surrogate, independent of the solver-side fields."""
        return np.maximum.reduce(
            np.broadcast_arrays(
                np.asarray(self.x_min - np.asarray(x), dtype=float),
                np.asarray(x, dtype=float) - self.x_max,
                self.v_min - np.asarray(v, dtype=float),
                np.asarray(v, dtype=float) - self.v_max,
                self.m_dry - np.asarray(m, dtype=float),
            )
        )

    def nu(self, x):
        return np.abs(np.asarray(x, dtype=float) - self.target_center) \
            - self.target_half_width

    def f(self, state, thrust: float) -> np.ndarray:
        x, v, m = state
        return np.array([v, thrust / m, -abs(thrust) / self.v_exhaust])

    def default_controls(self) -> np.ndarray:
        return np.array([-self.t_max, 0.0, self.t_max])

    def to_problem(self) -> Problem:
        """The same physics packaged for the solver-side machinery."""
        return Problem(
            mode="toy",
            ast=None,
            sc=SpacecraftParams(
                m_dry=self.m_dry,
                m_propellant=self.m_prop,
                t_max=self.t_max,
                v_exhaust=self.v_exhaust,
            ),
            ccfg=ConstraintConfig(
                rho_min=self.x_min,
                rho_max=self.x_max,
                m_min=self.m_dry,
                m_max=self.m_max,
            ),
            tgt=TargetConfig(
                r_target=(self.target_center, 0.0, self.m_max),
                epsilon=self.target_half_width,
                weights=(1.0, 0.0, 0.0),
            ),
            toy_box=ToyBox(self.x_min, self.x_max, self.v_min, self.v_max),
        )


@dataclass(frozen=True)
class DPResult:
    grid: Grid
    values: np.ndarray  # omega-like table at kappa = 0, grid-shaped
    z1: float
    t_f: float
    n_steps: int

    def feasible(self) -> np.ndarray:
        return self.values <= 0.0

    def value_at(self, state) -> float:
        return float(self.grid.interp(self.values, state))


def default_oracle_grid(
    prob: ToyProblem,
    nx: int = 73,
    nv: int = 75,
    nm: int = 37,
    pad_x: float = 0.3,
    pad_v: float = 0.3,
    pad_m: float = 0.06,
) -> Grid:
    """Constraint box plus a margin so clamped sweeps stay in g > 0 land."""
    return Grid(
        lower=(prob.x_min - pad_x, prob.v_min - pad_v, prob.m_dry - pad_m),
        upper=(prob.x_max + pad_x, prob.v_max + pad_v, prob.m_max),
        counts=(nx, nv, nm),
        periodic=(False, False, False),
    )


def dp_terminal(prob: ToyProblem, grid: Grid, z1: float) -> np.ndarray:
    x, v, m = grid.meshes()
    w = np.maximum.reduce(
        np.broadcast_arrays(-m - z1, prob.nu(x), prob.g(x, v, m))
    )
    return np.ascontiguousarray(w, dtype=float).ravel()


def dp_solve(
    prob: ToyProblem,
    grid: Grid,
    t_f: float,
    z1: float,
    n_steps: int = 200,
    controls: np.ndarray | None = None,
) -> DPResult:
    """Backward semi-Lagrangian sweep of the obstacle-form value recursion.

        w(kappa) = max( g, min_T w(kappa + h) at x + h t_f f(x, T) )

    Destinations outside the grid box are clamped to its edge, so the grid
    should extend past the constraint box (default_oracle_grid does this).
    The grid must be non-periodic 3-D (x, v, m).
    """
    if grid.ndim != 3 or any(grid.periodic):
        raise ValueError("toy DP needs a non-periodic (x, v, m) grid")
    if controls is None:
        controls = prob.default_controls()
    controls = np.asarray(controls, dtype=float)
    gx, gv, gm = grid.meshes()
    g = np.ascontiguousarray(
        np.broadcast_to(prob.g(gx, gv, gm), grid.shape), dtype=float
    ).ravel()
    w = np.maximum(dp_terminal(prob, grid, z1), g)
    shape = np.asarray(grid.shape, dtype=np.int64)
    lows = np.asarray(grid.lower, dtype=float)
    steps = np.asarray(grid.spacing, dtype=float)
    ht = t_f / n_steps
    for _ in range(n_steps):
        w = kernels.toy_dp_sweep(w, g, shape, lows, steps, ht, controls,
                                 prob.v_exhaust)
    return DPResult(grid, w.reshape(grid.shape), z1, t_f, n_steps)


def oracle_feasibility(
    prob: ToyProblem,
    grid: Grid,
    z1_schedule,
    t_f_schedule,
    n_steps: int = 200,
    controls: np.ndarray | None = None,
    r0=None,
) -> np.ndarray:
    """(n_z1, n_tf) boolean lattice: budget pair achievable from r0."""
    r0 = prob.r0 if r0 is None else np.asarray(r0, dtype=float)
    out = np.zeros((len(z1_schedule), len(t_f_schedule)), dtype=bool)
    for i, z1 in enumerate(z1_schedule):
        for j, tf in enumerate(t_f_schedule):
            res = dp_solve(prob, grid, tf, z1, n_steps, controls)
            out[i, j] = res.value_at(r0) <= 0.0
    return out


def oracle_front(
    prob: ToyProblem,
    grid: Grid,
    z1_schedule,
    t_f_schedule,
    n_steps: int = 200,
    controls: np.ndarray | None = None,
    r0=None,
) -> list[ObjectivePoint]:
    """Dominance-filtered feasible budget pairs, sorted by time budget."""
    feas = oracle_feasibility(prob, grid, z1_schedule, t_f_schedule, n_steps,
                              controls, r0)
    pts = [
        ObjectivePoint(float(z1_schedule[i]), float(t_f_schedule[j]))
        for i in range(feas.shape[0])
        for j in range(feas.shape[1])
        if feas[i, j]
    ]
    keep = dominance_filter(pts)
    return sorted(keep, key=lambda p: (p.z2, p.z1))


def oracle_min_time(
    prob: ToyProblem,
    grid: Grid,
    z1: float,
    t_lo: float,
    t_hi: float,
    tol: float = 2.0e-3,
    n_steps: int = 200,
    controls: np.ndarray | None = None,
    r0=None,
) -> float:
    """Bisect the smallest feasible t_f at the given mass budget."""
    r0 = prob.r0 if r0 is None else np.asarray(r0, dtype=float)

    def feasible(tf):
        return dp_solve(prob, grid, tf, z1, n_steps, controls).value_at(r0) <= 0.0

    if feasible(t_lo):
        return t_lo
    if not feasible(t_hi):
        raise ValueError(f"not feasible even at t_f = {t_hi}")
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if feasible(mid):
            t_hi = mid
        else:
            t_lo = mid
    return t_hi


def divergence_check(
    prob: ToyProblem,
    bounds: GrowthBounds,
    t_f: float,
    n_pairs: int = 1000,
    n_policy_intervals: int = 8,
    n_int_steps: int = 256,
    seed: int = 0,
    pair_scale: float = 0.05,
):
    """Trajectory divergence against the flow Lipschitz bound L_tf.

    Integrates pairs of nearby starts under a shared random bang-off
    policy and returns (worst observed ratio sup_s |dr(s)|/|dr0|, bound).
    """
    rng = np.random.default_rng(seed)
    l_tf = bounds.l_tf(t_f)
    lo = np.array([prob.x_min, prob.v_min, prob.m_dry])
    hi = np.array([prob.x_max, prob.v_max, prob.m_max])
    h = 1.0 / n_int_steps
    worst = 0.0
    for _ in range(n_pairs):
        a = lo + rng.random(3) * (hi - lo)
        b = a + pair_scale * (2.0 * rng.random(3) - 1.0) * (hi - lo)
        b = np.clip(b, lo, hi)
        d0 = float(np.linalg.norm(a - b))
        if d0 == 0.0:
            continue
        policy = rng.choice([-prob.t_max, 0.0, prob.t_max], n_policy_intervals)
        ra, rb = a.copy(), b.copy()
        for k in range(n_int_steps):
            T = policy[min(int(k * n_policy_intervals / n_int_steps),
                           n_policy_intervals - 1)]

            def fs(_s, r):
                # mass floor guard keeps the pair integrable under any policy
                return t_f * prob.f(np.maximum(r, [-np.inf, -np.inf, 0.5 * prob.m_dry]),
                                    T)

            ra = rk4_step(fs, k * h, ra, h)
            rb = rk4_step(fs, k * h, rb, h)
            worst = max(worst, float(np.linalg.norm(ra - rb)) / d0)
    return worst, l_tf


# ---------------------------------------------------------------------------
# Golden files
# ---------------------------------------------------------------------------

def config_hash(obj) -> str:
    """Stable short hash of a JSON-serializable configuration."""

    def canon(o):
        if isinstance(o, dict):
            return {k: canon(v) for k, v in sorted(o.items())}
        if isinstance(o, (list, tuple)):
            return [canon(v) for v in o]
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        return o

    blob = json.dumps(canon(obj), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def toy_config_dict(prob: ToyProblem, grid: Grid, n_steps: int, controls) -> dict:
    return {
        "problem": asdict(prob),
        "grid": {
            "lower": list(grid.lower),
            "upper": list(grid.upper),
            "counts": list(grid.counts),
        },
        "n_steps": n_steps,
        "controls": [float(c) for c in np.asarray(controls)],
    }


def write_golden(path, cfg_hash: str, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def read_golden(path) -> tuple[str, list[dict]]:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# config_hash="):
        raise ValueError(f"{path}: missing config hash header")
    h = text[0].split("=", 1)[1].strip()
    rows = list(csv.DictReader(text[1:]))
    return h, [{k: float(v) for k, v in r.items()} for r in rows]
