"""Shared fixtures: solved value tables and reference artifacts.

Session-scoped fixtures hold the expensive solves (toy trade-off table,
fine dynamic-programming reference, corridor table) so tests share them
read-only.  Build wall times are recorded on each bundle because the
runtime budgets in the acceptance tests count the full pipeline cost,
fixture construction included.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

from pathlib import Path

import numpy as np
import pytest

from phjb import hjb_solver, oracle
from phjb.grid import Grid
from phjb.pareto import SnapshotTable
from phjb.scenario import Scenario, load_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = ROOT / "scenarios"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

# Slices marched on the fine sign-comparison grid.  One time budget,
# one tight and one loose mass budget, so the zero level sits in
# different regions of the box.
A2_COUNTS = (101, 101, 21)
A2_Z1S = (-0.925, -0.875)
A2_TFS = (2.8,)
A2_DP_STEPS = 300
A2_PAD_CELLS = 6

# Reference grid and sweep count for the frozen feasibility lattice.
LATTICE_GRID_COUNTS = (97, 99, 37)
LATTICE_DP_STEPS = 250


@dataclass
class TableBundle:
    scenario: Scenario
    table: SnapshotTable
    outcomes: list
    build_seconds: float


@dataclass
class A2Bundle:
    toy: oracle.ToyProblem
    grid: Grid
    outcomes: list
    dp: dict  # (z1, t_f) -> DPResult on the nested fine grid
    dp_grid: Grid
    build_seconds: float


@pytest.fixture(scope="session")
def warm_kernels():
    """Touch every jitted kernel once so compile time stays out of budgets."""
    t0 = time.monotonic()
    tp = oracle.ToyProblem()
    grid = Grid((-1.45, -1.55, 0.7), (1.45, 1.55, 1.0), (9, 9, 7),
                (False, False, False))
    sp = hjb_solver.build_slice_problem(tp.to_problem(), grid)
    hjb_solver.march(sp, -0.9, 0.2, hjb_solver.SolverConfig(cfl=0.6))
    oracle.dp_solve(tp, oracle.default_oracle_grid(tp, 9, 9, 7), 0.2, -0.9,
                    n_steps=4)
    from phjb import kernels

    kernels.brute_hamiltonian_min(
        np.ones((2, 3)), np.zeros(2), np.full(2, 900.0), 19.6,
        np.linspace(0.0, np.pi, 5), np.linspace(-np.pi, np.pi, 5),
        np.linspace(0.0, 1.0e-4, 3),
    )
    return time.monotonic() - t0


def _solve_table(scen: Scenario) -> TableBundle:
    t0 = time.monotonic()
    outs = hjb_solver.solve_all(
        scen.problem, scen.grid, scen.z1_schedule, scen.t_f_schedule,
        scen.solver, threads=1,
    )
    bad = [o for o in outs if o.status != "ok"]
    assert not bad, f"slices failed: {[(o.z1, o.t_f, o.status) for o in bad]}"
    fields = {(o.z1, o.t_f): o.field.values for o in outs}
    table = SnapshotTable(scen.grid, scen.problem, fields)
    return TableBundle(scen, table, outs, time.monotonic() - t0)


@pytest.fixture(scope="session")
def toy_scenario() -> Scenario:
    return load_scenario(SCENARIO_DIR / "toy.json")


@pytest.fixture(scope="session")
def toy_table(toy_scenario, warm_kernels) -> TableBundle:
    return _solve_table(toy_scenario)


@pytest.fixture(scope="session")
def castalia_table(warm_kernels) -> TableBundle:
    return _solve_table(load_scenario(SCENARIO_DIR / "castalia_axisym.json"))


def nested_fine_grid(grid: Grid, pad_cells: int, pad_hi_mass: bool = False) -> Grid:
    """Halved spacing with the coarse nodes kept on the fine lattice.

    The box is extended by pad_cells fine cells per side (mass upper side
    only on request) so clamped sweep destinations land where g > 0.
    """
    lower, upper, counts = [], [], []
    for d in range(grid.ndim):
        h = grid.spacing[d] * 0.5
        n = 2 * (grid.counts[d] - 1) + 1
        lo = grid.lower[d] - pad_cells * h
        hi = grid.upper[d]
        n += pad_cells
        if d != grid.ndim - 1 or pad_hi_mass:
            hi += pad_cells * h
            n += pad_cells
        lower.append(lo)
        upper.append(hi)
        counts.append(n)
    return Grid(tuple(lower), tuple(upper), tuple(counts),
                (False,) * grid.ndim)


@pytest.fixture(scope="session")
def a2_artifacts(warm_kernels) -> A2Bundle:
    t0 = time.monotonic()
    tp = oracle.ToyProblem()
    grid = Grid(
        (tp.x_min, tp.v_min, tp.m_dry),
        (tp.x_max, tp.v_max, tp.m_max),
        A2_COUNTS,
        (False, False, False),
    )
    outs = hjb_solver.solve_all(
        tp.to_problem(), grid, A2_Z1S, A2_TFS,
        hjb_solver.SolverConfig(cfl=0.6), threads=1,
    )
    assert all(o.status == "ok" for o in outs)
    fine = nested_fine_grid(grid, A2_PAD_CELLS)
    dp = {}
    for z1 in A2_Z1S:
        for tf in A2_TFS:
            dp[(z1, tf)] = oracle.dp_solve(tp, fine, tf, z1, A2_DP_STEPS)
    return A2Bundle(tp, grid, outs, dp, fine, time.monotonic() - t0)


@pytest.fixture(scope="session")
def oracle_lattice(toy_scenario, warm_kernels):
    """Frozen feasibility lattice over the scheduled (z1, t_f) budgets.

    Regenerated only when the file is absent or PHJB_REGEN_GOLDEN=1; a
    configuration drift against the stored hash fails loudly instead of
    silently recomputing.
    """
    tp = oracle.ToyProblem()
    grid = oracle.default_oracle_grid(tp, *LATTICE_GRID_COUNTS)
    z1s = list(toy_scenario.z1_schedule)
    tfs = list(toy_scenario.t_f_schedule)
    cfg = oracle.toy_config_dict(tp, grid, LATTICE_DP_STEPS,
                                 tp.default_controls())
    cfg["z1_schedule"] = z1s
    cfg["t_f_schedule"] = tfs
    cfg["r0"] = [float(v) for v in tp.r0]
    want = oracle.config_hash(cfg)
    path = GOLDEN_DIR / "toy_oracle_lattice.csv"
    if not path.exists() or os.environ.get("PHJB_REGEN_GOLDEN") == "1":
        feas = oracle.oracle_feasibility(tp, grid, z1s, tfs, LATTICE_DP_STEPS)
        rows = [
            (z1s[i], tfs[j], float(feas[i, j]))
            for i in range(len(z1s))
            for j in range(len(tfs))
        ]
        GOLDEN_DIR.mkdir(exist_ok=True)
        oracle.write_golden(path, want, ["z1", "t_f", "feasible"], rows)
    have, rows = oracle.read_golden(path)
    if have != want:
        pytest.fail(
            f"{path.name}: config hash {have} != expected {want}; the toy "
            "problem, reference grid, or schedules changed.  Rerun with "
            "PHJB_REGEN_GOLDEN=1 to regenerate, then commit the new file."
        )
    return rows
