"""Costate probes, the ABM4 integrator, control selection, and the audit."""

import csv

import numpy as np
import pytest

from phjb.grid import Grid
from phjb.hjb_solver import SolverConfig, build_slice_problem, march
from phjb.oracle import ToyProblem
from phjb.pareto import ObjectivePoint
from phjb.trajectory import (
    Trajectory,
    TrajectoryConfig,
    audit,
    control_select,
    costate_estimate,
    integrate_abm4,
    reconstruct_from_problem,
    rk4_step,
    write_trajectory_csv,
)

TP = ToyProblem()
PROB = TP.to_problem()


def _grid(counts=(25, 25, 9)):
    return Grid((TP.x_min, TP.v_min, TP.m_dry), (TP.x_max, TP.v_max, TP.m_max),
                counts, (False, False, False))


# ---------------------------------------------------------------------------
# costate probes
# ---------------------------------------------------------------------------

def test_costate_exact_on_linear_fields():
    g = _grid()
    a = np.array([0.7, -1.3, 2.1])
    pts = np.stack(np.meshgrid(*[g.axis(d) for d in range(3)], indexing="ij"), -1)
    vals = (pts @ a + 0.4).ravel()
    # interior point: central differences
    q = costate_estimate(g, vals, np.array([0.3, -0.2, 0.85]))
    assert np.allclose(q, a, rtol=0.0, atol=1e-10)
    # corner point: one-sided differences, still exact for linear data
    q = costate_estimate(g, vals, np.array([TP.x_min, TP.v_min, TP.m_dry]))
    assert np.allclose(q, a, rtol=0.0, atol=1e-10)


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------

def test_rk4_step_is_fifth_order_locally():
    f = lambda s, r: r
    errs = []
    for h in (0.1, 0.05):
        r1 = rk4_step(f, 0.0, np.array([1.0]), h)
        errs.append(abs(float(r1[0]) - np.exp(h)))
    assert errs[0] / errs[1] > 24.0  # local error ~ h^5 gives ratio 32


def test_abm4_fourth_order_on_logistic():
    # r' = r(1 - r), closed form r(s) = r0 e^s / (1 + r0(e^s - 1))
    f = lambda s, r: r * (1.0 - r)
    r0 = np.array([0.1])

    def exact(s):
        return 0.1 * np.exp(s) / (1.0 + 0.1 * (np.exp(s) - 1.0))

    errs = []
    for n in (25, 50):
        path = integrate_abm4(f, r0, n)
        errs.append(abs(float(path[-1, 0]) - exact(1.0)))
    assert errs[0] / errs[1] >= 12.0, errs


def test_abm4_shape_and_initial_state():
    f = lambda s, r: np.array([1.0, -1.0])
    path = integrate_abm4(f, np.array([2.0, 3.0]), 10)
    assert path.shape == (11, 2)
    assert np.array_equal(path[0], [2.0, 3.0])
    # linear flow integrated exactly
    assert np.allclose(path[-1], [3.0, 2.0], rtol=0.0, atol=1e-13)


# ---------------------------------------------------------------------------
# control selection
# ---------------------------------------------------------------------------

def test_control_select_agrees_on_clear_descent():
    g = _grid()
    sp = build_slice_problem(PROB, g)
    # value field = v: both routes must brake (push v down)
    pts = np.stack(np.meshgrid(*[g.axis(d) for d in range(3)], indexing="ij"), -1)
    w_next = pts[..., 1].ravel().copy()
    state = np.array([0.0, 0.5, 0.9])
    q = costate_estimate(g, w_next, state)
    u, agree_onoff, warned = control_select(sp, w_next, state, q, 1.0, 0.01)
    assert float(u[0]) == -1.0
    assert agree_onoff and not warned


def test_trajectory_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(n_steps=4)


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

def _mk_traj(states, z, t_f=1.5):
    states = np.asarray(states, dtype=float)
    n = states.shape[0] - 1
    return Trajectory(
        t_f=t_f,
        s=np.linspace(0.0, 1.0, n + 1),
        states=states,
        controls=np.zeros((n, 1)),
        z=z,
        achieved=ObjectivePoint(z1=-float(states[-1, 2]), z2=t_f),
        onoff_agree=n,
        onoff_total=n,
    )


def test_audit_passes_clean_path():
    traj = _mk_traj([[0.5, 0.0, 1.0], [0.2, -0.1, 0.95], [0.0, 0.0, 0.9]],
                    ObjectivePoint(-0.85, 1.5))
    rep = audit(traj, PROB, tol_g=0.05)
    assert rep.ok and rep.notes == ()
    assert rep.onoff_agreement == 1.0
    assert rep.m_final == 0.9
    assert rep.mass_slack == pytest.approx(0.2)


def test_audit_flags_constraint_violation():
    traj = _mk_traj([[0.5, 0.0, 1.0], [1.6, 0.0, 0.95], [0.0, 0.0, 0.9]],
                    ObjectivePoint(-0.85, 1.5))
    rep = audit(traj, PROB, tol_g=0.05)
    assert not rep.ok
    assert any("constraint violation" in n for n in rep.notes)


def test_audit_flags_target_miss():
    traj = _mk_traj([[0.5, 0.0, 1.0], [0.4, -0.1, 0.95], [0.3, 0.0, 0.9]],
                    ObjectivePoint(-0.85, 1.5))
    rep = audit(traj, PROB, tol_g=0.05)
    assert not rep.ok
    assert rep.nu_final >= 0.0
    assert any("outside target set" in n for n in rep.notes)


def test_audit_flags_budget_overrun():
    traj = _mk_traj([[0.5, 0.0, 1.0], [0.2, -0.1, 0.9], [0.0, 0.0, 0.8]],
                    ObjectivePoint(-0.85, 1.5))
    rep = audit(traj, PROB, tol_g=0.05)
    # achieved z1 = -0.8 > requested -0.85: too much propellant burned
    assert not rep.ok
    assert rep.objective_slack[0] < 0.0
    assert any("budgets exceeded" in n for n in rep.notes)


def test_audit_budget_tolerance_restores_ok():
    traj = _mk_traj([[0.5, 0.0, 1.0], [0.2, -0.1, 0.9], [0.0, 0.0, 0.8]],
                    ObjectivePoint(-0.85, 1.5))
    rep = audit(traj, PROB, tol_g=0.05, tol_obj=(0.06, 0.0))
    assert rep.ok


# ---------------------------------------------------------------------------
# end-to-end reconstruction on a coarse slice
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def coarse_reconstruction():
    sp = build_slice_problem(PROB, _grid())
    traj = reconstruct_from_problem(
        PROB, sp, np.array([0.5, 0.0, 1.0]), ObjectivePoint(-0.85, 1.5), 1.5,
        SolverConfig(cfl=0.6), TrajectoryConfig(n_steps=200),
    )
    return traj


def test_reconstruction_completes_and_audits(coarse_reconstruction):
    traj = coarse_reconstruction
    assert traj.complete and traj.flags == []
    rep = audit(traj, PROB, tol_g=0.1, tol_obj=(0.05, 0.1))
    assert rep.ok, rep.notes
    assert rep.nu_final < 0.0
    assert traj.achieved.z1 <= -0.85 + 0.05


def test_reconstruction_mass_bookkeeping(coarse_reconstruction):
    traj = coarse_reconstruction
    dm = np.diff(traj.states[:, 2])
    h_burn = (traj.t_f / 200) * TP.t_max / TP.v_exhaust
    # multistep corrector may overshoot a switch by a fraction of one step's burn
    assert dm.max() <= 0.5 * h_burn
    burned = traj.states[0, 2] - traj.states[-1, 2]
    on_steps = int((np.abs(traj.controls[:, 0]) > 0.0).sum())
    assert burned == pytest.approx(on_steps * h_burn, rel=0.2)


def test_trajectory_csv_schema(coarse_reconstruction, tmp_path):
    p = tmp_path / "traj.csv"
    write_trajectory_csv(p, coarse_reconstruction, PROB)
    with open(p, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["s", "t", "x", "v", "m", "u0", "g", "nu",
                             "propellant_used"]
    assert len(rows) == 201
    assert float(rows[0]["propellant_used"]) == 0.0
    last = rows[-1]
    assert float(last["t"]) == pytest.approx(1.5)
    used = float(rows[0]["m"]) - float(last["m"])
    assert float(last["propellant_used"]) == pytest.approx(used, abs=1e-12)
    assert float(last["nu"]) < 0.0
