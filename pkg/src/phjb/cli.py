"""Command line front end.

Subcommands:
    solve   march every (z1, t_f) slice of a scenario, write snapshots
    front   sweep the trade-off front from solved snapshots
    traj    reconstruct one trajectory for a chosen budget pair
    verify  run the seeded self-check suites

Exit codes: 0 success, 2 bad input or scenario, 3 numerical failure,
4 infeasible request.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .hjb_solver import SolverNumericalError, build_slice_problem, solve_all
from .pareto import (
    FrontConfig,
    InfeasibleError,
    ObjectivePoint,
    ScheduleRangeError,
    SnapshotTable,
    sigma_front,
    write_front_csv,
)
from .scenario import ScenarioError, canonical_form, load_scenario
from .snapshot import (
    SnapshotFormatError,
    read_manifest,
    read_snapshot,
    sha256_file,
    write_manifest,
    write_snapshot,
)
from .trajectory import (
    audit,
    reconstruct_from_problem,
    write_thrust_glyphs,
    write_trajectory_csv,
)

OK, E_INPUT, E_NUMERIC, E_INFEASIBLE = 0, 2, 3, 4


def _fail(msg: str, code: int) -> int:
    print(msg, file=sys.stderr)
    return code


def _load(args):
    return load_scenario(args.scenario)


def _parse_floats(text: str, n: int, what: str) -> np.ndarray:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise ValueError(f"{what}: expected {n} numbers, got {len(parts)}")
    return np.array([float(p) for p in parts])


def _slice_name(i: int, j: int) -> str:
    return f"z{i:02d}_t{j:02d}"


def cmd_solve(args) -> int:
    scen = _load(args)
    out = Path(args.out)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    (out / "diagnostics").mkdir(parents=True, exist_ok=True)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("PHJB_THREADS", "1"))
    outcomes = solve_all(
        scen.problem, scen.grid, scen.z1_schedule, scen.t_f_schedule,
        scen.solver, threads=threads,
    )
    entries = []
    n_fail = 0
    ntf = scen.t_f_schedule.size
    for k, oc in enumerate(outcomes):
        i, j = divmod(k, ntf)
        name = _slice_name(i, j)
        entry = {"z1": oc.z1, "t_f": oc.t_f, "status": oc.status,
                 "n_steps": oc.n_steps}
        if oc.status == "ok":
            snap = out / "snapshots" / f"{name}.snap"
            write_snapshot(snap, oc.field)
            entry["file"] = f"snapshots/{name}.snap"
            entry["sha256"] = sha256_file(snap)
            with open(out / "diagnostics" / f"{name}.csv", "w",
                      newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["step", "kappa", "max_change", "dt"])
                w.writerows(oc.diagnostics)
        else:
            n_fail += 1
        entries.append(entry)
        print(f"slice z1={oc.z1:g} t_f={oc.t_f:g}: {oc.status} "
              f"({oc.n_steps} steps)")
    write_manifest(out / "manifest.json", scen.raw, entries)
    print(f"{len(entries) - n_fail}/{len(entries)} slices solved; "
          f"manifest at {out / 'manifest.json'}")
    if n_fail:
        return _fail(f"{n_fail} slice(s) failed", E_NUMERIC)
    return OK


def _load_table(scen, snapdir: Path) -> SnapshotTable:
    man = read_manifest(snapdir / "manifest.json")
    if canonical_form(man["scenario"]) != scen.canonical:
        raise SnapshotFormatError(
            "manifest was produced from a different scenario; "
            "re-run solve or pass the matching scenario file"
        )
    fields = {}
    for entry in man["snapshots"]:
        if entry["status"] != "ok":
            raise SnapshotFormatError(
                f"slice z1={entry['z1']} t_f={entry['t_f']} is marked "
                f"'{entry['status']}' in the manifest; the table needs "
                "every slice"
            )
        path = snapdir / entry["file"]
        if sha256_file(path) != entry["sha256"]:
            raise SnapshotFormatError(f"{path}: checksum mismatch")
        fld = read_snapshot(path, periodic=scen.problem.periodic)
        fields[(fld.z1, fld.t_f)] = fld.values
    return SnapshotTable(scen.grid, scen.problem, fields)


def _plot_front(path, front, utop) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    z2 = [s.z.z2 for s in front.front]
    z1 = [s.z.z1 for s in front.front]
    ax.plot(z2, z1, "o-", ms=4, label="non-dominated endpoints")
    ax.plot([utop.z2], [utop.z1], "r*", ms=12, label="utopian point")
    ax.set_xlabel("transfer time budget z2")
    ax.set_ylabel("negative final mass z1")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_front(args) -> int:
    scen = _load(args)
    table = _load_table(scen, Path(args.snapshots))
    cfg = scen.pareto
    if args.rays is not None:
        cfg = replace(cfg, n_rays=args.rays)
    r0 = scen.r0
    if args.r0 is not None:
        r0 = _parse_floats(args.r0, scen.problem.ndim, "--r0")
    front = sigma_front(table, r0, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_front_csv(out / "front.csv", front)
    with open(out / "rays.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mu1", "theta", "z1", "z2", "t_f_argmin",
                    "vartheta_residual", "feasible"])
        for s in front.samples:
            w.writerow([repr(s.mu[0]), repr(s.theta), repr(s.z.z1),
                        repr(s.z.z2), repr(s.t_f_argmin), repr(s.residual),
                        int(s.feasible)])
    utop = front.utopian
    (out / "utopian.json").write_text(json.dumps(
        {"z1": utop.z1, "z2": utop.z2}, indent=2) + "\n")
    _plot_front(out / "front.svg", front, utop)
    print(f"utopian: z1*={utop.z1:.6g} z2*={utop.z2:.6g}")
    print(f"{len(front.front)} non-dominated endpoints from "
          f"{len(front.samples)} rays; wrote {out / 'front.csv'}")
    return OK


def cmd_traj(args) -> int:
    scen = _load(args)
    table = _load_table(scen, Path(args.snapshots))
    z = ObjectivePoint(*_parse_floats(args.z, 2, "--z"))
    r0 = scen.r0
    if args.r0 is not None:
        r0 = _parse_floats(args.r0, scen.problem.ndim, "--r0")
    val, t_star = table.vartheta(r0, z)
    if val > 0.0:
        return _fail(
            f"budget pair z=({z.z1:g}, {z.z2:g}) is infeasible from this "
            f"start state (value {val:.3e} > 0)", E_INFEASIBLE)
    cfg = scen.reconstruction
    if args.steps is not None:
        cfg = replace(cfg, n_steps=args.steps)
    sp = build_slice_problem(scen.problem, scen.grid)
    traj = reconstruct_from_problem(scen.problem, sp, r0, z, t_star,
                                    scen.solver, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", traj, scen.problem)
    write_thrust_glyphs(out / "glyphs.csv", traj, scen.problem)
    tol_g = 2.0 * scen.problem.ccfg.lipschitz * max(scen.grid.spacing)
    tol_obj = (tol_g, tol_g * max(1.0, t_star))
    rep = audit(traj, scen.problem, tol_g, tol_obj)
    (out / "audit.json").write_text(json.dumps(asdict(rep), indent=2) + "\n")
    print(f"t_f = {traj.t_f:.6g}, achieved (z1, z2) = "
          f"({traj.achieved.z1:.6g}, {traj.achieved.z2:.6g})")
    print(f"on/off agreement {rep.onoff_agreement:.1%}; "
          f"max g {rep.max_g:.3e}; final nu {rep.nu_final:.3e}")
    for note in rep.notes:
        print("note:", note)
    print(f"wrote {out / 'trajectory.csv'}")
    if not rep.ok:
        return _fail("trajectory audit failed", E_NUMERIC)
    return OK


def cmd_verify(args) -> int:
    try:
        n_pass, n_fail, lines = verify_mod.run(args.suite, seed=args.seed)
    except KeyError:
        avail = ", ".join(sorted(verify_mod.SUITES) + ["all"])
        return _fail(f"unknown suite '{args.suite}'; available: {avail}",
                     E_INPUT)
    for name, ok, detail in lines:
        tag = "PASS" if ok else "FAIL"
        print(f"{tag} {name}" + (f" ({detail})" if detail else ""))
    print(f"{n_pass} passed, {n_fail} failed")
    return OK if n_fail == 0 else E_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phjb",
        description="Pareto trade-off solver for low-thrust transfers",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="march all scheduled value slices")
    ps.add_argument("--scenario", required=True)
    ps.add_argument("--out", required=True)
    ps.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: PHJB_THREADS or 1; "
                         "0 = one per slice up to the CPU count)")
    ps.set_defaults(func=cmd_solve)

    pf = sub.add_parser("front", help="extract the trade-off front")
    pf.add_argument("--scenario", required=True)
    pf.add_argument("--snapshots", required=True,
                    help="output directory of a previous solve")
    pf.add_argument("--out", required=True)
    pf.add_argument("--rays", type=int, default=None)
    pf.add_argument("--r0", default=None,
                    help="start state override, comma separated")
    pf.set_defaults(func=cmd_front)

    pt = sub.add_parser("traj", help="reconstruct one optimal trajectory")
    pt.add_argument("--scenario", required=True)
    pt.add_argument("--snapshots", required=True)
    pt.add_argument("--z", required=True,
                    help="budget pair 'z1,z2' to realize")
    pt.add_argument("--r0", default=None)
    pt.add_argument("--steps", type=int, default=None)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_traj)

    pv = sub.add_parser("verify", help="run seeded self-check suites")
    pv.add_argument("--suite", default="all")
    pv.add_argument("--seed", type=int, default=0)
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        return _fail(f"invalid scenario:\n{exc}", E_INPUT)
    except (SnapshotFormatError, ScheduleRangeError, ValueError) as exc:
        return _fail(str(exc), E_INPUT)
    except FileNotFoundError as exc:
        return _fail(f"missing file: {exc.filename}", E_INPUT)
    except InfeasibleError as exc:
        return _fail(str(exc), E_INFEASIBLE)
    except SolverNumericalError as exc:
        return _fail(f"numerical failure: {exc}", E_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
