"""Scenario files: a JSON description of one solve campaign.

A scenario pins down the problem physics, the grid, the budget schedules,
and the numeric configs in one hashable document, so that snapshots and
CSV outputs can be traced back to the exact inputs that produced them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constraints import ConstraintConfig, TargetConfig
from .dynamics import AsteroidParams, Harmonics, SpacecraftParams
from .grid import Grid
from .hjb_solver import SolverConfig
from .pareto import FrontConfig
from .statespace import MODES, Problem, ToyBox, _MODE_LAYOUT
from .trajectory import TrajectoryConfig

SCHEMA = "pareto-hjb/1"


class ScenarioError(ValueError):
    """Raised with all accumulated validation problems, one per line."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    problem: Problem
    grid: Grid
    z1_schedule: np.ndarray
    t_f_schedule: np.ndarray
    solver: SolverConfig
    pareto: FrontConfig
    reconstruction: TrajectoryConfig
    r0: np.ndarray
    raw: dict = field(repr=False)

    @property
    def canonical(self) -> str:
        return canonical_form(self.raw)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical.encode()).hexdigest()


def canonical_form(doc: dict) -> str:
    """Deterministic serialization: sorted keys, no whitespace variance.

    canonical_form(json.loads(canonical_form(d))) is a fixed point.
    """
    return json.dumps(doc, sort_keys=True, separators=(", ", ": "),
                      allow_nan=False)


def _num(doc, key, errors, where, lo=None, hi=None, default=None):
    val = doc.get(key, default)
    if val is None:
        errors.append(f"{where}: missing required number '{key}'")
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append(f"{where}.{key}: expected a number, got {type(val).__name__}")
        return None
    v = float(val)
    if lo is not None and v < lo:
        errors.append(f"{where}.{key}: {v} below minimum {lo}")
    if hi is not None and v > hi:
        errors.append(f"{where}.{key}: {v} above maximum {hi}")
    return v


def _numlist(doc, key, errors, where, length=None, ascending=False):
    val = doc.get(key)
    if not isinstance(val, list) or not val:
        errors.append(f"{where}: '{key}' must be a non-empty list")
        return None
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            errors.append(f"{where}.{key}[{i}]: expected a number")
            return None
        out.append(float(v))
    if length is not None and len(out) != length:
        errors.append(f"{where}.{key}: expected {length} entries, got {len(out)}")
        return None
    if ascending and any(b <= a for a, b in zip(out, out[1:])):
        errors.append(f"{where}.{key}: entries must be strictly ascending")
    return out


def _section(doc, key, errors, required=True):
    val = doc.get(key)
    if val is None:
        if required:
            errors.append(f"scenario: missing section '{key}'")
        return None
    if not isinstance(val, dict):
        errors.append(f"scenario.{key}: expected an object")
        return None
    return val


def load_scenario(path) -> Scenario:
    doc = json.loads(Path(path).read_text())
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario: top level must be a JSON object"])
    if doc.get("schema") != SCHEMA:
        errors.append(
            f"scenario.schema: expected '{SCHEMA}', got {doc.get('schema')!r}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        errors.append("scenario.name: must be a non-empty string")
        name = "unnamed"
    mode = doc.get("mode")
    if mode not in MODES:
        errors.append(f"scenario.mode: {mode!r} not one of {sorted(MODES)}")
        raise ScenarioError(errors)
    names, _, _, periodic = _MODE_LAYOUT[mode]
    ndim = len(names)

    ast = None
    if mode == "toy":
        if "asteroid" in doc and doc["asteroid"] is not None:
            errors.append("scenario.asteroid: must be absent or null in toy mode")
    else:
        sec = _section(doc, "asteroid", errors)
        if sec is not None:
            omega = _num(sec, "omega", errors, "asteroid")
            gm = _num(sec, "gm", errors, "asteroid", lo=0.0)
            harm = None
            hsec = sec.get("harmonics")
            if hsec is not None:
                if not isinstance(hsec, dict):
                    errors.append("asteroid.harmonics: expected an object or null")
                else:
                    c20 = _num(hsec, "c20", errors, "asteroid.harmonics")
                    c22 = _num(hsec, "c22", errors, "asteroid.harmonics")
                    rr = _num(hsec, "ref_radius", errors, "asteroid.harmonics",
                              lo=0.0)
                    if None not in (c20, c22, rr):
                        harm = Harmonics(c20=c20, c22=c22, ref_radius=rr)
            if None not in (omega, gm):
                try:
                    ast = AsteroidParams(omega=omega, gm=gm, harmonics=harm)
                except ValueError as exc:
                    errors.append(f"asteroid: {exc}")

    sc = None
    sec = _section(doc, "spacecraft", errors)
    if sec is not None:
        md = _num(sec, "m_dry", errors, "spacecraft", lo=0.0)
        mp = _num(sec, "m_propellant", errors, "spacecraft", lo=0.0)
        tm = _num(sec, "t_max", errors, "spacecraft", lo=0.0)
        ve = _num(sec, "v_exhaust", errors, "spacecraft", lo=0.0)
        if None not in (md, mp, tm, ve):
            try:
                sc = SpacecraftParams(m_dry=md, m_propellant=mp, t_max=tm,
                                      v_exhaust=ve)
            except ValueError as exc:
                errors.append(f"spacecraft: {exc}")

    ccfg = None
    sec = _section(doc, "constraints", errors)
    if sec is not None:
        kw = {}
        for k in ("rho_min", "rho_max", "m_min", "m_max"):
            kw[k] = _num(sec, k, errors, "constraints")
        for k in ("length_scale", "mass_scale", "velocity_scale"):
            if k in sec:
                kw[k] = _num(sec, k, errors, "constraints", lo=0.0)
        if None not in kw.values():
            try:
                ccfg = ConstraintConfig(**kw)
            except ValueError as exc:
                errors.append(f"constraints: {exc}")

    tgt = None
    sec = _section(doc, "target", errors)
    if sec is not None:
        rt = _numlist(sec, "r_target", errors, "target", length=ndim)
        eps = _num(sec, "epsilon", errors, "target", lo=0.0)
        wts = _numlist(sec, "weights", errors, "target", length=ndim)
        if None not in (rt, eps, wts):
            try:
                tgt = TargetConfig(r_target=tuple(rt), epsilon=eps,
                                   weights=tuple(wts))
            except ValueError as exc:
                errors.append(f"target: {exc}")

    toy_box = None
    if mode == "toy":
        sec = _section(doc, "toy_box", errors)
        if sec is not None:
            xb = [_num(sec, k, errors, "toy_box")
                  for k in ("x_min", "x_max", "v_min", "v_max")]
            if None not in xb:
                try:
                    toy_box = ToyBox(*xb)
                except ValueError as exc:
                    errors.append(f"toy_box: {exc}")
    elif "toy_box" in doc and doc["toy_box"] is not None:
        errors.append("scenario.toy_box: only valid in toy mode")

    grid = None
    sec = _section(doc, "grid", errors)
    if sec is not None:
        lower = _numlist(sec, "lower", errors, "grid", length=ndim)
        upper = _numlist(sec, "upper", errors, "grid", length=ndim)
        counts = sec.get("counts")
        if (not isinstance(counts, list) or len(counts) != ndim
                or any(isinstance(c, bool) or not isinstance(c, int)
                       or c < 7 for c in counts)):
            errors.append(f"grid.counts: expected {ndim} integers >= 7")
            counts = None
        if None not in (lower, upper, counts):
            glower = list(lower)
            gupper = list(upper)
            for d in range(ndim):
                if periodic[d]:
                    # JSON upper means lower + period for periodic axes
                    h = (upper[d] - lower[d]) / counts[d]
                    gupper[d] = lower[d] + (counts[d] - 1) * h
                elif upper[d] <= lower[d]:
                    errors.append(f"grid: upper[{d}] must exceed lower[{d}]")
            try:
                grid = Grid(lower=tuple(glower), upper=tuple(gupper),
                            counts=tuple(counts), periodic=periodic)
            except ValueError as exc:
                errors.append(f"grid: {exc}")

    sched = _section(doc, "schedules", errors)
    z1s = tfs = None
    if sched is not None:
        z1s = _numlist(sched, "z1", errors, "schedules", ascending=True)
        tfs = _numlist(sched, "t_f", errors, "schedules", ascending=True)
        if tfs is not None and tfs[0] < 0.0:
            errors.append("schedules.t_f: entries must be non-negative")

    r0 = _numlist(doc, "r0", errors, "scenario", length=ndim)

    solver = SolverConfig()
    sec = _section(doc, "solver", errors, required=False)
    if sec is not None:
        kw = {}
        for k, lo in (("cfl", 0.0), ("max_steps", 1), ("diagnostics_every", 1),
                      ("history_stride", 0)):
            if k in sec:
                v = _num(sec, k, errors, "solver", lo=lo)
                if v is not None:
                    kw[k] = v if k == "cfl" else int(v)
        try:
            solver = SolverConfig(**kw)
        except ValueError as exc:
            errors.append(f"solver: {exc}")

    pareto = FrontConfig()
    sec = _section(doc, "pareto", errors, required=False)
    if sec is not None:
        kw = {}
        for k in ("n_rays", "n_scan"):
            if k in sec:
                v = _num(sec, k, errors, "pareto", lo=2)
                if v is not None:
                    kw[k] = int(v)
        for k in ("tau_tol_rel", "value_tol"):
            if k in sec:
                v = _num(sec, k, errors, "pareto", lo=0.0)
                if v is not None:
                    kw[k] = v
        if "objective_scales" in sec:
            v = _numlist(sec, "objective_scales", errors, "pareto", length=2)
            if v is not None:
                kw["objective_scales"] = tuple(v)
        pareto = FrontConfig(**kw)

    recon = TrajectoryConfig()
    sec = _section(doc, "reconstruction", errors, required=False)
    if sec is not None:
        kw = {}
        for k, lo in (("n_steps", 4), ("control_dirs", 2),
                      ("history_levels", 2)):
            if k in sec:
                v = _num(sec, k, errors, "reconstruction", lo=lo)
                if v is not None:
                    kw[k] = int(v)
        if "agree_tol_rel" in sec:
            v = _num(sec, "agree_tol_rel", errors, "reconstruction", lo=0.0)
            if v is not None:
                kw["agree_tol_rel"] = v
        recon = TrajectoryConfig(**kw)

    problem = None
    if not errors and sc is not None and ccfg is not None and tgt is not None:
        try:
            problem = Problem(mode=mode, ast=ast, sc=sc, ccfg=ccfg, tgt=tgt,
                              toy_box=toy_box)
        except ValueError as exc:
            errors.append(f"scenario: {exc}")
    if problem is not None and grid is not None:
        try:
            problem.check_grid(grid)
        except ValueError as exc:
            errors.append(f"grid: {exc}")

    if errors:
        raise ScenarioError(errors)
    return Scenario(
        name=name,
        mode=mode,
        problem=problem,
        grid=grid,
        z1_schedule=np.asarray(z1s, dtype=float),
        t_f_schedule=np.asarray(tfs, dtype=float),
        solver=solver,
        pareto=pareto,
        reconstruction=recon,
        r0=np.asarray(r0, dtype=float),
        raw=doc,
    )
