"""Seeded self-check batteries runnable without any scenario input.

Each suite draws randomized cases from a seeded generator and checks
structural identities that hold for every valid input: constraint
Lipschitz bounds, coordinate-frame consistency of the dynamics, the
closed-form control optimality identity, and dominance-filter laws.
"""

from __future__ import annotations

import numpy as np

from . import dynamics as dyn
from .constraints import ConstraintConfig, TargetConfig, g_rho_m, nu_weighted
from .hamiltonian import hamiltonian, hamiltonian_direct, optimal_angles
from .pareto import ObjectivePoint, dominance_filter


class CheckFailure(AssertionError):
    pass


def _check(lines, name, ok, detail=""):
    lines.append((name, bool(ok), detail))


def suite_constraints(seed: int = 0, n: int = 200):
    rng = np.random.default_rng(seed)
    lines = []
    worst_lip = 0.0
    worst_sign = True
    for _ in range(n):
        lo = rng.uniform(0.1, 5.0)
        hi = lo + rng.uniform(0.1, 5.0)
        mlo = rng.uniform(0.1, 3.0)
        mhi = mlo + rng.uniform(0.1, 3.0)
        cfg = ConstraintConfig(
            rho_min=lo, rho_max=hi, m_min=mlo, m_max=mhi,
            length_scale=rng.uniform(0.2, 4.0),
            mass_scale=rng.uniform(0.2, 4.0),
        )
        a = (rng.uniform(lo - 1, hi + 1), rng.uniform(mlo - 1, mhi + 1))
        b = (rng.uniform(lo - 1, hi + 1), rng.uniform(mlo - 1, mhi + 1))
        ga, gb = g_rho_m(*a, cfg), g_rho_m(*b, cfg)
        step = max(abs(a[0] - b[0]), abs(a[1] - b[1]))
        if step > 0:
            worst_lip = max(worst_lip, abs(ga - gb) / (cfg.lipschitz * step))
        inside = lo <= a[0] <= hi and mlo <= a[1]
        if inside != (ga <= 1.0e-12):
            worst_sign = False
    _check(lines, "g Lipschitz bound", worst_lip <= 1.0 + 1.0e-9,
           f"worst ratio {worst_lip:.6f}")
    _check(lines, "g sign matches box membership", worst_sign)

    ok_nu = True
    for _ in range(n):
        k = rng.integers(2, 6)
        w = rng.uniform(0.0, 2.0, k)
        w[rng.integers(0, k)] = rng.uniform(0.5, 2.0)
        eps = rng.uniform(0.05, 1.0)
        tgt = TargetConfig(r_target=tuple(np.zeros(k)), epsilon=eps,
                           weights=tuple(w))
        d = rng.normal(0.0, 1.0, k)
        val = nu_weighted(d, np.asarray(tgt.weights), eps)
        member = np.linalg.norm(np.asarray(w) * d) <= eps
        if member != (val <= 1.0e-12):
            ok_nu = False
    _check(lines, "nu sign matches weighted ellipsoid", ok_nu)
    return lines


def suite_dynamics(seed: int = 0, n: int = 150):
    rng = np.random.default_rng(seed)
    lines = []
    ast = dyn.AsteroidParams(
        omega=4.2883e-4, gm=9.40477e-8,
        harmonics=dyn.Harmonics(c20=-7.275e-2, c22=2.984e-2, ref_radius=0.543),
    )
    sc = dyn.SpacecraftParams(m_dry=400.0, m_propellant=600.2, t_max=1.0e-4,
                              v_exhaust=19.6)

    worst_frame = 0.0
    for _ in range(n):
        rho = rng.uniform(0.6, 12.0)
        theta = rng.uniform(-np.pi, np.pi)
        psi = rng.uniform(-1.2, 1.2)
        vel = rng.normal(0.0, 2.0e-3, 3)
        m = rng.uniform(sc.m_dry, sc.m_max)
        alpha = rng.uniform(-np.pi, np.pi)
        delta = rng.uniform(-np.pi, np.pi)
        T = rng.uniform(0.0, sc.t_max)
        s_sph = np.array([rho, theta, psi, *vel, m])
        u = dyn.ControlSpherical(alpha=alpha, delta=delta, thrust=T)
        f_s = dyn.f_tilde_spherical(s_sph, u, ast, sc)
        s_car = dyn.spherical_to_cartesian(s_sph)
        e_r, e_t, e_p = dyn.spherical_basis(theta, psi)
        u_vec = T * (
            np.cos(alpha) * e_r
            + np.sin(alpha) * np.sin(delta) * e_t
            + np.sin(alpha) * np.cos(delta) * e_p
        )
        f_c = dyn.f_tilde_cartesian(s_car, u_vec, ast, sc)
        h = 1.0e-2
        adv_s = s_sph[:6] + h * f_s[:6]
        adv_c = s_car[:6] + h * f_c[:6]
        err = np.linalg.norm(
            dyn.spherical_to_cartesian(np.append(adv_s, m))[:6] - adv_c
        ) / h
        worst_frame = max(worst_frame, err)
    _check(lines, "spherical/cartesian flow consistency",
           worst_frame < 1.0e-4, f"worst first-order defect {worst_frame:.3e}")

    worst_grad = 0.0
    for _ in range(n):
        rho = rng.uniform(0.6, 12.0)
        theta = rng.uniform(-np.pi, np.pi)
        psi = rng.uniform(-1.2, 1.2)
        ar, at, ap = dyn.gravity_sph(rho, psi, theta, ast, 0.3)
        h = 1.0e-6

        def U(rr, pp, tt):
            return dyn.gravity_potential(rr, pp, tt, ast)

        fr = (U(rho + h, psi, theta) - U(rho - h, psi, theta)) / (2 * h)
        fp = (U(rho, psi + h, theta) - U(rho, psi - h, theta)) / (2 * h * rho)
        ft = (U(rho, psi, theta + h) - U(rho, psi, theta - h)) / (
            2 * h * rho * np.cos(psi))
        scale = max(abs(ar), abs(at), abs(ap), 1.0e-12)
        worst_grad = max(
            worst_grad,
            max(abs(fr - ar), abs(fp - ap), abs(ft - at)) / scale,
        )
    _check(lines, "gravity equals potential gradient",
           worst_grad < 1.0e-5, f"worst relative defect {worst_grad:.3e}")
    return lines


def suite_hamiltonian(seed: int = 0, n: int = 500):
    rng = np.random.default_rng(seed)
    lines = []
    worst_id = 0.0
    worst_opt = 0.0
    for _ in range(n):
        q = rng.normal(0.0, 1.0, 3) * 10.0 ** rng.integers(-6, 3)
        alpha, delta = optimal_angles(q)
        Q = np.linalg.norm(q)
        lhs = q[0] * np.cos(alpha) + np.sin(alpha) * (
            q[1] * np.sin(delta) + q[2] * np.cos(delta))
        worst_id = max(worst_id, abs(lhs + Q) / max(Q, 1.0e-30))
        for _ in range(8):
            a2 = rng.uniform(-np.pi, np.pi)
            d2 = rng.uniform(-np.pi, np.pi)
            other = q[0] * np.cos(a2) + np.sin(a2) * (
                q[1] * np.sin(d2) + q[2] * np.cos(d2))
            worst_opt = max(worst_opt, (lhs - other) / max(Q, 1.0e-30))
    _check(lines, "direction identity q.d(alpha,delta) = -|q|",
           worst_id < 1.0e-12, f"worst {worst_id:.3e}")
    _check(lines, "closed-form direction is the minimizer",
           worst_opt <= 1.0e-12, f"worst excess {worst_opt:.3e}")

    ast = dyn.AsteroidParams(omega=4.2883e-4, gm=9.40477e-8, harmonics=None)
    sc = dyn.SpacecraftParams(m_dry=400.0, m_propellant=600.2, t_max=1.0e-4,
                              v_exhaust=19.6)
    worst_h = 0.0
    for _ in range(100):
        state = np.array([
            rng.uniform(2.0, 10.0), rng.uniform(-np.pi, np.pi),
            rng.uniform(-1.0, 1.0), *rng.normal(0.0, 2.0e-3, 3),
            rng.uniform(sc.m_dry + 1.0, sc.m_max),
        ])
        qc = rng.normal(0.0, 1.0, 7)
        t_f = rng.uniform(10.0, 5.0e4)
        hopt = hamiltonian(state, t_f, qc, ast, sc)
        for _ in range(6):
            u = dyn.ControlSpherical(
                alpha=rng.uniform(-np.pi, np.pi),
                delta=rng.uniform(-np.pi, np.pi),
                thrust=rng.uniform(0.0, sc.t_max),
            )
            direct = hamiltonian_direct(state, t_f, qc, u, ast, sc)
            worst_h = max(worst_h, direct - hopt)
    _check(lines, "explicit controls never beat the optimized Hamiltonian",
           worst_h <= 1.0e-9, f"worst excess {worst_h:.3e}")
    return lines


def suite_pareto(seed: int = 0, n: int = 60):
    rng = np.random.default_rng(seed)
    lines = []
    ok_mutual = ok_cover = ok_idem = True
    for _ in range(n):
        pts = [
            ObjectivePoint(float(a), float(b))
            for a, b in rng.integers(0, 12, (rng.integers(2, 40), 2))
        ]
        keep = dominance_filter(pts)
        for p in keep:
            for q in keep:
                if (q.z1 <= p.z1 and q.z2 <= p.z2) and (q.z1 < p.z1 or q.z2 < p.z2):
                    ok_mutual = False
        for p in pts:
            if p in keep:
                continue
            if not any(
                q.z1 <= p.z1 and q.z2 <= p.z2 and (q.z1 < p.z1 or q.z2 < p.z2)
                for q in keep
            ):
                ok_cover = False
        if dominance_filter(list(keep)) != keep:
            ok_idem = False
    _check(lines, "kept points mutually non-dominated", ok_mutual)
    _check(lines, "every dropped point is dominated by a kept one", ok_cover)
    _check(lines, "filter is idempotent", ok_idem)
    return lines


SUITES = {
    "constraints": suite_constraints,
    "dynamics": suite_dynamics,
    "hamiltonian": suite_hamiltonian,
    "pareto": suite_pareto,
}


def run(suite: str = "all", seed: int = 0):
    """Run one suite (or all); returns (n_pass, n_fail, result lines)."""
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise KeyError(suite)
    lines = []
    for name in names:
        for check, ok, detail in SUITES[name](seed):
            lines.append((f"{name}: {check}", ok, detail))
    n_pass = sum(1 for _, ok, _ in lines if ok)
    return n_pass, len(lines) - n_pass, lines
