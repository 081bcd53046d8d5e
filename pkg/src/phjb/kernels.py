"""Hot numerical kernels with twin numba / pure-numpy implementations.

Every public kernel exists in two arithmetically identical versions:
``*_numpy`` (vectorized numpy) and ``*_numba`` (compiled loops, present when
numba imports).  The unsuffixed names dispatch to the active backend chosen
in :mod:`phjb.backend`.  Arithmetic ordering is kept identical so the two
paths agree bitwise; the backend comparison tests assert exact equality.

Kernels:

- ``weno5_lines``: fifth-order WENO left/right biased first derivatives
  along the last axis of a batch of lines padded with 3 ghost values.
- ``lf_rhs``: Lax-Friedrichs numerical Hamiltonian for the level-set march.
- ``dp_step``: one semi-Lagrangian dynamic-programming sweep (oracle path).
- ``brute_hamiltonian_min``: dense control-grid minimization of the thrust
  part of q . f, used as the independent check of the closed-form optimum.
"""

from __future__ import annotations

import numpy as np

from .backend import BACKEND

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

BIG = 1.0e30  # stands in for +inf where 0*inf would poison interpolation

# WENO5 constants (smoothness indicator and candidate weights)
_C1312 = 13.0 / 12.0
_W1, _W2, _W3 = 0.1, 0.6, 0.3


# ---------------------------------------------------------------------------
# WENO5
# ---------------------------------------------------------------------------

def _weno5_combine_numpy(v1, v2, v3, v4, v5):
    # candidate stencils for phi_x
    p1 = v1 * (1.0 / 3.0) - v2 * (7.0 / 6.0) + v3 * (11.0 / 6.0)
    p2 = -v2 * (1.0 / 6.0) + v3 * (5.0 / 6.0) + v4 * (1.0 / 3.0)
    p3 = v3 * (1.0 / 3.0) + v4 * (5.0 / 6.0) - v5 * (1.0 / 6.0)
    a = v1 - 2.0 * v2 + v3
    b = v1 - 4.0 * v2 + 3.0 * v3
    s1 = _C1312 * (a * a) + 0.25 * (b * b)
    a = v2 - 2.0 * v3 + v4
    b = v2 - v4
    s2 = _C1312 * (a * a) + 0.25 * (b * b)
    a = v3 - 2.0 * v4 + v5
    b = 3.0 * v3 - 4.0 * v4 + v5
    s3 = _C1312 * (a * a) + 0.25 * (b * b)
    # scale-invariant regularization keeps weights meaningful across the
    # wildly different magnitudes of the state dimensions
    vmax = np.maximum(
        np.maximum(np.maximum(v1 * v1, v2 * v2), np.maximum(v3 * v3, v4 * v4)),
        v5 * v5,
    )
    eps = 1.0e-6 * vmax + 1.0e-99
    a1 = _W1 / ((s1 + eps) * (s1 + eps))
    a2 = _W2 / ((s2 + eps) * (s2 + eps))
    a3 = _W3 / ((s3 + eps) * (s3 + eps))
    asum = a1 + a2 + a3
    return (a1 * p1 + a2 * p2 + a3 * p3) / asum


def weno5_lines_numpy(fext: np.ndarray, dx: float):
    """Left/right biased WENO5 derivatives for lines with 3 ghost values per end.

    fext has shape (L, n + 6); returns (d_minus, d_plus), each (L, n).
    """
    d = (fext[:, 1:] - fext[:, :-1]) * (1.0 / dx)
    n = fext.shape[1] - 6
    dm = _weno5_combine_numpy(
        d[:, 0:n], d[:, 1:n + 1], d[:, 2:n + 2], d[:, 3:n + 3], d[:, 4:n + 4]
    )
    dp = _weno5_combine_numpy(
        d[:, 5:n + 5], d[:, 4:n + 4], d[:, 3:n + 3], d[:, 2:n + 2], d[:, 1:n + 1]
    )
    return dm, dp


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _weno5_combine_scalar(v1, v2, v3, v4, v5):
        p1 = v1 * (1.0 / 3.0) - v2 * (7.0 / 6.0) + v3 * (11.0 / 6.0)
        p2 = -v2 * (1.0 / 6.0) + v3 * (5.0 / 6.0) + v4 * (1.0 / 3.0)
        p3 = v3 * (1.0 / 3.0) + v4 * (5.0 / 6.0) - v5 * (1.0 / 6.0)
        a = v1 - 2.0 * v2 + v3
        b = v1 - 4.0 * v2 + 3.0 * v3
        s1 = _C1312 * (a * a) + 0.25 * (b * b)
        a = v2 - 2.0 * v3 + v4
        b = v2 - v4
        s2 = _C1312 * (a * a) + 0.25 * (b * b)
        a = v3 - 2.0 * v4 + v5
        b = 3.0 * v3 - 4.0 * v4 + v5
        s3 = _C1312 * (a * a) + 0.25 * (b * b)
        vmax = max(max(max(v1 * v1, v2 * v2), max(v3 * v3, v4 * v4)), v5 * v5)
        eps = 1.0e-6 * vmax + 1.0e-99
        a1 = _W1 / ((s1 + eps) * (s1 + eps))
        a2 = _W2 / ((s2 + eps) * (s2 + eps))
        a3 = _W3 / ((s3 + eps) * (s3 + eps))
        asum = a1 + a2 + a3
        return (a1 * p1 + a2 * p2 + a3 * p3) / asum

    @njit(cache=True, nogil=True)
    def weno5_lines_numba(fext, dx):
        L, ne = fext.shape
        n = ne - 6
        dm = np.empty((L, n))
        dp = np.empty((L, n))
        inv = 1.0 / dx
        for li in range(L):
            d = np.empty(ne - 1)
            for k in range(ne - 1):
                d[k] = (fext[li, k + 1] - fext[li, k]) * inv
            for i in range(n):
                dm[li, i] = _weno5_combine_scalar(
                    d[i], d[i + 1], d[i + 2], d[i + 3], d[i + 4]
                )
                dp[li, i] = _weno5_combine_scalar(
                    d[i + 5], d[i + 4], d[i + 3], d[i + 2], d[i + 1]
                )
        return dm, dp


# ---------------------------------------------------------------------------
# Lax-Friedrichs numerical Hamiltonian
# ---------------------------------------------------------------------------

def lf_rhs_numpy(dm, dp, coast, gain, thrust_mask, mass_dim, mcoef, alphas, tf):
    """LF Hamiltonian with per-dimension dissipation.

    dm, dp, coast: (D, P) stacks of one-sided gradients and control-free
    drift; gain: (P,) thrust acceleration bound T_max/m; thrust_mask: (D,)
    bool marking velocity slots; mcoef = T_max/v_exhaust; alphas: (D,)
    per-unit-time dissipation bounds.  Returns rhs (P,) such that the march
    update is w <- w - dt * rhs.
    """
    D, P = dm.shape
    adv = np.zeros(P)
    qn2 = np.zeros(P)
    diss = np.zeros(P)
    for d in range(D):
        qbar = (dm[d] + dp[d]) * 0.5
        adv = adv + qbar * coast[d]
        if thrust_mask[d]:
            qn2 = qn2 + qbar * qbar
        diss = diss + (tf * alphas[d]) * ((dp[d] - dm[d]) * 0.5)
    qmbar = (dm[mass_dim] + dp[mass_dim]) * 0.5
    sw = qmbar * mcoef + gain * np.sqrt(qn2)
    ham = tf * (np.maximum(sw, 0.0) - adv)
    return ham - diss


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def lf_rhs_numba(dm, dp, coast, gain, thrust_mask, mass_dim, mcoef, alphas, tf):
        D, P = dm.shape
        out = np.empty(P)
        for p in range(P):
            adv = 0.0
            qn2 = 0.0
            diss = 0.0
            for d in range(D):
                qbar = (dm[d, p] + dp[d, p]) * 0.5
                adv = adv + qbar * coast[d, p]
                if thrust_mask[d]:
                    qn2 = qn2 + qbar * qbar
                diss = diss + (tf * alphas[d]) * ((dp[d, p] - dm[d, p]) * 0.5)
            qmbar = (dm[mass_dim, p] + dp[mass_dim, p]) * 0.5
            sw = qmbar * mcoef + gain[p] * np.sqrt(qn2)
            pos = sw if sw > 0.0 else 0.0
            out[p] = tf * (pos - adv) - diss
        return out


# ---------------------------------------------------------------------------
# Semi-Lagrangian DP sweep for the toy problem (oracle discretization family)
# ---------------------------------------------------------------------------

def toy_dp_sweep_numpy(w, g, shape, lows, steps, ht, thrusts, vex):
    """One backward DP sweep: w_new = max(g, min_T interp(w, dest(p, T))).

    w, g: flat (P,) arrays over a (nx, nv, nm) grid of the toy state
    (x, v, m); ht is the physical step t_f * h.  Destinations leaving the
    grid box are clamped to its edge; pad the grid so the edge lies in
    g > 0 territory, then clamped paths stay positive and cannot fake
    feasibility.
    """
    nx, nv, nm = shape
    x_lo, v_lo, m_lo = lows
    dx, dv, dmm = steps
    idx = np.arange(w.size)
    i = idx // (nv * nm)
    j = (idx % (nv * nm)) // nm
    k = idx % nm
    x = x_lo + i * dx
    v = v_lo + j * dv
    m = m_lo + k * dmm
    vmin = np.full(w.size, BIG)
    for T in thrusts:
        tx = np.minimum(np.maximum((x + ht * v - x_lo) / dx, 0.0), nx - 1.0)
        tv = np.minimum(np.maximum((v + ht * T / m - v_lo) / dv, 0.0), nv - 1.0)
        tm = np.minimum(np.maximum((m - ht * abs(T) / vex - m_lo) / dmm, 0.0),
                        nm - 1.0)
        ix = np.minimum(tx.astype(np.int64), nx - 2)
        iv = np.minimum(tv.astype(np.int64), nv - 2)
        im = np.minimum(tm.astype(np.int64), nm - 2)
        fx = tx - ix
        fv = tv - iv
        fm = tm - im
        base = (ix * nv + iv) * nm + im
        sv = nm
        sx = nv * nm
        val = (
            w[base] * ((1.0 - fx) * (1.0 - fv) * (1.0 - fm))
            + w[base + 1] * ((1.0 - fx) * (1.0 - fv) * fm)
            + w[base + sv] * ((1.0 - fx) * fv * (1.0 - fm))
            + w[base + sv + 1] * ((1.0 - fx) * fv * fm)
            + w[base + sx] * (fx * (1.0 - fv) * (1.0 - fm))
            + w[base + sx + 1] * (fx * (1.0 - fv) * fm)
            + w[base + sx + sv] * (fx * fv * (1.0 - fm))
            + w[base + sx + sv + 1] * (fx * fv * fm)
        )
        vmin = np.minimum(vmin, val)
    return np.maximum(g, vmin)


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def toy_dp_sweep_numba(w, g, shape, lows, steps, ht, thrusts, vex):
        nx, nv, nm = shape
        x_lo, v_lo, m_lo = lows
        dx, dv, dmm = steps
        sv = nm
        sx = nv * nm
        out = np.empty_like(w)
        for p in range(w.size):
            i = p // sx
            j = (p % sx) // nm
            k = p % nm
            x = x_lo + i * dx
            v = v_lo + j * dv
            m = m_lo + k * dmm
            vmin = BIG
            for c in range(thrusts.size):
                T = thrusts[c]
                tx = min(max((x + ht * v - x_lo) / dx, 0.0), nx - 1.0)
                tv = min(max((v + ht * T / m - v_lo) / dv, 0.0), nv - 1.0)
                tm = min(max((m - ht * abs(T) / vex - m_lo) / dmm, 0.0),
                         nm - 1.0)
                ix = min(np.int64(tx), nx - 2)
                iv = min(np.int64(tv), nv - 2)
                im = min(np.int64(tm), nm - 2)
                fx = tx - ix
                fv = tv - iv
                fm = tm - im
                base = (ix * nv + iv) * nm + im
                val = (
                    w[base] * ((1.0 - fx) * (1.0 - fv) * (1.0 - fm))
                    + w[base + 1] * ((1.0 - fx) * (1.0 - fv) * fm)
                    + w[base + sv] * ((1.0 - fx) * fv * (1.0 - fm))
                    + w[base + sv + 1] * ((1.0 - fx) * fv * fm)
                    + w[base + sx] * (fx * (1.0 - fv) * (1.0 - fm))
                    + w[base + sx + 1] * (fx * (1.0 - fv) * fm)
                    + w[base + sx + sv] * (fx * fv * (1.0 - fm))
                    + w[base + sx + sv + 1] * (fx * fv * fm)
                )
                if val < vmin:
                    vmin = val
            out[p] = g[p] if g[p] > vmin else vmin
        return out


# ---------------------------------------------------------------------------
# Dense control-grid Hamiltonian minimization (closed-form cross-check)
# ---------------------------------------------------------------------------

def brute_hamiltonian_min_numpy(qv, qm, m, vex, alphas, deltas, thrusts):
    """min over the (alpha, delta, T) grid of q . (thrust part of f).

    qv: (N, 3) velocity-slot costates; qm: (N,) mass costates; m: (N,)
    masses.  Thrust enters as (T/m)(cos a, sin a sin d, sin a cos d) and
    -T/vex in the mass slot.  Returns (N,) grid minima.  T >= 0 scales the
    per-direction value monotonically, so the (alpha, delta) minimum is
    taken first; the result equals the full-grid enumeration.
    """
    ca, sa = np.cos(alphas), np.sin(alphas)
    sd, cd = np.sin(deltas), np.cos(deltas)
    out = np.empty(qv.shape[0])
    for i in range(qv.shape[0]):
        dirdot = qv[i, 0] * ca[:, None] + sa[:, None] * (
            qv[i, 1] * sd[None, :] + qv[i, 2] * cd[None, :]
        )
        coef = dirdot.min() / m[i] - qm[i] / vex
        best = BIG
        for T in thrusts:
            v = T * coef
            if v < best:
                best = v
        out[i] = best
    return out


if HAVE_NUMBA:

    @njit(cache=True, nogil=True, parallel=True)
    def brute_hamiltonian_min_numba(qv, qm, m, vex, alphas, deltas, thrusts):
        N = qv.shape[0]
        nA, nD, nT = alphas.size, deltas.size, thrusts.size
        ca = np.cos(alphas)
        sa = np.sin(alphas)
        sd = np.sin(deltas)
        cd = np.cos(deltas)
        out = np.empty(N)
        for i in prange(N):
            q3, q4, q5 = qv[i, 0], qv[i, 1], qv[i, 2]
            mi = m[i]
            qmi = qm[i]
            best = BIG
            for ia in range(nA):
                for idd in range(nD):
                    dirdot = q3 * ca[ia] + sa[ia] * (q4 * sd[idd] + q5 * cd[idd])
                    coef = dirdot / mi - qmi / vex
                    for it in range(nT):
                        v = thrusts[it] * coef
                        if v < best:
                            best = v
            out[i] = best
        return out


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    weno5_lines = weno5_lines_numba
    lf_rhs = lf_rhs_numba
    toy_dp_sweep = toy_dp_sweep_numba
    brute_hamiltonian_min = brute_hamiltonian_min_numba
else:
    weno5_lines = weno5_lines_numpy
    lf_rhs = lf_rhs_numpy
    toy_dp_sweep = toy_dp_sweep_numpy
    brute_hamiltonian_min = brute_hamiltonian_min_numpy
