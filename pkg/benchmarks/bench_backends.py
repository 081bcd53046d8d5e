"""Time the jitted kernels against the pure-numpy fallback.

Backend selection happens at import through PHJB_BACKEND, so each
backend runs in its own subprocess and the parent merges the timings.

    python3 benchmarks/bench_backends.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _bench(fn, repeat: int) -> float:
    """Best wall time over repeat calls, in seconds."""
    fn()  # first call pays any compile cost; keep it out of the timing
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_worker(repeat: int) -> dict[str, float]:
    import numpy as np

    from phjb import kernels
    from phjb.backend import BACKEND
    from phjb.grid import Grid
    from phjb.hjb_solver import SolverConfig, build_slice_problem, march
    from phjb.oracle import ToyProblem, default_oracle_grid, dp_solve

    rng = np.random.default_rng(7)
    out: dict[str, float] = {"backend_is_numba": float(BACKEND == "numba")}

    fext = rng.normal(size=(4000, 107))
    out["weno5_lines_4000x101"] = _bench(
        lambda: kernels.weno5_lines(fext, 0.01), repeat)

    npts, ndim = 250_000, 3
    dm = rng.normal(size=(ndim, npts))
    dp = rng.normal(size=(ndim, npts))
    coast = rng.normal(size=(ndim, npts))
    gain = rng.random(npts)
    mask = np.array([False, True, True])
    alphas = np.full(ndim, 0.8)
    out["lf_rhs_250k"] = _bench(
        lambda: kernels.lf_rhs(dm, dp, coast, gain, mask, 2, 0.1, alphas,
                               1.7), repeat)

    tp = ToyProblem()
    g = default_oracle_grid(tp, 73, 75, 37)
    out["dp_solve_73x75x37_x50"] = _bench(
        lambda: dp_solve(tp, g, 1.5, -0.85, n_steps=50), repeat)

    qv = rng.normal(size=(200, 3))
    qm = rng.normal(size=200)
    m = rng.uniform(950.0, 1100.0, 200)
    grids = (np.linspace(0.0, np.pi, 181), np.linspace(-np.pi, np.pi, 91),
             np.linspace(0.0, 1e-4, 21))
    out["brute_hmin_200x181x91x21"] = _bench(
        lambda: kernels.brute_hamiltonian_min(qv, qm, m, 19.6, *grids), repeat)

    grid = Grid((tp.x_min, tp.v_min, tp.m_dry), (tp.x_max, tp.v_max, tp.m_max),
                (33, 33, 11), (False, False, False))
    sp = build_slice_problem(tp.to_problem(), grid)
    out["march_33x33x11_tf2"] = _bench(
        lambda: march(sp, -0.85, 2.0, SolverConfig(cfl=0.6)), repeat)

    return out


def run_backend(backend: str, repeat: int) -> dict[str, float]:
    env = dict(os.environ, PHJB_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, __file__, "--worker", "--repeat", str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout.splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        print(json.dumps(run_worker(args.repeat)))
        return 0

    results = {b: run_backend(b, args.repeat) for b in ("numpy", "numba")}
    if not results["numba"].pop("backend_is_numba"):
        print("note: numba unavailable, both columns ran the numpy fallback")
    results["numpy"].pop("backend_is_numba")

    width = max(len(k) for k in results["numpy"])
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for key in results["numpy"]:
        tn, tj = results["numpy"][key], results["numba"][key]
        print(f"{key:<{width}}  {tn * 1e3:>8.2f}ms  {tj * 1e3:>8.2f}ms  "
              f"{tn / tj:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
