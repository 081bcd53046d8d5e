"""The jitted kernels and the pure-numpy fallbacks must agree bitwise."""

import os
import subprocess
import sys

import numpy as np
import pytest

from phjb import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA,
                                 reason="numba not installed")


@needs_numba
def test_weno5_lines_backends_bitwise():
    rng = np.random.default_rng(41)
    lines = np.ascontiguousarray(rng.normal(0.0, 1.0, (40, 33)))
    am, ap = kernels.weno5_lines_numpy(lines, 0.05)
    bm, bp = kernels.weno5_lines_numba(lines, 0.05)
    assert np.array_equal(am, bm)
    assert np.array_equal(ap, bp)


@needs_numba
def test_lf_rhs_backends_bitwise():
    rng = np.random.default_rng(42)
    D, P = 3, 500
    dm = rng.normal(0.0, 1.0, (D, P))
    dp = rng.normal(0.0, 1.0, (D, P))
    coast = rng.normal(0.0, 1.0, (D, P))
    gain = rng.uniform(0.5, 2.0, P)
    mask = np.array([False, True, True])
    alphas = rng.uniform(0.1, 2.0, D)
    a = kernels.lf_rhs_numpy(dm, dp, coast, gain, mask, 2, 0.1, alphas, 1.7)
    b = kernels.lf_rhs_numba(dm, dp, coast, gain, mask, 2, 0.1, alphas, 1.7)
    assert np.array_equal(a, b)


@needs_numba
def test_toy_dp_sweep_backends_bitwise():
    rng = np.random.default_rng(43)
    shape = np.array([12, 11, 9], dtype=np.int64)
    n = int(shape.prod())
    w = rng.normal(0.0, 1.0, n)
    g = rng.normal(-0.5, 1.0, n)
    lows = np.array([-1.0, -1.0, 0.7])
    steps = np.array([0.2, 0.2, 0.05])
    controls = np.array([-1.0, 0.0, 1.0])
    a = kernels.toy_dp_sweep_numpy(w.copy(), g, shape, lows, steps, 0.01,
                                   controls, 10.0)
    b = kernels.toy_dp_sweep_numba(w.copy(), g, shape, lows, steps, 0.01,
                                   controls, 10.0)
    assert np.array_equal(a, b)


@needs_numba
def test_brute_hamiltonian_backends_bitwise():
    rng = np.random.default_rng(44)
    N = 200
    qv = rng.normal(0.0, 1.0, (N, 3))
    qm = rng.normal(0.0, 1.0, N)
    m = rng.uniform(900.0, 1100.0, N)
    alphas = np.linspace(0.0, np.pi, 61)
    deltas = np.linspace(-np.pi, np.pi, 31)
    thrusts = np.linspace(0.0, 1.0e-4, 11)
    a = kernels.brute_hamiltonian_min_numpy(qv, qm, m, 19.6, alphas, deltas,
                                            thrusts)
    b = kernels.brute_hamiltonian_min_numba(qv, qm, m, 19.6, alphas, deltas,
                                            thrusts)
    assert np.allclose(a, b, rtol=0.0, atol=1e-18)


_MARCH_SNIPPET = r"""
import numpy as np
from phjb import hjb_solver, kernels, oracle
from phjb.grid import Grid

tp = oracle.ToyProblem()
grid = Grid((tp.x_min, tp.v_min, tp.m_dry), (tp.x_max, tp.v_max, tp.m_max),
            (21, 21, 9), (False, False, False))
sp = hjb_solver.build_slice_problem(tp.to_problem(), grid)
res = hjb_solver.march(sp, -0.9, 1.2, hjb_solver.SolverConfig(cfl=0.6))
vals = res.field.values.ravel()
print(kernels.BACKEND)
print(repr(float(vals[3000])), repr(float(vals.sum())), res.n_steps)
"""


def _run_march(backend: str):
    env = dict(os.environ, PHJB_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", _MARCH_SNIPPET], env=env,
                         capture_output=True, text=True, check=True)
    lines = out.stdout.strip().splitlines()
    assert lines[0] == backend
    return lines[1]


@needs_numba
def test_full_march_identical_across_backends():
    """Backend selection is an env flag; results must not depend on it."""
    assert _run_march("numpy") == _run_march("numba")


def test_backend_env_flag_rejects_unknown():
    env = dict(os.environ, PHJB_BACKEND="fortran")
    out = subprocess.run(
        [sys.executable, "-c", "import phjb.kernels"], env=env,
        capture_output=True, text=True,
    )
    assert out.returncode != 0
    assert "PHJB_BACKEND" in out.stderr
