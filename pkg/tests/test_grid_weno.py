"""Grid mechanics and the fifth-order upwind derivative stencils."""

import numpy as np
import pytest

from phjb import kernels
from phjb.grid import GHOST, Grid, GridRangeError, refine


def _grid3():
    return Grid((-1.0, 0.0, 2.0), (1.0, 3.0, 4.0), (11, 13, 9),
                (False, False, False))


def test_axes_and_spacing():
    g = _grid3()
    assert g.spacing == pytest.approx((0.2, 0.25, 0.25))
    assert g.axis(0)[0] == -1.0 and g.axis(0)[-1] == 1.0
    assert g.size == 11 * 13 * 9
    x, y, z = g.meshes()
    assert x.shape == (11, 1, 1) and z.shape == (1, 1, 9)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((0.0,), (1.0,), (5,), (False,))  # too few points for stencils
    with pytest.raises(ValueError):
        Grid((0.0,), (-1.0,), (9,), (False,))
    with pytest.raises(ValueError):
        Grid((0.0, 0.0), (1.0,), (9,), (False,))


def test_interp_reproduces_multilinear_fields():
    g = _grid3()
    x, y, z = g.meshes()
    field = 2.0 * x - 3.0 * y + 0.5 * z + 0.25 * x * y
    rng = np.random.default_rng(31)
    pts = np.stack([
        rng.uniform(-1.0, 1.0, 300),
        rng.uniform(0.0, 3.0, 300),
        rng.uniform(2.0, 4.0, 300),
    ], axis=1)
    want = (2.0 * pts[:, 0] - 3.0 * pts[:, 1] + 0.5 * pts[:, 2]
            + 0.25 * pts[:, 0] * pts[:, 1])
    got = g.interp(np.broadcast_to(field, g.shape), pts)
    assert np.allclose(got, want, rtol=0.0, atol=1e-12)


def test_interp_rejects_outside_points():
    g = _grid3()
    field = np.zeros(g.shape)
    with pytest.raises(GridRangeError):
        g.interp(field, np.array([1.5, 0.5, 2.5]))


def test_interp_wraps_periodic_coordinates():
    g = Grid((0.0, 0.0), (1.0, 2.0 * np.pi * 7 / 8), (9, 8), (False, True))
    assert g.period(1) == pytest.approx(2.0 * np.pi)
    r, th = g.meshes()
    field = np.broadcast_to(np.sin(th), g.shape).copy()
    out = g.interp(field, np.array([0.5, -0.75 * np.pi]))
    ref = g.interp(field, np.array([0.5, 1.25 * np.pi]))
    assert out == pytest.approx(ref, abs=1e-14)


def test_extend_linear_fields_exactly():
    g = Grid((0.0,), (1.0,), (9,), (False,))
    f = 3.0 * g.axis(0) - 1.0
    ext = g.extend(f, 0)
    h = g.spacing[0]
    want = 3.0 * (g.lower[0] + (np.arange(9 + 2 * GHOST) - GHOST) * h) - 1.0
    assert np.allclose(ext, want, rtol=0.0, atol=1e-12)


def test_extend_periodic_wraps():
    g = Grid((0.0,), (7.0 / 8.0,), (8,), (True,))
    f = np.arange(8.0)
    ext = g.extend(f, 0)
    assert np.array_equal(ext[:GHOST], f[-GHOST:])
    assert np.array_equal(ext[-GHOST:], f[:GHOST])


def test_contains_margins():
    g = _grid3()
    assert g.contains(np.array([0.0, 1.0, 3.0]))
    assert not g.contains(np.array([-1.0, 1.0, 3.0]), margin_cells=1.0)
    assert g.contains(np.array([-0.75, 1.0, 3.0]), margin_cells=1.0)


def test_refine_keeps_nodes():
    g = _grid3()
    f = refine(g, 2)
    assert f.counts == (21, 25, 17)
    for d in range(3):
        assert set(np.round(g.axis(d), 12)) <= set(np.round(f.axis(d), 12))
    gp = Grid((0.0,), (7.0 / 8.0,), (8,), (True,))
    fp = refine(gp, 2)
    assert fp.counts == (16,)
    assert fp.period(0) == pytest.approx(gp.period(0))


def _weno_ref_line(n, func, dfunc, lo=0.0, hi=1.0):
    g = Grid((lo,), (hi,), (n,), (False,))
    x = g.axis(0)
    h = g.spacing[0]
    xa = lo + (np.arange(n + 2 * GHOST) - GHOST) * h
    ext = func(xa)[None, :]
    dm, dp = kernels.weno5_lines(np.ascontiguousarray(ext), h)
    return x, dm[0], dp[0], dfunc(x)


def test_weno5_exact_on_linear_data():
    g = Grid((0.0,), (2.0,), (17,), (False,))
    f = -0.7 * g.axis(0) + 0.3
    ext = g.extend(f, 0)[None, :]
    dm, dp = kernels.weno5_lines(np.ascontiguousarray(ext), g.spacing[0])
    assert np.allclose(dm, -0.7, rtol=0.0, atol=1e-13)
    assert np.allclose(dp, -0.7, rtol=0.0, atol=1e-13)


def test_weno5_fifth_order_convergence():
    errs = []
    for n in (41, 81):
        x, dm, dp, ref = _weno_ref_line(n, np.sin, np.cos, 0.0, 1.0)
        errs.append(max(np.abs(dm - ref).max(), np.abs(dp - ref).max()))
    rate = np.log2(errs[0] / errs[1])
    assert rate > 4.5, f"observed order {rate:.2f}"


def test_weno5_scale_invariance():
    """The smoothness regularization keeps d/dx(c f) = c d/dx f."""
    rng = np.random.default_rng(33)
    f = rng.normal(0.0, 1.0, 40)
    line = np.ascontiguousarray(f[None, :])
    dm1, dp1 = kernels.weno5_lines(line, 0.1)
    for c in (1e-12, 1e6):
        dm2, dp2 = kernels.weno5_lines(np.ascontiguousarray(c * f[None, :]), 0.1)
        assert np.allclose(dm2, c * dm1, rtol=1e-10, atol=0.0)
        assert np.allclose(dp2, c * dp1, rtol=1e-10, atol=0.0)


def test_weno5_left_right_mirror_symmetry():
    """Reversing the line swaps and negates the one-sided derivatives."""
    rng = np.random.default_rng(34)
    f = rng.normal(0.0, 1.0, 36)
    dm, dp = kernels.weno5_lines(np.ascontiguousarray(f[None, :]), 0.2)
    rm, rp = kernels.weno5_lines(np.ascontiguousarray(f[::-1][None, :].copy()),
                                 0.2)
    assert np.allclose(dm[0], -rp[0][::-1], rtol=1e-12, atol=1e-14)
    assert np.allclose(dp[0], -rm[0][::-1], rtol=1e-12, atol=1e-14)
