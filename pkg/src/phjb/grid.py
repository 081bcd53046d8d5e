"""Uniform tensor-product grids with ghost extension and interpolation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GHOST = 3  # ghost layer width required by the 5th-order stencils


class GridRangeError(ValueError):
    """A queried state lies outside the grid box."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid; lower/upper are the first and last grid points per dim.

    For periodic dimensions the stored upper end is the last sample, one
    spacing short of lower + period.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    counts: tuple[int, ...]
    periodic: tuple[bool, ...]

    def __post_init__(self):
        nd = len(self.counts)
        if not (len(self.lower) == len(self.upper) == len(self.periodic) == nd):
            raise ValueError("grid field lengths disagree")
        for d in range(nd):
            if self.counts[d] < 7:
                raise ValueError(f"dim {d}: need >= 7 points, got {self.counts[d]}")
            if not self.upper[d] > self.lower[d]:
                raise ValueError(f"dim {d}: upper must exceed lower")

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (self.upper[d] - self.lower[d]) / (self.counts[d] - 1)
            for d in range(self.ndim)
        )

    def axis(self, d: int) -> np.ndarray:
        return np.linspace(self.lower[d], self.upper[d], self.counts[d])

    def meshes(self) -> list[np.ndarray]:
        """Broadcastable (sparse) coordinate arrays, one per dimension."""
        return list(np.meshgrid(*[self.axis(d) for d in range(self.ndim)],
                                indexing="ij", sparse=True))

    def period(self, d: int) -> float:
        return self.counts[d] * self.spacing[d]

    def extend(self, field: np.ndarray, axis: int) -> np.ndarray:
        """Pad one axis with GHOST values: periodic wrap or linear extrapolation."""
        f = np.moveaxis(field, axis, -1)
        if self.periodic[axis]:
            out = np.concatenate([f[..., -GHOST:], f, f[..., :GHOST]], axis=-1)
        else:
            lo = [(  (k + 1.0) * f[..., 0] - k * f[..., 1])[..., None]
                  for k in range(GHOST, 0, -1)]
            hi = [(((k + 1.0) * f[..., -1] - k * f[..., -2]))[..., None]
                  for k in range(1, GHOST + 1)]
            out = np.concatenate(lo + [f] + hi, axis=-1)
        return np.moveaxis(out, -1, axis)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Wrap periodic coordinates of points (..., ndim) into the grid range."""
        x = np.array(x, dtype=float, copy=True)
        for d in range((self.ndim)):
            if self.periodic[d]:
                per = self.period(d)
                x[..., d] = self.lower[d] + np.mod(x[..., d] - self.lower[d], per)
        return x

    def contains(self, x: np.ndarray, margin_cells: float = 0.0) -> np.ndarray:
        """True where points (..., ndim) are inside the box (periodic dims always)."""
        x = self.wrap(x)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for d in range(self.ndim):
            if self.periodic[d]:
                continue
            pad = margin_cells * self.spacing[d]
            ok &= (x[..., d] >= self.lower[d] + pad) & (x[..., d] <= self.upper[d] - pad)
        return ok

    def interp(self, field: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Multilinear interpolation of field at points (..., ndim).

        Non-periodic coordinates must lie inside the box (GridRangeError
        otherwise); periodic coordinates are wrapped.
        """
        pts = np.asarray(pts, dtype=float)
        scalar = pts.ndim == 1
        p = self.wrap(np.atleast_2d(pts))
        if not self.contains(p).all():
            raise GridRangeError("point outside grid box")
        acc = np.zeros(p.shape[0])
        i0 = np.empty((p.shape[0], self.ndim), dtype=np.int64)
        fr = np.empty((p.shape[0], self.ndim))
        for d in range(self.ndim):
            t = (p[:, d] - self.lower[d]) / self.spacing[d]
            idx = np.floor(t).astype(np.int64)
            hi_cell = self.counts[d] - 1 if self.periodic[d] else self.counts[d] - 2
            idx = np.clip(idx, 0, hi_cell)
            i0[:, d] = idx
            fr[:, d] = t - idx
        strides = self.strides_elems()
        for corner in range(1 << self.ndim):
            w = np.ones(p.shape[0])
            flat = np.zeros(p.shape[0], dtype=np.int64)
            for d in range(self.ndim):
                bit = (corner >> d) & 1
                if bit:
                    w = w * fr[:, d]
                    nxt = i0[:, d] + 1
                    if self.periodic[d]:
                        nxt = np.mod(nxt, self.counts[d])
                    flat = flat + nxt * strides[d]
                else:
                    w = w * (1.0 - fr[:, d])
                    flat = flat + i0[:, d] * strides[d]
            acc = acc + w * field.reshape(-1)[flat]
        return acc[0] if scalar else acc.reshape(pts.shape[:-1])

    def index_frac(self, pts: np.ndarray):
        """(floor index, fraction) per dim for points (N, ndim), no bounds check."""
        p = self.wrap(np.atleast_2d(pts))
        i0 = np.empty((p.shape[0], self.ndim), dtype=np.int64)
        fr = np.empty((p.shape[0], self.ndim))
        for d in range(self.ndim):
            t = (p[:, d] - self.lower[d]) / self.spacing[d]
            idx = np.floor(t).astype(np.int64)
            i0[:, d] = idx
            fr[:, d] = t - idx
        return i0, fr

    def strides_elems(self) -> np.ndarray:
        """C-order element strides of the grid array."""
        strides = np.empty(self.ndim, dtype=np.int64)
        s = 1
        for d in range(self.ndim - 1, -1, -1):
            strides[d] = s
            s *= self.counts[d]
        return strides


def refine(grid: Grid, factor: int = 2) -> Grid:
    """Nested refinement: every original point remains a grid point."""
    counts = []
    upper = []
    for d in range(grid.ndim):
        h = grid.spacing[d] / factor
        if grid.periodic[d]:
            c = grid.counts[d] * factor
            counts.append(c)
            upper.append(grid.lower[d] + (c - 1) * h)
        else:
            counts.append((grid.counts[d] - 1) * factor + 1)
            upper.append(grid.upper[d])
    return Grid(grid.lower, tuple(upper), tuple(counts), grid.periodic)
