"""Binary value-field snapshots and the solve manifest.

Snapshot layout (all scalars little-endian float64 after the magic):

    bytes 0..4   magic b"PHJB1"
    bytes 5..7   zero padding (8-byte alignment)
    ndim
    per dimension: count, lower, upper
    z1, t_f, kappa
    values in C order (count = product of the per-dimension counts)

Periodicity flags are not part of the snapshot; callers that need them
(e.g. when rebuilding a Grid) supply them, normally from the manifest's
embedded scenario.  Writing is deterministic: identical fields give
identical bytes, and the manifest stores a sha256 per snapshot.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .grid import Grid
from .hjb_solver import ValueField

MAGIC = b"PHJB1"
MANIFEST_SCHEMA = "pareto-hjb-manifest/1"


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(path, field: ValueField) -> None:
    grid = field.grid
    header = [float(grid.ndim)]
    for d in range(grid.ndim):
        header.extend([float(grid.counts[d]), grid.lower[d], grid.upper[d]])
    header.extend([field.z1, field.t_f, field.kappa])
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\x00\x00\x00")
        fh.write(np.asarray(header, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_snapshot(path, periodic: tuple[bool, ...] | None = None) -> ValueField:
    raw = Path(path).read_bytes()
    if raw[:5] != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {raw[:5]!r}")
    buf = np.frombuffer(raw, dtype="<f8", offset=8)
    ndim = int(buf[0])
    if ndim < 1 or ndim > 16 or buf.size < 1 + 3 * ndim + 3:
        raise SnapshotFormatError(f"{path}: implausible header")
    counts, lower, upper = [], [], []
    for d in range(ndim):
        counts.append(int(buf[1 + 3 * d]))
        lower.append(float(buf[2 + 3 * d]))
        upper.append(float(buf[3 + 3 * d]))
    z1, t_f, kappa = (float(v) for v in buf[1 + 3 * ndim : 4 + 3 * ndim])
    values = buf[4 + 3 * ndim :]
    n = int(np.prod(counts))
    if values.size != n:
        raise SnapshotFormatError(f"{path}: expected {n} values, got {values.size}")
    if periodic is None:
        periodic = (False,) * ndim
    grid = Grid(tuple(lower), tuple(upper), tuple(counts), tuple(periodic))
    return ValueField(grid, values.reshape(counts).copy(), z1, t_f, kappa)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(path, scenario_dict: dict, entries: list[dict]) -> None:
    doc = {
        "schema": MANIFEST_SCHEMA,
        "scenario": scenario_dict,
        "snapshots": entries,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise SnapshotFormatError(
            f"{path}: manifest schema {doc.get('schema')!r} != {MANIFEST_SCHEMA}"
        )
    return doc
