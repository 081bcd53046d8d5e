"""State constraints, target membership, and boundary recoverability.

The admissible set K is a radial corridor crossed with a mass floor; its
indicator surrogate g is a max of normalized signed distances, so g <= 0
inside K and g is Lipschitz with constant max(1/length_scale, 1/mass_scale).
The target surrogate nu is a weighted Euclidean distance to a reference
state minus a radius epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConstraintConfig:
    rho_min: float
    rho_max: float
    m_min: float
    m_max: float
    length_scale: float = 1.0
    mass_scale: float = 1.0
    velocity_scale: float = 1.0

    def __post_init__(self):
        if not self.rho_min < self.rho_max:
            raise ValueError("rho_min must be < rho_max")
        if not self.m_min < self.m_max:
            raise ValueError("m_min must be < m_max")
        for name in ("length_scale", "mass_scale", "velocity_scale"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def lipschitz(self) -> float:
        """Bound on |grad g| in the raw (rho, m) coordinates."""
        return max(1.0 / self.length_scale, 1.0 / self.mass_scale)


@dataclass(frozen=True)
class TargetConfig:
    """Weighted-ellipsoid target: nu <= 0 inside.

    weights are non-negative with at least one positive; a zero weight
    leaves that coordinate free.  epsilon is the ellipsoid radius in the
    weighted norm and must be positive.
    """

    r_target: tuple[float, ...]
    epsilon: float
    weights: tuple[float, ...]

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        w = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.r_target):
            raise ValueError("weights and r_target lengths disagree")
        if (w < 0.0).any() or not (w > 0.0).any():
            raise ValueError("weights must be non-negative with one positive")

    @property
    def lipschitz(self) -> float:
        return float(max(self.weights))


def g_rho_m(rho, m, cfg: ConstraintConfig):
    """Constraint function over broadcastable rho/mass arrays."""
    t1 = (cfg.rho_min - np.asarray(rho)) / cfg.length_scale
    t2 = (np.asarray(rho) - cfg.rho_max) / cfg.length_scale
    t3 = (cfg.m_min - np.asarray(m)) / cfg.mass_scale
    return np.maximum(np.maximum(t1, t2), t3)


def nu_weighted(deltas: np.ndarray, weights: Sequence[float], epsilon: float):
    """Weighted distance minus epsilon; deltas has the coordinate axis last."""
    d = np.asarray(deltas, dtype=float)
    w = np.asarray(weights, dtype=float)
    return np.sqrt(np.sum((w * d) ** 2, axis=-1)) - epsilon


def nu(state: Sequence[float], tgt: TargetConfig):
    """Target membership function: negative strictly inside the ellipsoid."""
    d = np.asarray(state, dtype=float) - np.asarray(tgt.r_target, dtype=float)
    return nu_weighted(d, tgt.weights, tgt.epsilon)


@dataclass(frozen=True)
class FaceReport:
    name: str
    active: bool
    min_drift: float  # inf over controls of d/dt (face value)
    recoverable: bool


@dataclass(frozen=True)
class RecoverableReport:
    faces: tuple[FaceReport, ...]
    recoverable: bool


def recoverable(
    state: np.ndarray,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    controls: Iterable[np.ndarray],
    cfg: ConstraintConfig,
    rho_index: int = 0,
    mass_index: int = -1,
    tol: float = 1.0e-9,
) -> RecoverableReport:
    """Check whether active constraint faces can be steered back into K.

    A face is active when its g-term attains the max within tol of zero.
    It is recoverable when some control gives a strictly negative drift of
    the face value along f.  The mass face has drift T/(v_ex*mass_scale)
    >= 0 for every control, so it is never recoverable.
    """
    state = np.asarray(state, dtype=float)
    rho = state[rho_index]
    m = state[mass_index]
    faces = {
        "rho_min": (cfg.rho_min - rho) / cfg.length_scale,
        "rho_max": (rho - cfg.rho_max) / cfg.length_scale,
        "m_min": (cfg.m_min - m) / cfg.mass_scale,
    }
    grads = {
        "rho_min": (rho_index, -1.0 / cfg.length_scale),
        "rho_max": (rho_index, 1.0 / cfg.length_scale),
        "m_min": (mass_index, -1.0 / cfg.mass_scale),
    }
    gmax = max(faces.values())
    controls = list(controls)
    reports = []
    all_ok = True
    for name, val in faces.items():
        active = abs(val) <= tol and val >= gmax - tol
        idx, coef = grads[name]
        drift = min(coef * f(state, np.asarray(u, dtype=float))[idx] for u in controls)
        ok = drift < -tol
        if active and not ok:
            all_ok = False
        reports.append(FaceReport(name, active, float(drift), ok))
    return RecoverableReport(tuple(reports), all_ok)
