"""Constraint checks shared by the solvers: endpoints, speed, power, antenna layout."""
from __future__ import annotations

import numpy as np

SPACING_TOL = 1e-12
SPEED_TOL = 1e-6
POWER_TOL = 1e-9


class InfeasibleError(ValueError):
    """A solution component violates a named constraint."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"{constraint}: {detail}" if detail else constraint)


def layout_violations(coords, D, D_min) -> int:
    """Number of out-of-region coordinates plus too-close adjacent pairs of one sub-array."""
    c = np.sort(np.asarray(coords, dtype=float))
    outside = int(np.count_nonzero((c < 0.0) | (c > D)))
    close = int(np.count_nonzero(np.diff(c) < D_min - SPACING_TOL))
    return outside + close


def check_layout(x, D, D_min, name="layout"):
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise InfeasibleError(f"{name} ordering", "coordinates must be strictly increasing")
    if x[0] < 0.0 or x[-1] > D:
        raise InfeasibleError(f"{name} region", f"coordinates outside [0, {D}]")
    if np.any(np.diff(x) < D_min - SPACING_TOL):
        raise InfeasibleError(f"{name} spacing", f"adjacent spacing below D_min={D_min}")


def check_path(q, q_I, q_F, step_max, tol=SPEED_TOL):
    q = np.asarray(q, dtype=float)
    if not (np.array_equal(q[0], np.asarray(q_I, dtype=float)) and np.array_equal(q[-1], np.asarray(q_F, dtype=float))):
        raise InfeasibleError("endpoint", "first/last slot must equal q_I/q_F")
    steps = np.linalg.norm(np.diff(q, axis=0), axis=1)
    if steps.size and steps.max() > step_max + tol:
        n = int(np.argmax(steps)) + 1
        raise InfeasibleError("speed", f"slot {n}: step {steps.max():.6f} m exceeds {step_max:.6f} m")


def check_covariance(R, P_max, name="covariance"):
    R = np.asarray(R)
    scale = max(abs(np.trace(R)), 1.0)
    if np.max(np.abs(R - R.conj().T)) > 1e-12 * scale:
        raise InfeasibleError(f"{name} hermitian")
    w = np.linalg.eigvalsh(0.5 * (R + R.conj().T))
    if w.min() < -1e-10 * scale:
        raise InfeasibleError(f"{name} psd", f"min eigenvalue {w.min():.3e}")
    if np.real(np.trace(R)) > P_max + POWER_TOL:
        raise InfeasibleError("power", f"trace {np.real(np.trace(R)):.6g} exceeds P_max {P_max:.6g}")


def check_solution(scenario, q, Rs, layouts):
    """Raise :class:`InfeasibleError` naming the first violated constraint."""
    s = scenario
    check_path(q, s.q_I, s.q_F, s.step_max)
    if len(Rs) != s.N or len(layouts) != s.N:
        raise InfeasibleError("shape", "need one covariance and one layout per slot")
    for n in range(s.N):
        check_covariance(Rs[n], s.P_max, name=f"slot {n} covariance")
        check_layout(layouts[n].x, s.D, s.D_min, name=f"slot {n} transmit")
        check_layout(layouts[n].y, s.D, s.D_min, name=f"slot {n} receive")
