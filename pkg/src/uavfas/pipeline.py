"""Alternating optimisation over trajectory, covariances and antenna layouts."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import SchemeId, dula_layout, sula_layout
from .beamform import BeamCovariance, optimize_beamforming_slot, slot_weight
from .crb import CrbReport, reciprocal_matrix
from .feasibility import check_solution
from .geometry import aod, distance, steering
from .pso import ArrayLayout, SlotContext, optimize_positions_slot
from .trajectory import Path, freeze_steering, optimize_trajectory, straight_path, trajectory_weights

MONOTONE_TOL = 1e-9
TRAJ_BACKTRACK = 12


@dataclass(eq=False)
class Solution:
    scheme: SchemeId
    path: Path
    R: list  # BeamCovariance per slot
    layouts: list  # ArrayLayout per slot
    report: CrbReport
    trace: list = field(default_factory=list)  # (iteration, P2 objective, avg CRB)
    iterations_used: int = 0
    converged: bool = False
    layout_history: list = field(default_factory=list)  # layouts after every iteration

    @property
    def objectives(self) -> np.ndarray:
        return np.array([t[1] for t in self.trace])


def slot_reciprocals(scenario, q_n, R_n, layout) -> np.ndarray:
    """Reciprocal CRBs of one slot (length K); the single source of every objective value."""
    return reciprocal_matrix(scenario, np.asarray(q_n)[None, :], np.asarray(R_n)[None], layout.x[None, :],
                             layout.y[None, :])[0]


def _rows(scenario, q, Rs, layouts):
    return np.stack([slot_reciprocals(scenario, q[n], Rs[n], layouts[n]) for n in range(scenario.N)])


def _objective(rows) -> float:
    total = 0.0
    for r in rows:
        total += float(r.sum())
    return total / rows.size


def check_monotone(trace, tol=MONOTONE_TOL):
    """``(True, None)`` if objectives never drop by more than ``tol``, else ``(False, first bad index)``."""
    vals = [t[1] if isinstance(t, (tuple, list)) else t for t in trace]
    for i in range(1, len(vals)):
        if vals[i] < vals[i - 1] - tol:
            return False, i
    return True, None


def complexity_estimate(scenario) -> float:
    """Worst-case operation count of one full run (interior-point terms plus the PSO term)."""
    s = scenario
    eps = s.ao.epsilon
    if eps >= 1:
        raise ValueError("epsilon must be < 1 for log(1/epsilon) to be positive")
    ip = s.ao.l_max * ((2 * s.N) ** 3.5 + (s.N * s.M_t**2) ** 3.5) * math.log(1.0 / eps)
    return ip + s.N * s.pso.T_max * s.pso.particles * (s.M_t + s.M_r)


def initial_layouts(scenario, scheme: SchemeId, tfao_rx="dula"):
    s = scenario
    if scheme is SchemeId.SULA:
        x, y = sula_layout(s.M_t, s.D, s.D_min), sula_layout(s.M_r, s.D, s.D_min)
    else:
        x, y = dula_layout(s.M_t, s.wavelength, s.D), dula_layout(s.M_r, s.wavelength, s.D)
        if scheme is SchemeId.TFAO and tfao_rx == "sula":
            y = sula_layout(s.M_r, s.D, s.D_min)
    return [ArrayLayout(x.copy(), y.copy()) for _ in range(s.N)]


def _beamform_slot(s, q_n, R_n, layout, base=None):
    """Solve the slot covariance; keep ``R_n`` if the new one does not score at least as well."""
    if base is None:
        base = slot_reciprocals(s, q_n, R_n, layout)
    th = aod(q_n[None, :], s.target_array, s.H)
    d = distance(q_n[None, :], s.target_array, s.H)
    a = steering(layout.x, th, s.wavelength)
    c = slot_weight(th, d, layout.y, s.rcs_array, s.N_bar, s.sigma2_r, s.wavelength)
    bc = optimize_beamforming_slot(a, c, s.P_max)
    rec = slot_reciprocals(s, q_n, bc.R, layout)
    if rec.sum() >= base.sum():
        return bc.R, rec
    return R_n, base


def _trajectory_step(s, path, Rs, layouts, rows):
    """SCA trajectory update, backtracked toward the current path until the objective,
    re-evaluated after the per-slot covariance re-solve, does not fall."""
    obj = _objective(rows)
    w = trajectory_weights(freeze_steering(path, s, layouts), Rs, layouts, s)
    cand = optimize_trajectory(path, w, s)
    q0, q1 = path.q, cand.q
    if np.array_equal(q0, q1):
        return path
    t = 1.0
    for _ in range(TRAJ_BACKTRACK):
        q = q1.copy() if t == 1.0 else q0 + t * (q1 - q0)
        q[0], q[-1] = s.q_I, s.q_F
        new_rows = np.stack([_beamform_slot(s, q[n], Rs[n], layouts[n])[1] for n in range(s.N)])
        if _objective(new_rows) >= obj:
            return path.with_q(q)
        t *= 0.5
    return path


def _slot_step(s, scheme, l, n, q_n, R_n, layout, tfao_fixed_rx):
    R_n, base = _beamform_slot(s, q_n, R_n, layout)
    if scheme in (SchemeId.SULA, SchemeId.DULA):
        return R_n, layout, base
    ctx = SlotContext.build(s, q_n, R_n, fixed_rx=tfao_fixed_rx)
    res = optimize_positions_slot(ctx, s, key=(s.seed, l, n), warm=layout)
    new_layout = ArrayLayout(res.layout.x, layout.y if tfao_fixed_rx is not None else res.layout.y)
    rec = slot_reciprocals(s, q_n, R_n, new_layout)
    if rec.sum() >= base.sum():
        return R_n, new_layout, rec
    return R_n, layout, base


def run_ao(scenario, scheme=SchemeId.PROPOSED, workers=1, tfao_rx="dula", progress=None) -> Solution:
    """Alternate trajectory, per-slot covariance and per-slot layout updates until the
    P2 objective gain drops below ``epsilon`` or ``l_max`` sweeps are done.

    Every block update is kept only if it does not lower the objective, so
    the recorded trace is non-decreasing exactly.
    """
    s = scenario
    scheme = SchemeId.parse(scheme)
    path = straight_path(s)
    Rs = [np.eye(s.M_t, dtype=complex) * (s.P_max / s.M_t) for _ in range(s.N)]
    layouts = initial_layouts(s, scheme, tfao_rx)
    fixed_rx = layouts[0].y if scheme is SchemeId.TFAO else None

    rows = _rows(s, path.q, Rs, layouts)
    report = CrbReport.from_reciprocals(rows)
    trace = [(0, _objective(rows), report.avg_crb)]
    history = [list(layouts)]
    converged = False
    l = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        for l in range(1, s.ao.l_max + 1):
            path = _trajectory_step(s, path, Rs, layouts, rows)
            args = [(s, scheme, l, n, path.q[n], Rs[n], layouts[n], fixed_rx) for n in range(s.N)]
            if pool is None:
                out = [_slot_step(*a) for a in args]
            else:
                out = list(pool.map(lambda a: _slot_step(*a), args))
            Rs = [o[0] for o in out]
            layouts = [o[1] for o in out]
            rows = np.stack([o[2] for o in out])
            check_solution(s, path.q, Rs, layouts)
            report = CrbReport.from_reciprocals(rows)
            obj = _objective(rows)
            trace.append((l, obj, report.avg_crb))
            history.append(list(layouts))
            if progress is not None:
                progress(l, obj, report.avg_crb)
            if obj - trace[-2][1] < s.ao.epsilon:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return Solution(
        scheme=scheme,
        path=path,
        R=[BeamCovariance(R, s.P_max) for R in Rs],
        layouts=layouts,
        report=report,
        trace=trace,
        iterations_used=l,
        converged=converged,
        layout_history=history,
    )
