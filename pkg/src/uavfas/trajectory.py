"""Trajectory subproblem with frozen steering vectors, solved by SCA.

With the angles frozen at the previous path, the reciprocal CRB of target k
in slot n is ``w[n, k] / (|q[n] - q_k|^2 + H^2)``. That term is not concave in
``q``; each SCA round replaces it by the tangent lower bound obtained from
convexity of ``1/(u + H^2)`` in ``u = |q - q_k|^2``, a concave quadratic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .feasibility import InfeasibleError
from .geometry import aod, aperture_term, cos_aod, steering

ARMIJO_C = 1e-4
ARMIJO_BETA = 0.5
PROJ_TOL = 1e-9


def _max_step(q):
    return float(np.linalg.norm(np.diff(q, axis=0), axis=1).max())


@dataclass(frozen=True, eq=False)
class Path:
    q: np.ndarray  # N x 2 horizontal positions, meters
    H: float
    V_max: float
    tau: float
    q_I: tuple
    q_F: tuple

    @property
    def N(self) -> int:
        return self.q.shape[0]

    @property
    def step_max(self) -> float:
        return self.V_max * self.tau

    def max_step(self) -> float:
        return float(np.linalg.norm(np.diff(self.q, axis=0), axis=1).max())

    def with_q(self, q) -> "Path":
        return Path(np.asarray(q, dtype=float), self.H, self.V_max, self.tau, self.q_I, self.q_F)

    def is_feasible(self, tol=1e-6) -> bool:
        return (
            np.array_equal(self.q[0], np.asarray(self.q_I, dtype=float))
            and np.array_equal(self.q[-1], np.asarray(self.q_F, dtype=float))
            and self.max_step() <= self.step_max + tol
        )


def straight_path(scenario) -> Path:
    s = scenario
    t = np.linspace(0.0, 1.0, s.N)[:, None]
    q = (1 - t) * np.asarray(s.q_I) + t * np.asarray(s.q_F)
    q[0], q[-1] = s.q_I, s.q_F
    return Path(q, s.H, s.V_max, s.tau, s.q_I, s.q_F)


def project_path(raw, q_I, q_F, V_max, tau, tol=1e-9, max_sweeps=500) -> np.ndarray:
    """Restore endpoint and per-step speed constraints by cyclic pairwise projection.

    Returns the adjusted ``N x 2`` array. A feasible input comes back unchanged.
    """
    q = np.array(raw, dtype=float, copy=True)
    N = q.shape[0]
    r = V_max * tau
    if np.hypot(*(np.asarray(q_F, float) - np.asarray(q_I, float))) > (N - 1) * r * (1 + 1e-12):
        raise InfeasibleError("endpoints unreachable", "|q_F - q_I| > (N-1) V_max tau")
    q[0], q[-1] = q_I, q_F
    out = _kernels.project_path(q, float(r), float(tol), int(max_sweeps))
    if _max_step(out) <= r + tol:
        return out
    # sweep cap hit: pull toward the straight line (feasible, and the set is convex) just enough
    t = np.linspace(0.0, 1.0, N)[:, None]
    base = (1 - t) * np.asarray(q_I, float) + t * np.asarray(q_F, float)
    base[0], base[-1] = q_I, q_F
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _max_step(base + mid * (out - base)) <= r + tol:
            lo = mid
        else:
            hi = mid
    res = base + lo * (out - base)
    res[0], res[-1] = q_I, q_F
    return res


def freeze_steering(path_prev: Path, scenario, layouts):
    """Angles and transmit steering vectors at the previous path: ``(theta[N, K], a[N, K, M_t])``."""
    s = scenario
    th = aod(path_prev.q[:, None, :], s.target_array[None, :, :], s.H)
    X = np.stack([lay.x for lay in layouts])
    a = steering(X[:, None, :], th, s.wavelength)
    return th, a


def trajectory_weights(frozen, Rs, layouts, scenario) -> np.ndarray:
    """Per (slot, target) numerators ``w`` of the frozen-angle reciprocal CRB."""
    s = scenario
    th, a = frozen
    kc = (2.0 * np.pi / s.wavelength) * cos_aod(th)
    A = np.real(np.einsum("nki,nij,nkj->nk", a.conj(), np.stack(Rs), a))
    lam = kc * kc * A
    Y = np.stack([lay.y for lay in layouts])
    omega = s.rcs_array[None, :] * s.N_bar * aperture_term(Y)[:, None]
    return np.maximum(lam * omega / (2.0 * s.sigma2_r), 0.0)


def p3_objective(q, weights, targets, H) -> float:
    u = np.sum((np.asarray(q)[:, None, :] - targets[None, :, :]) ** 2, axis=-1)
    return float(np.sum(weights / (u + H * H)))


def surrogate_terms(q, q0, targets, H):
    """Concave minorant ``g(q; q0)`` of ``f(q) = 1/(|q - q_k|^2 + H^2)``, per slot and target."""
    u = np.sum((np.asarray(q)[:, None, :] - targets[None, :, :]) ** 2, axis=-1)
    u0 = np.sum((np.asarray(q0)[:, None, :] - targets[None, :, :]) ** 2, axis=-1)
    f0 = 1.0 / (u0 + H * H)
    return f0 - (u - u0) * f0 * f0


def optimize_trajectory(path_prev: Path, weights, scenario, max_iter=200, tol=1e-6) -> Path:
    """One SCA round: maximise the concave surrogate around ``path_prev`` by projected ascent.

    The surrogate is separable, ``sum_n const - s_n |q[n] - m_n|^2``; the
    ascent direction is the gradient scaled per slot by ``1/(2 s_n)``.
    """
    s = scenario
    if not path_prev.is_feasible():
        raise InfeasibleError("trajectory", "previous path infeasible")
    w = np.asarray(weights, dtype=float)
    tg = s.target_array
    H = s.H
    q0 = path_prev.q
    u0 = np.sum((q0[:, None, :] - tg[None, :, :]) ** 2, axis=-1)
    f0 = 1.0 / (u0 + H * H)
    coef = w * f0 * f0  # N x K
    sn = coef.sum(axis=1)
    if not np.any(sn > 0):
        return path_prev
    safe = np.where(sn > 0, sn, 1.0)
    centre = (coef @ tg) / safe[:, None]

    def G(q):
        return float(np.sum(w * surrogate_terms(q, q0, tg, H)))

    step_cap = s.step_max + PROJ_TOL
    q = q0.copy()
    g_cur = G(q)
    for _ in range(max_iter):
        grad = -2.0 * sn[:, None] * (q - centre)
        direction = np.where(sn[:, None] > 0, centre - q, 0.0)
        direction[0] = direction[-1] = 0.0
        t = 1.0
        accepted = False
        for _ in range(40):
            cand = project_path(q + t * direction, s.q_I, s.q_F, s.V_max, s.tau)
            if _max_step(cand) > step_cap:
                # projection hit its sweep cap; a shorter step is easier to restore
                t *= ARMIJO_BETA
                continue
            g_new = G(cand)
            if g_new >= g_cur + ARMIJO_C * max(float(np.sum(grad * (cand - q))), 0.0) and g_new > g_cur:
                accepted = True
                break
            t *= ARMIJO_BETA
        if not accepted:
            break
        move = float(np.abs(cand - q).max())
        q, g_cur = cand, g_new
        if move / t < tol:
            break
    return path_prev.with_q(q)
