"""Hot loops of the antenna-position PSO, in numba and numpy flavours.

A particle is a row ``[x_1..x_Mt, y_1..y_Mr]``; with ``ap_fixed >= 0`` the
receive array is frozen, the row holds only ``x`` and ``ap_fixed`` is the
receive aperture term. Fitness is

    sum_k gain_k * a_k(x)^H R a_k(x) * ap(y)  -  eta * violations

where ``gain_k`` already contains ``1/K`` and every factor except the two
layout-dependent ones. ``R`` enters through a factor ``F`` with
``R = F F^H`` (see :func:`psd_factor`), so a rank-one covariance costs
``O(M_t)`` per target instead of ``O(M_t^2)``.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

SPACING_TOL = 1e-12


def psd_factor(R, rel_floor=1e-14):
    """Thin factor ``F`` with ``F F^H = R`` up to eigenvalues below ``rel_floor * tr R``."""
    R = np.asarray(R, dtype=np.complex128)
    w, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    keep = w > rel_floor * max(float(np.sum(np.abs(w))), np.finfo(float).tiny)
    if not keep.any():
        return np.zeros((R.shape[0], 1), dtype=np.complex128)
    return np.ascontiguousarray(V[:, keep] * np.sqrt(w[keep]))


# ---------------------------------------------------------------- numba ----


@njit(cache=True, nogil=True)
def _count_violations_nb(c, D, D_min):
    n = c.shape[0]
    s = np.sort(c)
    cnt = 0
    for i in range(n):
        if s[i] < 0.0 or s[i] > D:
            cnt += 1
    for i in range(n - 1):
        if s[i + 1] - s[i] < D_min - SPACING_TOL:
            cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def _count_sorted_nb(c, lo, hi, D, D_min):
    cnt = 0
    for i in range(lo, hi):
        if c[i] < 0.0 or c[i] > D:
            cnt += 1
        if i + 1 < hi and c[i + 1] - c[i] < D_min - SPACING_TOL:
            cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def _insertion_sort_nb(c, lo, hi):
    # rows stay nearly sorted between PSO steps, so this is close to linear
    for i in range(lo + 1, hi):
        v = c[i]
        j = i - 1
        while j >= lo and c[j] > v:
            c[j + 1] = c[j]
            j -= 1
        c[j + 1] = v


@njit(cache=True, nogil=True)
def _fitness_one_nb(p, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed, presorted):
    # transmit elements are indexed in ascending position order, matching the rows of R
    x = p[:n_tx] if presorted else np.sort(p[:n_tx])
    dim = p.shape[0]
    if presorted:
        viol = _count_sorted_nb(p, 0, n_tx, D, D_min)
        if ap_fixed < 0.0:
            viol += _count_sorted_nb(p, n_tx, dim, D, D_min)
    else:
        viol = _count_violations_nb(x, D, D_min)
        if ap_fixed < 0.0:
            viol += _count_violations_nb(p[n_tx:], D, D_min)
    if ap_fixed >= 0.0:
        ap = ap_fixed
    else:
        m = 0.0
        for i in range(n_tx, dim):
            m += p[i]
        m /= dim - n_tx
        ap = 0.0
        for i in range(n_tx, dim):
            ap += (p[i] - m) * (p[i] - m)
    a = np.empty(n_tx, dtype=np.complex128)
    total = 0.0
    for k in range(sin_t.shape[0]):
        if gain[k] == 0.0:
            continue
        for i in range(n_tx):
            ph = kwave * x[i] * sin_t[k]
            a[i] = complex(np.cos(ph), np.sin(ph))
        acc = 0.0
        for r in range(F.shape[1]):
            z = 0.0 + 0.0j
            for i in range(n_tx):
                z += F[i, r].conjugate() * a[i]
            acc += z.real * z.real + z.imag * z.imag
        total += gain[k] * acc
    return total * ap - eta * viol, viol


@njit(cache=True, nogil=True)
def swarm_fitness_nb(pos, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed, presorted=False):
    P = pos.shape[0]
    fit = np.empty(P)
    viol = np.empty(P, dtype=np.int64)
    for p in range(P):
        f, v = _fitness_one_nb(pos[p], n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed, presorted)
        fit[p] = f
        viol[p] = v
    return fit, viol


@njit(cache=True, nogil=True)
def pso_run_nb(pos, vel, rand, n_tx, F, sin_t, gain, kwave, D, D_min, eta, c1, c2, w_max, w_min, ap_fixed):
    P, dim = pos.shape
    T = rand.shape[0]
    pos = pos.copy()
    vel = vel.copy()
    fit, viol = swarm_fitness_nb(pos, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed)
    pbest = pos.copy()
    pbest_fit = fit.copy()
    gbest = pos[0].copy()
    gbest_fit = -np.inf
    for p in range(P):
        if viol[p] == 0 and fit[p] > gbest_fit:
            gbest_fit = fit[p]
            gbest[:] = pos[p]
    history = np.empty(T + 1)
    history[0] = gbest_fit
    for t in range(1, T + 1):
        w = w_max - (w_max - w_min) * t / T
        for p in range(P):
            for i in range(dim):
                v = (w * vel[p, i] + c1 * rand[t - 1, p, 0, i] * (pbest[p, i] - pos[p, i])
                     + c2 * rand[t - 1, p, 1, i] * (gbest[i] - pos[p, i]))
                if v > D:
                    v = D
                elif v < -D:
                    v = -D
                vel[p, i] = v
                z = pos[p, i] + v
                if z < 0.0:
                    z = 0.0
                elif z > D:
                    z = D
                pos[p, i] = z
            _insertion_sort_nb(pos[p], 0, n_tx)
            if dim > n_tx:
                _insertion_sort_nb(pos[p], n_tx, dim)
        fit, viol = swarm_fitness_nb(pos, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed, True)
        for p in range(P):
            if fit[p] > pbest_fit[p]:
                pbest_fit[p] = fit[p]
                pbest[p, :] = pos[p]
        best = -1
        best_fit = gbest_fit
        for p in range(P):
            if viol[p] == 0 and fit[p] > best_fit:
                best_fit = fit[p]
                best = p
        if best >= 0:
            gbest_fit = best_fit
            gbest[:] = pos[best]
        history[t] = gbest_fit
    return gbest, gbest_fit, history


# ---------------------------------------------------------------- numpy ----


def _count_violations_np(c, D, D_min):
    s = np.sort(c, axis=-1)
    out = np.count_nonzero((s < 0.0) | (s > D), axis=-1)
    return out + np.count_nonzero(np.diff(s, axis=-1) < D_min - SPACING_TOL, axis=-1)


def swarm_fitness_np(pos, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed):
    pos = np.atleast_2d(pos)
    x = np.sort(pos[:, :n_tx], axis=1)
    a = np.exp(1j * kwave * x[:, None, :] * sin_t[None, :, None])  # P x K x M_t
    z = a @ F.conj()  # P x K x r
    A = np.sum(z.real**2 + z.imag**2, axis=-1)
    viol = _count_violations_np(x, D, D_min)
    if ap_fixed >= 0.0:
        ap = np.full(pos.shape[0], ap_fixed)
    else:
        y = pos[:, n_tx:]
        c = y - y.mean(axis=1, keepdims=True)
        ap = np.sum(c * c, axis=1)
        viol = viol + _count_violations_np(y, D, D_min)
    total = (A * gain[None, :]).sum(axis=1)
    return total * ap - eta * viol, viol.astype(np.int64)


def pso_run_np(pos, vel, rand, n_tx, F, sin_t, gain, kwave, D, D_min, eta, c1, c2, w_max, w_min, ap_fixed):
    pos = pos.copy()
    vel = vel.copy()
    T = rand.shape[0]
    fit, viol = swarm_fitness_np(pos, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed)
    pbest, pbest_fit = pos.copy(), fit.copy()
    feas = np.flatnonzero(viol == 0)
    gbest = pos[0].copy()
    gbest_fit = -np.inf
    if feas.size:
        j = feas[np.argmax(fit[feas])]
        gbest, gbest_fit = pos[j].copy(), fit[j]
    history = np.empty(T + 1)
    history[0] = gbest_fit
    for t in range(1, T + 1):
        w = w_max - (w_max - w_min) * t / T
        vel = w * vel + c1 * rand[t - 1, :, 0] * (pbest - pos) + c2 * rand[t - 1, :, 1] * (gbest - pos)
        np.clip(vel, -D, D, out=vel)
        pos = np.clip(pos + vel, 0.0, D)
        pos[:, :n_tx] = np.sort(pos[:, :n_tx], axis=1)
        if pos.shape[1] > n_tx:
            pos[:, n_tx:] = np.sort(pos[:, n_tx:], axis=1)
        fit, viol = swarm_fitness_np(pos, n_tx, F, sin_t, gain, kwave, D, D_min, eta, ap_fixed)
        better = fit > pbest_fit
        pbest[better] = pos[better]
        pbest_fit[better] = fit[better]
        cand = np.where(viol == 0, fit, -np.inf)
        j = int(np.argmax(cand))
        if cand[j] > gbest_fit:
            gbest_fit = cand[j]
            gbest = pos[j].copy()
        history[t] = gbest_fit
    return gbest, gbest_fit, history


@njit(cache=True, nogil=True)
def project_path_nb(q, r, tol, max_sweeps):
    q = q.copy()
    N = q.shape[0]
    last = N - 1
    for _ in range(max_sweeps):
        for start in range(2):
            for i in range(start, last, 2):
                dx = q[i + 1, 0] - q[i, 0]
                dy = q[i + 1, 1] - q[i, 1]
                dist = np.sqrt(dx * dx + dy * dy)
                over = dist - r
                if over <= 0.0:
                    continue
                ux = dx / dist
                uy = dy / dist
                if i == 0:
                    ml, mr = 0.0, over
                elif i + 1 == last:
                    ml, mr = over, 0.0
                else:
                    ml, mr = 0.5 * over, 0.5 * over
                q[i, 0] += ux * ml
                q[i, 1] += uy * ml
                q[i + 1, 0] -= ux * mr
                q[i + 1, 1] -= uy * mr
        worst = 0.0
        for i in range(last):
            dx = q[i + 1, 0] - q[i, 0]
            dy = q[i + 1, 1] - q[i, 1]
            v = np.sqrt(dx * dx + dy * dy) - r
            if v > worst:
                worst = v
        if worst < tol:
            break
    return q


def _project_pairs_np(q, start, r, n_last):
    # pairs (i, i+1) for i = start, start+2, ... are disjoint, so they move together
    i = np.arange(start, n_last, 2)
    if i.size == 0:
        return
    diff = q[i + 1] - q[i]
    dist = np.linalg.norm(diff, axis=1)
    over = dist - r
    bad = over > 0
    if not bad.any():
        return
    i, diff, dist, over = i[bad], diff[bad], dist[bad], over[bad]
    unit = diff / dist[:, None]
    left_fixed = i == 0
    right_fixed = (i + 1) == n_last
    move_l = np.where(left_fixed, 0.0, np.where(right_fixed, over, 0.5 * over))
    move_r = np.where(right_fixed, 0.0, np.where(left_fixed, over, 0.5 * over))
    q[i] += unit * move_l[:, None]
    q[i + 1] -= unit * move_r[:, None]


def project_path_np(q, r, tol, max_sweeps):
    q = q.copy()
    N = q.shape[0]
    for _ in range(max_sweeps):
        _project_pairs_np(q, 0, r, N - 1)
        _project_pairs_np(q, 1, r, N - 1)
        if np.linalg.norm(np.diff(q, axis=0), axis=1).max() - r < tol:
            break
    return q


if USE_NUMBA:
    swarm_fitness = swarm_fitness_nb
    pso_run = pso_run_nb
    project_path = project_path_nb
else:
    swarm_fitness = swarm_fitness_np
    pso_run = pso_run_np
    project_path = project_path_np
