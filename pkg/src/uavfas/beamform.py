"""Per-slot transmit covariance design.

The slot objective ``sum_k c_k a_k^H R a_k`` is linear in ``R``, so over
``{R >= 0, tr R <= P}`` it peaks at the rank-one point ``P u u^H`` with
``u`` the top eigenvector of ``sum_k c_k a_k a_k^H``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import aperture_term, cos_aod, steering

TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BeamCovariance:
    R: np.ndarray
    trace_budget: float
    degenerate: bool = False
    objective: float = float("nan")


def slot_weight(theta, d, y, alpha2, N_bar, sigma2_r, wavelength):
    """``c_k`` such that the reciprocal reduced CRB equals ``c_k a_k^H R a_k``.

    ``alpha2`` is ``|alpha_k|^2``; all arguments broadcast.
    """
    kc = (2.0 * np.pi / wavelength) * cos_aod(theta)
    return alpha2 * N_bar * kc * kc * aperture_term(y) / (2.0 * np.asarray(d) ** 2 * sigma2_r)


def _phase_normalised(v):
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size:
        v = v * np.exp(-1j * np.angle(v[nz[0]]))
    return v


def optimize_beamforming_slot(a_vectors, weights, P_max) -> BeamCovariance:
    """Maximise ``sum_k c_k a_k^H R a_k`` subject to ``tr R <= P_max``, ``R >= 0``."""
    A = np.atleast_2d(np.asarray(a_vectors, dtype=complex))
    c = np.asarray(weights, dtype=float).reshape(-1)
    M_t = A.shape[1]
    if not np.any(c > 0):
        return BeamCovariance(np.eye(M_t, dtype=complex) * (P_max / M_t), P_max, degenerate=True, objective=0.0)
    M = (A.T * c) @ A.conj()
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    top = w[-1]
    cands = [j for j in range(M_t) if w[j] >= top - TIE_RTOL * abs(top)]
    if len(cands) == 1:
        u = V[:, cands[0]]
    else:
        vecs = [_phase_normalised(V[:, j]) for j in cands]
        u = max(vecs, key=lambda v: tuple(np.round(v.real, 12)))
    u = _phase_normalised(u / np.linalg.norm(u))
    R = P_max * np.outer(u, u.conj())
    R = 0.5 * (R + R.conj().T)
    return BeamCovariance(R, P_max, objective=float(P_max * top))


def slot_objective(a_vectors, weights, R) -> float:
    A = np.atleast_2d(np.asarray(a_vectors))
    gains = np.real(np.einsum("ki,ij,kj->k", A.conj(), R, A))
    return float(np.dot(np.asarray(weights, dtype=float).reshape(-1), gains))


def beampattern_gain(R, x, theta, wavelength):
    """Transmit beampattern ``a(theta)^H R a(theta)`` in watts; ``theta`` may be an array."""
    a = steering(x, theta, wavelength)
    g = np.real(np.einsum("...i,ij,...j->...", a.conj(), np.asarray(R), a))
    return np.maximum(g, 0.0)
