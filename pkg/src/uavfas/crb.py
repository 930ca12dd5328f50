"""Angle CRB per target and slot: full trace form, reduced closed form, objectives.

The reduced form equals the full form whenever ``R`` is rank one (every
covariance the beamforming step returns). For higher-rank ``R`` the full form
carries an extra non-negative transmit-derivative term
``M_r^2 (A C - |B|^2)``, so the reduced CRB upper-bounds the full one; see
:func:`reduced_gap`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import SteeringContext, aod, aperture_term, cos_aod, distance, steering

SINGULAR_TOL = 1e-30
# full-form denominators below this fraction of tr(dPsi^H dPsi R) tr(Psi^H Psi R) are rounding noise
CANCEL_RTOL = 1e-12


class TraceTerms(NamedTuple):
    psi_psi: float  # tr(Psi^H Psi R)
    dpsi_psi: complex  # tr(dPsi^H Psi R)
    dpsi_dpsi: float  # tr(dPsi^H dPsi R)
    cross_sq: float  # |tr(dPsi^H Psi R)|^2


def trace_terms_direct(a, b, a_dot, b_dot, R) -> TraceTerms:
    """The four traces built from the explicit matrices ``Psi = b a^H`` and its derivative."""
    psi = np.outer(b, np.conj(a))
    dpsi = np.outer(b_dot, np.conj(a)) + np.outer(b, np.conj(a_dot))
    t1 = np.trace(psi.conj().T @ psi @ R)
    t2 = np.trace(dpsi.conj().T @ psi @ R)
    t3 = np.trace(dpsi.conj().T @ dpsi @ R)
    return TraceTerms(float(t1.real), complex(t2), float(t3.real), float(abs(t2) ** 2))


def trace_terms_closed(a, a_dot, R, y, theta, wavelength) -> TraceTerms:
    """Same four traces via scalar identities in ``A = a^H R a``, ``kappa`` and ``A~``."""
    y = np.asarray(y, dtype=float)
    M_r = y.size
    A = np.real(np.conj(a) @ R @ a)
    aRad = np.conj(a) @ R @ a_dot
    adRa = np.conj(a_dot) @ R @ a
    adRad = np.real(np.conj(a_dot) @ R @ a_dot)
    kappa = -1j * (2.0 * np.pi / wavelength) * cos_aod(theta)
    A_tilde = aRad - adRa
    sy, sy2 = y.sum(), np.sum(y * y)
    t1 = M_r * A
    t2 = kappa * A * sy + M_r * aRad
    t3 = -(kappa**2) * A * sy2 + M_r * adRad - kappa * A_tilde * sy
    t4 = -((kappa * A) ** 2) * sy**2 + M_r**2 * aRad * adRa - kappa * M_r * A * A_tilde * sy
    return TraceTerms(float(np.real(t1)), complex(t2), float(np.real(t3)), float(np.real(t4)))


def _rel(u, v):
    scale = max(abs(u), abs(v))
    return 0.0 if scale == 0 else abs(u - v) / scale


def trace_identities(a, b, a_dot, b_dot, R, *, y, theta, wavelength, rtol=1e-8):
    """Evaluate the four traces both ways and require agreement to ``rtol``.

    Returns ``(direct, closed)``. Raises ``ValueError`` on a dimension
    mismatch or when the two paths disagree.
    """
    R = np.asarray(R)
    if R.shape != (len(a), len(a)) or len(a_dot) != len(a) or len(b) != len(b_dot) or len(y) != len(b):
        raise ValueError("dimension mismatch between steering vectors, positions and R")
    direct = trace_terms_direct(a, b, a_dot, b_dot, R)
    closed = trace_terms_closed(a, a_dot, R, y, theta, wavelength)
    worst = max(_rel(u, v) for u, v in zip(direct, closed))
    if worst > rtol:
        raise ValueError(f"trace identity paths disagree (relative {worst:.3e})")
    return direct, closed


def crb_full(ctx: SteeringContext, R, alpha, d, N_bar, sigma2_r) -> float:
    """CRB from the explicit trace expression; ``inf`` when unidentifiable."""
    t = trace_terms_direct(ctx.a, ctx.b, ctx.a_dot, ctx.b_dot, np.asarray(R))
    prod = t.dpsi_dpsi * t.psi_psi
    det = prod - t.cross_sq
    den = abs(alpha) ** 2 * N_bar * det
    if den <= SINGULAR_TOL or det <= CANCEL_RTOL * abs(prod):
        return np.inf
    return 2.0 * d * d * sigma2_r * t.psi_psi / den


def crb_reduced(a, y, theta, R, alpha, d, N_bar, sigma2_r, wavelength) -> float:
    """Closed-form CRB ``2 d^2 s^2 / (|alpha|^2 N_bar (k cos)^2 a^H R a  ap(y))``."""
    A = float(np.real(np.conj(a) @ np.asarray(R) @ a))
    kc = (2.0 * np.pi / wavelength) * cos_aod(theta)
    den = abs(alpha) ** 2 * N_bar * kc * kc * A * float(aperture_term(y))
    if den <= SINGULAR_TOL:
        return np.inf
    return 2.0 * d * d * sigma2_r / den


def reduced_gap(a, a_dot, R, M_r) -> float:
    """Extra full-form denominator term ``M_r^2 (A C - |B|^2) >= 0``, zero for rank-one R."""
    A = np.real(np.conj(a) @ R @ a)
    C = np.real(np.conj(a_dot) @ R @ a_dot)
    B = np.conj(a) @ R @ a_dot
    return float(M_r**2 * (A * C - abs(B) ** 2))


def reciprocal_matrix(scenario, q, Rs, X, Y) -> np.ndarray:
    """``1/C~_k[n]`` for every slot and target (N x K), zero where singular.

    ``X`` (N x M_t) and ``Y`` (N x M_r) are the per-slot layouts.
    """
    s = scenario
    q = np.asarray(q, dtype=float)
    tg = s.target_array
    th = aod(q[:, None, :], tg[None, :, :], s.H)  # N x K
    d = distance(q[:, None, :], tg[None, :, :], s.H)
    a = steering(np.asarray(X)[:, None, :], th, s.wavelength)  # N x K x M_t
    A = np.real(np.einsum("nki,nij,nkj->nk", a.conj(), np.asarray(Rs), a))
    kc = (2.0 * np.pi / s.wavelength) * cos_aod(th)
    ap = aperture_term(np.asarray(Y))[:, None]
    den = s.rcs_array[None, :] * s.N_bar * kc * kc * A * ap
    num = 2.0 * d * d * s.sigma2_r
    return np.where(den > SINGULAR_TOL, den / num, 0.0)


def p2_objective(recip) -> float:
    """Mean of reciprocal CRBs; slots summed in a fixed order so equal inputs give equal floats."""
    recip = np.asarray(recip, dtype=float)
    total = 0.0
    for row in recip:
        total += float(row.sum())
    return total / recip.size


@dataclass(frozen=True, eq=False)
class CrbReport:
    per_slot_per_target: np.ndarray  # N x K, rad^2, may hold inf
    avg_crb: float
    n_infinite: int
    reciprocal_objective: float

    @classmethod
    def from_reciprocals(cls, recip) -> "CrbReport":
        recip = np.asarray(recip, dtype=float)
        with np.errstate(divide="ignore"):
            crb = np.where(recip > 0, 1.0 / np.where(recip > 0, recip, 1.0), np.inf)
        finite = np.isfinite(crb)
        avg = float(crb[finite].mean()) if finite.any() else np.inf
        return cls(crb, avg, int((~finite).sum()), p2_objective(recip))


def evaluate(scenario, q, Rs, layouts, check=True) -> CrbReport:
    """CRB report of a full (path, covariances, layouts) solution."""
    if check:
        from .feasibility import check_solution

        check_solution(scenario, q, Rs, layouts)
    X = np.stack([lay.x for lay in layouts])
    Y = np.stack([lay.y for lay in layouts])
    return CrbReport.from_reciprocals(reciprocal_matrix(scenario, q, np.stack(Rs), X, Y))
