"""Brute-force reference computations used to certify the solvers.

Nothing here imports the solver modules: steering vectors, traces and CRB
formulas are rebuilt from scratch so a shared bug cannot hide on both sides.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_GRID_CELLS = 10_000_000


@dataclass(frozen=True)
class OracleConfig:
    beam_samples: int = 10_000
    beam_instances: int = 100
    crb_cases: int = 1000
    grid_step_wavelengths: float = 1.0 / 50.0
    fd_cases: int = 1000
    fd_step: float = 1e-6
    cos_floor: float = 0.05  # configurations with cos(theta) below this are skipped
    crb_rtol: float = 1e-8
    beam_margin: float = 1e-9
    pso_ratio: float = 0.98
    fd_rtol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("beam_samples", "beam_instances", "crb_cases", "fd_cases"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("grid_step_wavelengths", "fd_step", "cos_floor", "crb_rtol", "beam_margin", "fd_rtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


def _phases(pos, theta, wavelength):
    return np.exp(2j * np.pi / wavelength * np.multiply.outer(np.sin(theta), np.asarray(pos, float)))


def oracle_beamforming(a_k, c_k, P_max, n_samples, rng, batch=2000) -> float:
    """Largest ``sum_k c_k a_k^H R a_k`` over random trace-``P_max`` Gram matrices.

    Sample 0 is the scaled identity; the rest are ``Z Z^H`` with ``Z`` complex
    Gaussian of random column count, so low-rank extreme points are visited too.
    """
    a = np.atleast_2d(np.asarray(a_k, dtype=complex))
    c = np.asarray(c_k, dtype=float).reshape(-1)
    M = a.shape[1]
    if P_max == 0:
        return 0.0
    W = (a.T * c) @ a.conj()  # sum_k c_k a_k a_k^H
    best = float(np.real(np.trace(W))) * P_max / M
    done = 1
    while done < n_samples:
        n = min(batch, n_samples - done)
        Z = rng.standard_normal((n, M, M)) + 1j * rng.standard_normal((n, M, M))
        ranks = rng.integers(1, M + 1, size=n)
        Z *= (np.arange(M)[None, None, :] < ranks[:, None, None])
        G = Z @ np.conj(np.swapaxes(Z, 1, 2))
        tr = np.real(np.einsum("nii->n", G))
        val = np.real(np.einsum("nij,ji->n", G, W)) * P_max / tr
        best = max(best, float(val.max()))
        done += n
    return best


@dataclass(frozen=True)
class LayoutProblem:
    """Raw physics of one slot for the layout grid search (no solver objects)."""

    q: np.ndarray
    targets: np.ndarray
    rcs: np.ndarray
    R: np.ndarray
    H: float
    N_bar: int
    sigma2_r: float
    wavelength: float
    D: float
    D_min: float

    @classmethod
    def from_scenario(cls, scenario, q, R):
        s = scenario
        return cls(np.asarray(q, float), np.asarray(s.targets, float), np.abs(np.asarray(s.rcs, float)) ** 2,
                   np.asarray(R, complex), s.H, s.N_bar, s.sigma2_r, s.wavelength, s.D, s.D_min)

    def fitness(self, x, y) -> float:
        """Mean over targets of the reciprocal reduced CRB at layout ``(x, y)``."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        return float(self._tx_score(x[None, :])[0] * self._rx_score(y[None, :])[0])

    def _geometry(self):
        h2 = np.sum((self.targets - self.q) ** 2, axis=1)
        d2 = h2 + self.H**2
        theta = np.arcsin(np.minimum(self.H / np.sqrt(d2), 1.0))
        return theta, d2

    def _tx_score(self, X):
        theta, d2 = self._geometry()
        k = 2 * np.pi / self.wavelength
        g = self.rcs * self.N_bar * (k * np.cos(theta)) ** 2 / (2 * d2 * self.sigma2_r) / len(theta)
        A = np.exp(1j * k * X[:, None, :] * np.sin(theta)[None, :, None])  # cells x K x M
        beam = np.real(np.einsum("cki,ij,ckj->ck", A.conj(), self.R, A))
        return beam @ g

    @staticmethod
    def _rx_score(Y):
        return np.sum((Y - Y.mean(axis=1, keepdims=True)) ** 2, axis=1)


def _grid_pairs(D, D_min, step):
    n = int(np.floor(D / step + 1e-9)) + 1
    g = np.arange(n) * step
    i, j = np.triu_indices(n, k=1)
    ok = g[j] - g[i] >= D_min - 1e-12
    return np.stack([g[i[ok]], g[j[ok]]], axis=1)


def oracle_layout_grid(problem: LayoutProblem, step: float):
    """Exhaustive search over feasible two-element transmit and receive layouts on a grid.

    The fitness factorises into a transmit score times a receive aperture,
    both non-negative, so the two grids are maximised separately; the search
    still covers every one of the ``len(tx) * len(rx)`` cells.
    Returns ``(x, y, fitness)``.
    """
    if step <= 0:
        raise ValueError("grid step must be positive")
    pairs = _grid_pairs(problem.D, problem.D_min, step)
    if pairs.shape[0] == 0:
        raise ValueError("no feasible grid layout")
    cells = pairs.shape[0] ** 2
    if cells > MAX_GRID_CELLS:
        raise ValueError(f"grid too fine: {cells} cells > {MAX_GRID_CELLS}")
    tx = problem._tx_score(pairs)
    rx = problem._rx_score(pairs)
    i, j = int(np.argmax(tx)), int(np.argmax(rx))
    return pairs[i].copy(), pairs[j].copy(), float(tx[i] * rx[j])


def _random_layout(rng, M, D, D_min):
    slack = D - (M - 1) * D_min
    return np.arange(M) * D_min + np.sort(rng.uniform(0, slack, M))


def _random_psd(rng, M, trace, rank=None):
    r = M if rank is None else rank
    Z = rng.standard_normal((M, r)) + 1j * rng.standard_normal((M, r))
    G = Z @ Z.conj().T
    return G * (trace / np.real(np.trace(G)))


def crb_pair(x, y, theta, R, alpha2, d, N_bar, sigma2, wavelength):
    """``(full, reduced)`` CRB of one target from the explicit matrices and from the closed form."""
    k = 2 * np.pi / wavelength
    a = np.exp(1j * k * x * np.sin(theta))
    b = np.exp(1j * k * y * np.sin(theta))
    ad = 1j * k * x * np.cos(theta) * a
    bd = 1j * k * y * np.cos(theta) * b
    Psi = np.outer(b, a.conj())
    dPsi = np.outer(bd, a.conj()) + np.outer(b, ad.conj())
    t1 = np.real(np.trace(Psi.conj().T @ Psi @ R))
    t2 = np.trace(dPsi.conj().T @ Psi @ R)
    t3 = np.real(np.trace(dPsi.conj().T @ dPsi @ R))
    full = 2 * d**2 * sigma2 * t1 / (alpha2 * N_bar * (t3 * t1 - abs(t2) ** 2))
    ap = np.sum((y - y.mean()) ** 2)
    reduced = 2 * d**2 * sigma2 / (alpha2 * N_bar * (k * np.cos(theta)) ** 2 * np.real(a.conj() @ R @ a) * ap)
    return float(full), float(reduced)


def oracle_crb_equivalence(rng, n_cases, *, rank=None, cos_floor=0.05, wavelength=0.0107, return_all=False):
    """Worst relative gap between the full trace CRB and the reduced CRB.

    Random array sizes (2..12), feasible layouts (D = 20 wavelengths,
    spacing >= wavelength/2), random PSD ``R`` of the given rank (full when
    ``None``) with trace up to 1 W, ``theta`` in ``(0.05, pi/2 - 0.05)`` with
    ``cos(theta) >= cos_floor``.
    """
    D, D_min = 20 * wavelength, 0.5 * wavelength
    gaps = []
    while len(gaps) < n_cases:
        theta = rng.uniform(0.05, np.pi / 2 - 0.05)
        if np.cos(theta) < cos_floor:
            continue
        Mt, Mr = rng.integers(2, 13, size=2)
        x = _random_layout(rng, Mt, D, D_min)
        y = _random_layout(rng, Mr, D, D_min)
        r = None if rank is None else min(rank, Mt)
        R = _random_psd(rng, Mt, rng.uniform(0.1, 1.0), r)
        d = rng.uniform(100.0, 1200.0)
        full, red = crb_pair(x, y, theta, R, 1.0, d, 200, 1e-12, wavelength)
        gaps.append(abs(full - red) / max(abs(full), abs(red)))
    gaps = np.asarray(gaps)
    return gaps if return_all else float(gaps.max())


def oracle_steering_fd(rng, n_cases, derivative, step=1e-6, wavelength=0.0107):
    """Worst relative error of ``derivative(positions, theta, wavelength)`` against central differences."""
    worst = 0.0
    for _ in range(n_cases):
        M = int(rng.integers(1, 13))
        pos = rng.uniform(0, 20 * wavelength, M)
        theta = rng.uniform(0.05, np.pi / 2 - 0.05)
        fd = (_phases(pos, theta + step, wavelength) - _phases(pos, theta - step, wavelength)) / (2 * step)
        got = np.asarray(derivative(pos, theta, wavelength))
        worst = max(worst, float(np.linalg.norm(got - fd) / max(np.linalg.norm(fd), 1e-300)))
    return worst


def complexity_formula(l_max, N, M_t, M_r, eps, T_max, P) -> float:
    """Reference evaluation of the worst-case operation count."""
    return l_max * (pow(2 * N, 3.5) + pow(N * M_t * M_t, 3.5)) * np.log(1 / eps) + N * T_max * P * (M_t + M_r)


def grid_cells(D, D_min, step) -> int:
    return _grid_pairs(D, D_min, step).shape[0] ** 2


__all__ = [
    "OracleConfig", "LayoutProblem", "oracle_beamforming", "oracle_layout_grid", "oracle_crb_equivalence",
    "oracle_steering_fd", "crb_pair", "complexity_formula", "grid_cells", "MAX_GRID_CELLS",
]
