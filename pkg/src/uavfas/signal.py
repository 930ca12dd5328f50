"""Waveform and echo simulation.

Used only to check the statistical assumptions of the sensing model (sample
covariance converging to ``R``); the optimisation pipeline works with ``R``
analytically.
"""
from __future__ import annotations

import numpy as np


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def hermitian_sqrt(R, rel_floor=1e-12, psd_tol=1e-10):
    R = np.asarray(R, dtype=complex)
    Rh = 0.5 * (R + R.conj().T)
    w, V = np.linalg.eigh(Rh)
    scale = max(float(np.real(np.trace(Rh))), 0.0)
    if w.size and w.min() < -psd_tol * max(scale, np.finfo(float).tiny):
        raise ValueError(f"covariance is not PSD (min eigenvalue {w.min():.3e})")
    w = np.where(w < rel_floor * scale, 0.0, w)
    return (V * np.sqrt(w)) @ V.conj().T


def sample_waveform(R, N_bar, rng) -> np.ndarray:
    """Draw ``N_bar`` i.i.d. circularly-symmetric Gaussian frames with covariance ``R``.

    Returns the ``M_t x N_bar`` frame block.
    """
    S = hermitian_sqrt(R)
    return S @ _crandn(rng, (S.shape[0], int(N_bar)))


def sample_covariance(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    return (X @ X.conj().T) / X.shape[1]


def response_matrix(alpha_k, d, b, a) -> np.ndarray:
    return (alpha_k / (2.0 * d)) * np.outer(b, np.conj(a))


def simulate_echo(W_k, X, sigma2_r, rng) -> np.ndarray:
    """Received echo ``W_k X + noise`` with per-entry noise variance ``sigma2_r``."""
    Y = np.asarray(W_k) @ np.asarray(X)
    if sigma2_r > 0:
        Y = Y + np.sqrt(sigma2_r) * _crandn(rng, Y.shape)
    return Y
