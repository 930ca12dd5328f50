"""UAV-target geometry and linear-array steering vectors.

All functions broadcast over leading axes, so a whole (slot, target) grid can
be processed at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COS_SNAP = 1e-15


def distance(q, q_k, H):
    """Slant range between a UAV at horizontal position ``q`` (altitude ``H``) and a ground target."""
    diff = np.asarray(q, dtype=float) - np.asarray(q_k, dtype=float)
    return np.sqrt(np.sum(diff * diff, axis=-1) + H * H)


def aod(q, q_k, H):
    """Vertical angle of departure toward a target, in ``(0, pi/2]``."""
    ratio = np.minimum(H / distance(q, q_k, H), 1.0)
    return np.arcsin(ratio)


def cos_aod(theta):
    """``cos(theta)`` with the rounding residue at ``theta = pi/2`` (about 6e-17) snapped to 0."""
    c = np.cos(np.asarray(theta, dtype=float))
    return np.where(np.abs(c) < COS_SNAP, 0.0, c)


def steering(positions, theta, wavelength):
    """Steering vector ``exp(j 2pi/lambda * p_i * sin(theta))``.

    ``theta`` may carry leading axes; the element axis is appended last.
    """
    p = np.asarray(positions, dtype=float)
    th = np.asarray(theta, dtype=float)[..., None]
    return np.exp(1j * (2.0 * np.pi / wavelength) * p * np.sin(th))


def steering_derivative(positions, theta, wavelength):
    """Derivative of :func:`steering` with respect to ``theta``."""
    p = np.asarray(positions, dtype=float)
    th = np.asarray(theta, dtype=float)[..., None]
    k = 2.0 * np.pi / wavelength
    return 1j * k * p * cos_aod(th) * np.exp(1j * k * p * np.sin(th))


def aperture_term(y):
    """Centred second moment ``y^T (I - 11^T/M) y`` of the receive positions (m^2)."""
    y = np.asarray(y, dtype=float)
    c = y - y.mean(axis=-1, keepdims=True)
    return np.sum(c * c, axis=-1)


@dataclass(frozen=True, eq=False)
class SteeringContext:
    theta: float
    d: float
    a: np.ndarray
    b: np.ndarray
    a_dot: np.ndarray
    b_dot: np.ndarray

    @classmethod
    def build(cls, q, q_k, H, x, y, wavelength) -> "SteeringContext":
        th = float(aod(q, q_k, H))
        return cls(
            theta=th,
            d=float(distance(q, q_k, H)),
            a=steering(x, th, wavelength),
            b=steering(y, th, wavelength),
            a_dot=steering_derivative(x, th, wavelength),
            b_dot=steering_derivative(y, th, wavelength),
        )
