"""Comparison schemes: fixed sparse/dense uniform arrays and transmit-only FA optimisation."""
from __future__ import annotations

import enum

import numpy as np


class SchemeId(str, enum.Enum):
    PROPOSED = "proposed"
    TFAO = "tfao"
    SULA = "sula"
    DULA = "dula"

    @classmethod
    def parse(cls, value) -> "SchemeId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; choose from {[s.value for s in cls]}") from None


def sula_layout(M, D, D_min=None) -> np.ndarray:
    """``M`` elements spread uniformly over ``[0, D]`` (largest possible uniform spacing)."""
    if M < 2:
        raise ValueError("need at least two elements")
    spacing = D / (M - 1)
    if D_min is not None and spacing < D_min * (1 - 1e-12):
        raise ValueError(f"uniform spacing {spacing:.4g} m below D_min {D_min:.4g} m")
    x = np.arange(M) * spacing
    x[-1] = D
    return x


def dula_layout(M, wavelength, D=None) -> np.ndarray:
    """Half-wavelength uniform array anchored at 0."""
    x = np.arange(M) * (wavelength / 2.0)
    if D is not None and x[-1] > D * (1 + 1e-12):
        raise ValueError(f"half-wavelength array span {x[-1]:.4g} m exceeds aperture {D:.4g} m")
    return x


def run_scheme(scheme, scenario, workers=1, tfao_rx="dula", progress=None):
    """Solve one scheme end to end.

    ``tfao_rx`` picks the frozen receive geometry of the transmit-only scheme
    (``"dula"`` or ``"sula"``).
    """
    from .pipeline import run_ao

    return run_ao(scenario, scheme=SchemeId.parse(scheme), workers=workers, tfao_rx=tfao_rx, progress=progress)
