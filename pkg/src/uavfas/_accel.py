"""Kernel backend selection.

The hot loops (swarm fitness, the PSO inner loop) exist twice: a numba
``@njit`` version and a vectorised numpy version. Numba is used when it
imports and ``UAVFAS_NO_NUMBA`` is unset or ``0``.
"""
import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("UAVFAS_NO_NUMBA", "0").lower() in ("", "0", "false", "no")


def njit(*args, **kwargs):
    if NUMBA_AVAILABLE:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda f: f
