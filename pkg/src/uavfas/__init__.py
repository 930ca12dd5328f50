"""Trajectory, beamforming and fluid-antenna layout optimisation for UAV multi-target sensing."""

__version__ = "0.1.0"
