"""Simulation of phase-encoded quantum links over long interferometers,
time-bin interferometers and few-mode fiber with photonic lanterns."""

__version__ = "0.1.0"
