"""Passive bistatic radar delay-Doppler estimation and first-order error analysis."""

__version__ = "0.1.0"
