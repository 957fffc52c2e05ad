"""Semiclassical wavepackets and micro-support on the circle."""
__version__ = "0.1.0"
