"""Orientation representations, SO(3) machinery and representation benchmarks."""

__version__ = "0.1.0"
