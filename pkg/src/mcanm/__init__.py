"""Multichannel frequency estimation by atomic norm minimization."""

__version__ = "0.1.0"
