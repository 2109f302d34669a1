"""Crack imaging in the unit disk with single- and multi-frequency
topological derivatives."""

__version__ = "0.1.0"
