"""Entropy-based strategies for multi-bracket prediction pools."""

__version__ = "0.1.0"
