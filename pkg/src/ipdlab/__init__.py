"""Iterated prisoner's dilemma laboratory."""

__version__ = "0.1.0"
