"""Whitening, min-sum and survey propagation for random-graph coloring."""

__version__ = "0.1.0"
