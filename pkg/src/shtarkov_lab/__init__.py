"""Exact minimax sequential probability assignment under log loss."""

__version__ = "1.0.0"
