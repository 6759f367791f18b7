"""Finite models of ample groupoids: groups, groupoids, partial actions, graph groupoids and coarse spaces."""

__version__ = "0.1.0"
