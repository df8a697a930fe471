"""Finite p-groups with involution: structure, cohomology and decision checks"""

__version__ = "0.1.0"
