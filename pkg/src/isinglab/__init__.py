"""Computational laboratory for critical planar Ising spin-pattern probabilities."""

from .constants import ALPHA, BETA_C, MU
from .lattice import DomainSpec, DomainGraph, DoubleCover, discretize

__all__ = [
    "ALPHA",
    "BETA_C",
    "MU",
    "DomainSpec",
    "DomainGraph",
    "DoubleCover",
    "discretize",
]
