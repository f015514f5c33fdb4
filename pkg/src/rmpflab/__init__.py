"""rmpflab: RMP-trees, geometric dynamical system leaves, experiments and numerical checks."""

from .rmp import CanonicalRmp, NaturalRmp, RmpNode, RmpTree, least_squares_reference, pullback, resolve
from .gds import CurvaturePair, GdsLeaf, gds_natural_rmp
from .taskmaps import TaskMap, TaskMapDomainError, PlanarArm

__version__ = "0.1.0"

__all__ = [
    "CanonicalRmp", "NaturalRmp", "RmpNode", "RmpTree", "least_squares_reference", "pullback",
    "resolve", "CurvaturePair", "GdsLeaf", "gds_natural_rmp", "TaskMap", "TaskMapDomainError",
    "PlanarArm",
]
