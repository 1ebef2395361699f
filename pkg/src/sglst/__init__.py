"""Particle-filter tracking with group-sparse local patch codes."""

from .boxes import BoundingBox
from .coder import SGLSTCoder
from .evaluation import auc, ope_run, overlap, success_curve
from .features import PatchFeatureExtractor
from .projections import project_nonneg, project_simplex
from .solver import Dictionary, SolverConfig, precompute, solve, solve_batch
from .tracker import SGLSTTracker

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Dictionary",
    "PatchFeatureExtractor",
    "SGLSTCoder",
    "SGLSTTracker",
    "SolverConfig",
    "auc",
    "ope_run",
    "overlap",
    "precompute",
    "project_nonneg",
    "project_simplex",
    "solve",
    "solve_batch",
    "success_curve",
]
