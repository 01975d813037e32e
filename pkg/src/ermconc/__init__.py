"""Concentration of empirical risk minimizers: bound calculators, example
problems with assumption verifiers, and a Monte Carlo harness."""

__version__ = "0.1.0"

from .core import PointSet, RngSpec, SampleBatch, EstimationProblem, set_distance, check_triangle
from .bounds import ConcentrationParams, DerivedConstants, derive_constants, theorem_bound, corollary_b2a1_probability

__all__ = [
    "__version__", "PointSet", "RngSpec", "SampleBatch", "EstimationProblem", "set_distance", "check_triangle",
    "ConcentrationParams", "DerivedConstants", "derive_constants", "theorem_bound", "corollary_b2a1_probability",
]
