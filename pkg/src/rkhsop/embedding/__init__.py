"""Improper Riemann integration and mean embeddings."""

from .densities import DensitySpec, InvSquare, Pareto, TruncatedGaussian, Uniform, parse_density
from .improper import (
    CONVERGED,
    DIVERGED,
    INCONCLUSIVE,
    ExhaustionSpec,
    ImproperIntegralReport,
    improper,
    improper_2d,
)
from .mean import (
    EmbeddingResult,
    abs_condition,
    expectation,
    integration_domain,
    mean_embedding,
    standard_variation,
)
from .quadrature import MeshControl, integrate, integrate_2d, integrate_batch, riemann

__all__ = [
    "CONVERGED",
    "DIVERGED",
    "INCONCLUSIVE",
    "DensitySpec",
    "EmbeddingResult",
    "ExhaustionSpec",
    "ImproperIntegralReport",
    "InvSquare",
    "MeshControl",
    "Pareto",
    "TruncatedGaussian",
    "Uniform",
    "abs_condition",
    "expectation",
    "improper",
    "improper_2d",
    "integrate",
    "integrate_2d",
    "integrate_batch",
    "integration_domain",
    "mean_embedding",
    "parse_density",
    "riemann",
    "standard_variation",
]
