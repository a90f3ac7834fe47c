"""Representers of composition operators in reproducing kernel Hilbert spaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    GrammarError,
    HypothesisNotMet,
    KernelMismatch,
    NegativeDiagonal,
    NoConvergence,
    NonFinite,
    RegularityError,
    RKHSError,
    SingularSystem,
)
from .expansions import Deriv, Embed, Expansion, Value, cauchy_distance2, eval_expansion, inner, norm2  # noqa: E402
from .kernels import Brownian, Gaussian, KernelSpec, RankOneOsc, ScaledGaussian, parse_kernel  # noqa: E402
from .operators import (  # noqa: E402
    ConvergenceReport,
    OperatorSpec,
    apply,
    exact_representer,
    gram_entry,
    loeve_table,
    parse_operator,
    parse_sequence,
    representer,
    representer_cauchy_decay,
)
from .regression import Model, Observation, assemble_gram, fit, predict  # noqa: E402

__all__ = [
    "Brownian",
    "ConvergenceReport",
    "Deriv",
    "DomainError",
    "Embed",
    "Expansion",
    "Gaussian",
    "GrammarError",
    "HypothesisNotMet",
    "KernelMismatch",
    "KernelSpec",
    "Model",
    "NegativeDiagonal",
    "NoConvergence",
    "NonFinite",
    "Observation",
    "OperatorSpec",
    "RKHSError",
    "RankOneOsc",
    "RegularityError",
    "ScaledGaussian",
    "SingularSystem",
    "Value",
    "apply",
    "assemble_gram",
    "cauchy_distance2",
    "eval_expansion",
    "exact_representer",
    "fit",
    "gram_entry",
    "inner",
    "loeve_table",
    "norm2",
    "parse_kernel",
    "parse_operator",
    "parse_sequence",
    "predict",
    "representer",
    "representer_cauchy_decay",
]
