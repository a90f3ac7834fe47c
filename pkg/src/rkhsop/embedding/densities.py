"""Named probability densities on subsets of the real line."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .. import grammar
from ..errors import GrammarError
from ..kernels import Interval

NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class DensitySpec:
    """Base class; subclasses define ``support`` and ``_pdf``."""

    def __call__(self, x):
        return self.pdf(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = self.support.contains(x)
        safe = np.where(inside, x, self._inside_point)
        value = np.where(inside, self._pdf(safe), 0.0)
        return float(value) if value.ndim == 0 else value

    @property
    def support(self) -> Interval:
        raise NotImplementedError

    @property
    def _inside_point(self) -> float:
        s = self.support
        if math.isfinite(s.lo) and math.isfinite(s.hi):
            return 0.5 * (s.lo + s.hi)
        if math.isfinite(s.lo):
            return s.lo + 1.0
        if math.isfinite(s.hi):
            return s.hi - 1.0
        return 0.0

    @property
    def id(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.id

    def check_normalization(self, tol: float = 1e-9) -> float:
        """Integrate the density with the library's own improper integrator."""
        from .improper import ExhaustionSpec, improper

        report = improper(self.pdf, ExhaustionSpec(self.support), tol=tol)
        if report.verdict != "converged" or abs(report.limit - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"{self.id} does not integrate to 1 (got {report.limit})")
        return report.limit


@dataclass(frozen=True)
class Uniform(DensitySpec):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("uniform(a, b) needs finite a < b")
        self.check_normalization()

    @property
    def support(self):
        return Interval(self.a, self.b, True, True)

    @property
    def id(self):
        return f"uniform({grammar.fmt(self.a)}, {grammar.fmt(self.b)})"

    def _pdf(self, x):
        return np.full_like(x, 1.0 / (self.b - self.a))


@dataclass(frozen=True)
class InvSquare(DensitySpec):
    """p(x) = x^-2 on [1, inf)."""

    def __post_init__(self):
        self.check_normalization()

    @property
    def support(self):
        return Interval(1.0, math.inf, True, False)

    @property
    def id(self):
        return "inv_square"

    def _pdf(self, x):
        return 1.0 / (x * x)


@dataclass(frozen=True)
class Pareto(DensitySpec):
    """p(x) = alpha x^-(alpha + 1) on [1, inf); ``alpha = 1`` is ``inv_square``."""

    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("pareto(alpha) needs alpha > 0")
        # normalized in closed form; a numerical check would crawl for small alpha

    @property
    def support(self):
        return Interval(1.0, math.inf, True, False)

    @property
    def id(self):
        return f"pareto({grammar.fmt(self.alpha)})"

    def _pdf(self, x):
        return self.alpha * x ** (-self.alpha - 1.0)


@dataclass(frozen=True)
class TruncatedGaussian(DensitySpec):
    """Centered normal with standard deviation ``sigma`` restricted to [a, b]."""

    a: float = -math.inf
    b: float = math.inf
    sigma: float = 1.0
    _mass: float = field(init=False, repr=False, compare=False, default=1.0)

    def __post_init__(self):
        if not (self.a < self.b and self.sigma > 0):
            raise ValueError("truncated_gaussian(a, b, sigma) needs a < b and sigma > 0")
        mass = float(ndtr(self.b / self.sigma) - ndtr(self.a / self.sigma))
        if mass <= 0:
            raise ValueError("truncation window carries no probability mass")
        object.__setattr__(self, "_mass", mass)
        self.check_normalization()

    @property
    def support(self):
        return Interval(self.a, self.b, math.isfinite(self.a), math.isfinite(self.b))

    @property
    def id(self):
        return (
            f"truncated_gaussian({grammar.fmt(self.a)}, {grammar.fmt(self.b)}, "
            f"{grammar.fmt(self.sigma)})"
        )

    def _pdf(self, x):
        z = x / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi) * self._mass)


def parse_density(text) -> DensitySpec:
    """Build a density from ``uniform(a,b)``, ``inv_square``, ``pareto(alpha)`` or ``truncated_gaussian(a,b,sigma)``."""
    if isinstance(text, DensitySpec):
        return text
    call = grammar.parse_call(text)
    if call.name == "uniform":
        bound = grammar.bind(call, ("a", "b"), {"a": 0.0, "b": 1.0})
        return Uniform(grammar.number(bound["a"], "a"), grammar.number(bound["b"], "b"))
    if call.name == "inv_square":
        grammar.bind(call, ())
        return InvSquare()
    if call.name == "pareto":
        bound = grammar.bind(call, ("alpha",))
        return Pareto(grammar.number(bound["alpha"], "alpha"))
    if call.name == "truncated_gaussian":
        bound = grammar.bind(call, ("a", "b", "sigma"), {"sigma": 1.0})
        return TruncatedGaussian(
            grammar.number(bound["a"], "a"),
            grammar.number(bound["b"], "b"),
            grammar.number(bound["sigma"], "sigma"),
        )
    raise GrammarError(f"unknown density {call.name!r}")
