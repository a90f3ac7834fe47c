"""Catalog of analytic 1-D kernels with hand-coded derivatives.

Every kernel exposes ``K``, ``dK/dx1``, ``dK/dx2`` and the cross derivative
``d2K/dx1dx2`` in closed form. All functions broadcast over numpy arrays and
return a plain ``float`` when both arguments are scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grammar
from .errors import DomainError, GrammarError, RegularityError

EPS_PSD = 1e-8


@dataclass(frozen=True)
class Interval:
    """A real interval, possibly unbounded, with open/closed ends."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo_ok = x >= self.lo if self.lo_closed else x > self.lo
        hi_ok = x <= self.hi if self.hi_closed else x < self.hi
        return lo_ok & hi_ok

    def check(self, x, what: str = "point") -> None:
        inside = self.contains(x)
        if not np.all(inside):
            bad = np.asarray(x, dtype=float)[~inside] if np.ndim(x) else x
            raise DomainError(f"{what} {np.ravel(bad)[:5].tolist()} outside {self}")

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo or (self.lo == other.lo and not self.lo_closed):
            lo, lo_closed = self.lo, self.lo_closed
        else:
            lo, lo_closed = other.lo, other.lo_closed
        if self.hi < other.hi or (self.hi == other.hi and not self.hi_closed):
            hi, hi_closed = self.hi, self.hi_closed
        else:
            hi, hi_closed = other.hi, other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __str__(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{grammar.fmt(self.lo)}, {grammar.fmt(self.hi)}{right}"


REAL_LINE = Interval()


@dataclass(frozen=True)
class Regularity:
    c1: bool
    cross_derivative_on_diagonal: bool
    c2: bool


def _out(value, *args):
    if all(np.ndim(a) == 0 for a in args):
        return float(value)
    return value


@dataclass(frozen=True)
class KernelSpec:
    """Base class. Subclasses implement ``_k``, ``_d1``, ``_d12`` and ``_d11``."""

    domain: Interval = field(default=REAL_LINE, init=False)
    regularity: Regularity = field(default=Regularity(True, True, True), init=False)

    #: length scale used to grade quadrature panels near features
    @property
    def scale(self) -> float:
        return 1.0

    #: points (besides the diagonal) where the kernel has fine structure
    @property
    def features(self) -> tuple[float, ...]:
        return ()

    #: K >= 0 on the whole domain, so |K| = K
    @property
    def nonnegative(self) -> bool:
        return True

    @property
    def id(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.id

    def _prepare(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.domain.check(x, "x")
        self.domain.check(y, "y")
        return x, y

    def __call__(self, x, y):
        return self.eval(x, y)

    def eval(self, x, y):
        xa, ya = self._prepare(x, y)
        return _out(self._k(xa, ya), x, y)

    def d1(self, x, y):
        """Partial derivative in the first argument."""
        if not self.regularity.c1:
            raise RegularityError(f"{self.id} is not C^1")
        xa, ya = self._prepare(x, y)
        return _out(self._d1(xa, ya), x, y)

    def d2(self, x, y):
        """Partial derivative in the second argument."""
        if not self.regularity.c1:
            raise RegularityError(f"{self.id} is not C^1")
        xa, ya = self._prepare(x, y)
        return _out(self._d1(ya, xa), x, y)

    def d12(self, x, y):
        if not self.regularity.cross_derivative_on_diagonal:
            raise RegularityError(f"{self.id} has no continuous cross derivative near the diagonal")
        xa, ya = self._prepare(x, y)
        return _out(self._d12(xa, ya), x, y)

    def d11(self, x, y):
        """Second derivative in the first argument; needs a C^2 kernel."""
        if not self.regularity.c2:
            raise RegularityError(f"{self.id} is not C^2")
        xa, ya = self._prepare(x, y)
        return _out(self._d11(xa, ya), x, y)

    def gram(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).ravel()
        return self.eval(pts[:, None], pts[None, :])


@dataclass(frozen=True)
class Gaussian(KernelSpec):
    """exp(-(x - y)^2 / l^2) on the real line."""

    length_scale: float = 1.0

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError("length scale must be positive")

    @property
    def id(self):
        return f"gaussian(l={grammar.fmt(self.length_scale)})"

    @property
    def scale(self):
        return self.length_scale

    def _k(self, x, y):
        return np.exp(-((x - y) ** 2) / self.length_scale**2)

    def _d1(self, x, y):
        l2 = self.length_scale**2
        return -2.0 * (x - y) / l2 * self._k(x, y)

    def _d12(self, x, y):
        l2 = self.length_scale**2
        r = x - y
        return (2.0 / l2 - 4.0 * r * r / (l2 * l2)) * self._k(x, y)

    def _d11(self, x, y):
        l2 = self.length_scale**2
        r = x - y
        return (4.0 * r * r / (l2 * l2) - 2.0 / l2) * self._k(x, y)


def _osc_parts(x):
    """x, a safe stand-in and 1/x; points where 1/x overflows are treated as 0."""
    x = np.asarray(x, dtype=float)
    zero = np.abs(x) < _TINY
    safe = np.where(zero, 1.0, x)
    return zero, safe, 1.0 / safe


_TINY = 1.0 / np.finfo(float).max


def osc(x):
    """f(x) = x^4 sin(1/x), extended by f(0) = 0."""
    zero, safe, inv = _osc_parts(x)
    return np.where(zero, 0.0, safe**4 * np.sin(inv))


def osc_prime(x):
    """f'(x) = 4x^3 sin(1/x) - x^2 cos(1/x), with f'(0) = 0."""
    zero, safe, inv = _osc_parts(x)
    value = 4.0 * safe**3 * np.sin(inv) - safe**2 * np.cos(inv)
    return np.where(zero, 0.0, value)


def osc_second(x):
    """f''(x); exists everywhere (f''(0) = 0) but has no limit at 0."""
    zero, safe, inv = _osc_parts(x)
    value = 12.0 * safe**2 * np.sin(inv) - 6.0 * safe * np.cos(inv) - np.sin(inv)
    return np.where(zero, 0.0, value)


@dataclass(frozen=True)
class RankOneOsc(KernelSpec):
    """f(x) f(y) with f(x) = x^4 sin(1/x): cross derivative continuous, not C^2."""

    regularity: Regularity = field(default=Regularity(True, True, False), init=False)

    @property
    def id(self):
        return "rank_one_osc"

    @property
    def features(self):
        return (0.0,)

    @property
    def nonnegative(self):
        return False

    def _k(self, x, y):
        return osc(x) * osc(y)

    def _d1(self, x, y):
        return osc_prime(x) * osc(y)

    def _d12(self, x, y):
        return osc_prime(x) * osc_prime(y)

    def _d11(self, x, y):  # pragma: no cover - guarded by the c2 flag
        raise RegularityError("rank_one_osc is not C^2")


@dataclass(frozen=True)
class ScaledGaussian(KernelSpec):
    """x y exp(-(x - y)^2) on [1, inf)."""

    domain: Interval = field(default=Interval(1.0, math.inf, True, False), init=False)

    @property
    def id(self):
        return "scaled_gaussian"

    def _k(self, x, y):
        return x * y * np.exp(-((x - y) ** 2))

    def _d1(self, x, y):
        r = x - y
        return y * (1.0 - 2.0 * x * r) * np.exp(-r * r)

    def _d12(self, x, y):
        r = x - y
        a = 1.0 - 2.0 * x * r
        return (a + 2.0 * x * y + 2.0 * y * r * a) * np.exp(-r * r)

    def _d11(self, x, y):
        r = x - y
        return 2.0 * y * (2.0 * x * r * r - 3.0 * r - y) * np.exp(-r * r)


@dataclass(frozen=True)
class Brownian(KernelSpec):
    """min(x, y) on (0, inf); not differentiable on the diagonal."""

    domain: Interval = field(default=Interval(0.0, math.inf, False, False), init=False)
    regularity: Regularity = field(default=Regularity(False, False, False), init=False)

    @property
    def id(self):
        return "brownian"

    def _k(self, x, y):
        return np.minimum(x, y)


def eval(k: KernelSpec, x, y):  # noqa: A001 - mirrors the documented operation name
    return k.eval(x, y)


def d1(k: KernelSpec, x, y):
    return k.d1(x, y)


def d2(k: KernelSpec, x, y):
    return k.d2(x, y)


def d12(k: KernelSpec, x, y):
    return k.d12(x, y)


def psd_spot_check(k: KernelSpec, points) -> float:
    """Smallest eigenvalue of the Gram matrix on ``points``.

    Callers compare the result against ``-EPS_PSD``.
    """
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0 or pts.size > 64:
        raise ValueError("psd_spot_check takes between 1 and 64 points")
    if np.unique(pts).size != pts.size:
        raise ValueError("points must be pairwise distinct")
    gram = k.gram(pts)
    return float(np.linalg.eigvalsh(0.5 * (gram + gram.T))[0])


_CATALOG = {
    "gaussian": (Gaussian, ("l",), {"l": 1.0}),
    "rank_one_osc": (RankOneOsc, (), {}),
    "scaled_gaussian": (ScaledGaussian, (), {}),
    "brownian": (Brownian, (), {}),
}


def parse_kernel(text) -> KernelSpec:
    """Build a kernel from ``gaussian(l=1.0)``, ``rank_one_osc``, ...

    Names are case-insensitive; anything outside the catalog is an error.
    """
    if isinstance(text, KernelSpec):
        return text
    call = grammar.parse_call(text)
    if call.name not in _CATALOG:
        raise GrammarError(f"unknown kernel {call.name!r}; choose from {sorted(_CATALOG)}")
    cls, names, defaults = _CATALOG[call.name]
    bound = grammar.bind(call, names, defaults)
    if cls is Gaussian:
        return Gaussian(grammar.number(bound["l"], "gaussian length scale"))
    return cls()
