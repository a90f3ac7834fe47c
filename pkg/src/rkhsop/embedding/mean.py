"""Mean embeddings of densities and the integrability diagnostics that gate them."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    HypothesisNotMet,
    KernelMismatch,
    NegativeDiagonal,
    NoConvergence,
    RegularityError,
)
from ..kernels import EPS_PSD, Interval, KernelSpec
from .densities import DensitySpec
from .improper import (
    CONVERGED,
    ExhaustionSpec,
    ImproperIntegralReport,
    _new_pieces,
    improper,
    improper_2d,
)
from .quadrature import integrate_batch

DEFAULT_TOL = 1e-8


def integration_domain(k: KernelSpec, p: DensitySpec) -> Interval:
    return k.domain.intersect(p.support)


def standard_variation(
    k: KernelSpec, p: DensitySpec, tol: float = DEFAULT_TOL, *, c: float = 1.0, r: float = 2.0
) -> ImproperIntegralReport:
    """Report for the integral of sqrt(K(x, x)) p(x)."""

    def integrand(x):
        diag = k.eval(x, x)
        if np.any(diag < -EPS_PSD):
            raise NegativeDiagonal(f"K(x, x) < 0 at {np.asarray(x)[diag < -EPS_PSD][:3].tolist()}")
        return np.sqrt(np.maximum(diag, 0.0)) * p.pdf(x)

    exh = ExhaustionSpec(integration_domain(k, p), c, r)
    return improper(
        integrand, exh, tol, breakpoints=k.features, scale=k.scale, nonnegative=True,
        label=f"standard_variation[{k.id}, {p.id}]",
    )


def abs_condition(
    k: KernelSpec, p: DensitySpec, tol: float = DEFAULT_TOL, *, c: float = 1.0, r: float = 2.0
) -> ImproperIntegralReport:
    """Report for the double integral of |K(x, y)| p(x) p(y) over square stages.

    The integrand is nonnegative, so convergence along one exhaustion
    settles every exhaustion.
    """

    def integrand(x, y):
        return np.abs(k.eval(x, y)) * p.pdf(x) * p.pdf(y)

    exh = ExhaustionSpec(integration_domain(k, p), c, r)
    return improper_2d(
        integrand, exh, tol=tol, scale=k.scale, x_points=k.features, y_points=k.features,
        nonnegative=True, label=f"abs_condition[{k.id}, {p.id}]",
    )


@dataclass(eq=False)
class EmbeddingResult:
    """A computed mean embedding ``mu_p(x) = int K(x, y) p(y) dy``.

    ``norm2`` and the diagnostics are fixed at construction. Point values are
    computed on demand and cached, so the same ``x`` always yields the same
    float within a process.
    """

    kernel: KernelSpec
    density: DensitySpec
    tol: float
    exhaustion: ExhaustionSpec
    abs_report: ImproperIntegralReport
    norm2_report: ImproperIntegralReport
    std_report: ImproperIntegralReport | None = None
    _cache: dict = field(default_factory=dict, repr=False)
    _dcache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def norm2(self) -> float:
        return self.norm2_report.limit

    @property
    def id(self) -> str:
        return f"embed[{self.kernel.id}, {self.density.id}]"

    def __call__(self, x):
        return self._cached(x, self._cache, self.kernel._k)

    def deriv(self, x):
        """Derivative of mu_p, i.e. the integral of dK/dx1(x, y) p(y)."""
        if not self.kernel.regularity.c1:
            raise RegularityError(f"{self.kernel.id} is not C^1")
        return self._cached(x, self._dcache, self.kernel._d1)

    def _cached(self, x, cache, fn):
        xs = np.asarray(x, dtype=float)
        self.kernel.domain.check(xs, "x")
        flat = xs.ravel()
        with self._lock:
            missing = sorted({v for v in flat.tolist() if v not in cache})
        if missing:
            values = self._integrate(np.asarray(missing), fn)
            with self._lock:
                for key, val in zip(missing, values):
                    cache.setdefault(key, float(val))
        with self._lock:
            out = np.array([cache[v] for v in flat.tolist()])
        return float(out[0]) if xs.ndim == 0 else out.reshape(xs.shape)

    def _integrate(self, xs: np.ndarray, fn) -> np.ndarray:
        """Improper integral of fn(x, y) p(y) dy for a batch of x, stage by stage."""
        k, p, tol = self.kernel, self.density, self.tol
        n = xs.size
        increments = []
        done = np.zeros(n, bool)
        small_run = np.zeros(n, int)
        partial = np.zeros(n)
        prev = None
        for st in self.exhaustion.stages():
            idx = np.flatnonzero(~done)
            pieces = _new_pieces(prev, st)
            lo = np.repeat([a for a, _ in pieces], idx.size)
            hi = np.repeat([b for _, b in pieces], idx.size)
            owner = np.tile(idx, len(pieces))
            bps = [(xs[i], *k.features) for i in owner]
            abs_tol = 0.05 * tol * (1.0 + np.abs(partial[owner]))
            vals, _ = integrate_batch(
                lambda m, y: fn(xs[owner[m]][:, None], y) * p.pdf(y),
                lo, hi, abs_tol=abs_tol, breakpoints=bps, scale=k.scale,
            )
            inc = np.zeros(n)
            np.add.at(inc, owner, vals)
            increments.append(inc)
            before = partial.copy()
            partial = np.array([math.fsum(col) for col in zip(*increments)])
            prev = st
            if st.final:
                done[:] = True
                break
            if len(increments) >= 2:
                small = np.abs(inc) < tol * (1.0 + np.abs(before))
                small_run = np.where(small, small_run + 1, 0)
                done |= small_run >= 2
            if done.all():
                break
        if not done.all():
            raise NoConvergence(f"{self.id}: embedding value did not settle at {xs[~done][:3].tolist()}")
        return partial

    def inner_with(self, other: "EmbeddingResult") -> float:
        """<mu_p, mu_q> for two embeddings in the same RKHS."""
        if other is self:
            return self.norm2
        if other.kernel != self.kernel:
            raise KernelMismatch(f"{self.kernel.id} vs {other.kernel.id}")
        k, p, q = self.kernel, self.density, other.density
        report = improper_2d(
            lambda x, y: k._k(x, y) * p.pdf(x) * q.pdf(y),
            self.exhaustion, other.exhaustion, tol=min(self.tol, other.tol), scale=k.scale,
            x_points=k.features, y_points=k.features, nonnegative=k.nonnegative,
        )
        if report.verdict != CONVERGED:
            raise NoConvergence(f"cross term {self.id} x {other.id}: {report.verdict}")
        return report.limit


def mean_embedding(
    k: KernelSpec,
    p: DensitySpec,
    tol: float = DEFAULT_TOL,
    *,
    c: float = 1.0,
    r: float = 2.0,
    abs_report: ImproperIntegralReport | None = None,
    with_standard_variation: bool = False,
) -> EmbeddingResult:
    """Build mu_p after checking that |K| p p is integrable.

    Raises :class:`HypothesisNotMet` when the absolute integral is not
    established as convergent.
    """
    abs_report = abs_report or abs_condition(k, p, tol, c=c, r=r)
    if abs_report.verdict != CONVERGED:
        raise HypothesisNotMet(
            f"|K| p p is not shown integrable for {k.id} / {p.id} ({abs_report.verdict})"
        )
    exh = ExhaustionSpec(integration_domain(k, p), c, r)
    if k.nonnegative:
        norm2_report = abs_report
    else:
        norm2_report = improper_2d(
            lambda x, y: k._k(x, y) * p.pdf(x) * p.pdf(y), exh, tol=tol, scale=k.scale,
            x_points=k.features, y_points=k.features, label=f"norm2[{k.id}, {p.id}]",
        )
        if norm2_report.verdict != CONVERGED:
            raise NoConvergence(f"signed double integral did not settle: {norm2_report.verdict}")
    std = standard_variation(k, p, tol, c=c, r=r) if with_standard_variation else None
    return EmbeddingResult(k, p, tol, exh, abs_report, norm2_report, std)


def expectation(f, emb: EmbeddingResult) -> float:
    """E_p[f(X)] computed as the inner product <f, mu_p>."""
    from ..expansions import Embed, Expansion, inner

    return inner(f, Expansion(emb.kernel, ((1.0, Embed(emb)),)))
