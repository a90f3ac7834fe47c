"""Improper Riemann integrals computed along an exhaustion by growing intervals."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoConvergence
from ..kernels import Interval
from .quadrature import integrate_2d, integrate_batch

DIVERGENCE_CAP = 1e12
GROWTH_STAGES = 5
CONVERGED, DIVERGED, INCONCLUSIVE = "converged", "diverged", "inconclusive"


@dataclass(frozen=True)
class Stage:
    index: int
    lo: float
    hi: float
    final: bool


@dataclass(frozen=True)
class ExhaustionSpec:
    """Stages ``E_s = [max(a, -c r^s), min(b, c r^s)]`` of a domain ``[a, b]``.

    Finite endpoints of the domain belong to every stage; midpoint nodes never
    touch them, so open ends are fine as long as the integrand stays bounded.
    """

    domain: Interval
    c: float = 1.0
    r: float = 2.0
    max_stage: int = 60

    def __post_init__(self):
        if not (self.c > 0 and self.r > 1):
            raise ValueError("exhaustion needs c > 0 and r > 1")

    def stage(self, s: int) -> tuple[float, float]:
        reach = self.c * self.r**s
        return max(self.domain.lo, -reach), min(self.domain.hi, reach)

    def stages(self):
        prev = None
        for s in range(self.max_stage + 1):
            lo, hi = self.stage(s)
            if hi <= lo or (lo, hi) == prev:
                continue
            final = lo == self.domain.lo and hi == self.domain.hi
            yield Stage(s, lo, hi, final)
            prev = (lo, hi)
            if final:
                return

    def describe(self) -> dict:
        return {"domain": str(self.domain), "c": self.c, "r": self.r, "max_stage": self.max_stage}


@dataclass(frozen=True)
class ImproperIntegralReport:
    stages: tuple[Stage, ...]
    partials: tuple[float, ...]
    abs_partials: tuple[float, ...]
    verdict: str
    limit: float | None
    tol: float
    exhaustion: dict = field(default_factory=dict)
    label: str = ""
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "verdict": self.verdict,
            "limit": self.limit,
            "tol": self.tol,
            "exhaustion": self.exhaustion,
            "note": self.note,
            "stages": [
                {"stage": st.index, "lo": st.lo, "hi": st.hi, "partial": p, "abs_partial": a}
                for st, p, a in zip(self.stages, self.partials, self.abs_partials)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["stage", "I_s", "abs_I_s"])
        for st, p, a in zip(self.stages, self.partials, self.abs_partials):
            writer.writerow([st.index, f"{p:.17g}", f"{a:.17g}"])
        return buf.getvalue()


def _new_pieces(prev: Stage | None, st: Stage):
    """Intervals making up ``E_s`` minus ``E_{s-1}``."""
    if prev is None:
        return [(st.lo, st.hi)]
    pieces = []
    if st.lo < prev.lo:
        pieces.append((st.lo, prev.lo))
    if prev.hi < st.hi:
        pieces.append((prev.hi, st.hi))
    return pieces


def _new_rectangles(prev_x, st_x, prev_y, st_y):
    """Rectangles tiling ``E_s^x x E_s^y`` minus the previous stage's rectangle."""
    if prev_x is None:
        return [((st_x.lo, st_x.hi), (st_y.lo, st_y.hi))]
    rects = []
    for xr in _new_pieces(prev_x, st_x):
        rects.append((xr, (st_y.lo, st_y.hi)))
    for yr in _new_pieces(prev_y, st_y):
        rects.append(((prev_x.lo, prev_x.hi), yr))
    return rects


def _run(stage_iter, increment, tol, label, exhaustion):
    """Drive the stage loop; ``increment(prev, stage, current)`` returns (signed, absolute)."""
    stages, incs, abs_incs, partials, abs_partials = [], [], [], [], []
    small_run = 0
    verdict, limit, note = INCONCLUSIVE, None, ""
    prev = None
    for st in stage_iter:
        current = partials[-1] if partials else 0.0
        try:
            inc, abs_inc = increment(prev, st, current)
        except NoConvergence as exc:
            if not partials:
                raise
            note = f"stage {st.index}: {exc}"
            break
        stages.append(st)
        incs.append(inc)
        abs_incs.append(abs_inc)
        partials.append(math.fsum(incs))
        abs_partials.append(math.fsum(abs_incs))
        total, abs_total = partials[-1], abs_partials[-1]
        prev = st

        if st.final:
            verdict, limit = CONVERGED, total
            break
        if abs(total) > DIVERGENCE_CAP or abs_total > DIVERGENCE_CAP:
            verdict = DIVERGED
            break
        if len(partials) >= 2:
            small = abs(inc) < tol * (1.0 + abs(current))
            small_run = small_run + 1 if small else 0
            if small_run >= 2:
                verdict, limit = CONVERGED, total
                break
        # unbounded monotone growth is only diagnosable for sign-definite integrands
        definite = abs(abs_total - abs(total)) <= 1e-12 * abs_total + 1e-300
        if definite and len(abs_incs) > GROWTH_STAGES:
            tail = abs_incs[-GROWTH_STAGES:]
            base = abs_partials[-GROWTH_STAGES - 1]
            growing = all(b >= (1.0 - 1e-3) * a for a, b in zip(tail[:-1], tail[1:]))
            never_small = all(a >= tol * (1.0 + base) for a in tail)
            if growing and never_small:
                verdict = DIVERGED
                break
    return ImproperIntegralReport(
        stages=tuple(stages),
        partials=tuple(partials),
        abs_partials=tuple(abs_partials),
        verdict=verdict,
        limit=limit,
        tol=tol,
        exhaustion=exhaustion,
        label=label,
        note=note,
    )


def improper(
    integrand,
    exh: ExhaustionSpec,
    tol: float = 1e-8,
    *,
    breakpoints=(),
    scale: float = 1.0,
    nonnegative: bool = False,
    label: str = "",
) -> ImproperIntegralReport:
    """Improper integral of a vectorized ``integrand`` over ``exh.domain``.

    Stage partials are accumulated from the integrals over the newly added
    pieces, so partials of a nonnegative integrand never decrease.
    Converged once two consecutive increments are below ``tol * (1 + |I|)``;
    Diverged on unbounded monotone growth or when the cap is breached;
    Inconclusive when the stage budget runs out.
    """

    def increment(prev, st, current):
        pieces = _new_pieces(prev, st)
        n = len(pieces)
        lo = [p[0] for p in pieces]
        hi = [p[1] for p in pieces]
        abs_tol = 0.05 * tol * (1.0 + abs(current))
        if nonnegative:
            vals, _ = integrate_batch(
                lambda member, x: integrand(x), lo, hi, abs_tol=abs_tol,
                breakpoints=[breakpoints] * n, scale=scale, nonnegative=True,
            )
            s = math.fsum(vals)
            return s, s

        def both(member, x):
            v = integrand(x)
            return np.where((member >= n)[:, None], np.abs(v), v)

        vals, _ = integrate_batch(
            both, lo + lo, hi + hi, abs_tol=abs_tol, breakpoints=[breakpoints] * (2 * n),
            scale=scale,
        )
        return math.fsum(vals[:n]), math.fsum(vals[n:])

    return _run(exh.stages(), increment, tol, label, exh.describe())


def _zip_stages(exh_x: ExhaustionSpec, exh_y: ExhaustionSpec):
    """Pair the stages of two exhaustions by index (rectangle stages)."""
    xs = {st.index: st for st in exh_x.stages()}
    ys = {st.index: st for st in exh_y.stages()}
    last_x = last_y = None
    for s in range(max(exh_x.max_stage, exh_y.max_stage) + 1):
        last_x = xs.get(s, last_x)
        last_y = ys.get(s, last_y)
        if last_x is None or last_y is None:
            continue
        if s not in xs and s not in ys:
            continue
        yield s, last_x, last_y


def improper_2d(
    g,
    exh_x: ExhaustionSpec,
    exh_y: ExhaustionSpec | None = None,
    tol: float = 1e-8,
    *,
    scale: float = 1.0,
    x_points=(),
    y_points=(),
    diagonal: bool = True,
    nonnegative: bool = False,
    label: str = "",
) -> ImproperIntegralReport:
    """Improper integral of ``g(x, y)`` along rectangle stages ``E_s x F_s``.

    With a single exhaustion the stages are the squares ``E_s x E_s``.
    """
    exh_y = exh_y or exh_x
    pairs = list(_zip_stages(exh_x, exh_y))
    lookup = {}
    combined = []
    for s, sx, sy in pairs:
        st = Stage(s, min(sx.lo, sy.lo), max(sx.hi, sy.hi), sx.final and sy.final)
        lookup[s] = (sx, sy)
        combined.append(st)

    def increment(prev, st, current):
        sx, sy = lookup[st.index]
        px, py = lookup[prev.index] if prev is not None else (None, None)
        rects = _new_rectangles(px, sx, py, sy)
        abs_tol = 0.05 * tol * (1.0 + abs(current)) / max(len(rects), 1)
        signed, absolute = [], []
        for xr, yr in rects:
            v, _ = integrate_2d(
                g, xr, yr, abs_tol=abs_tol, scale=scale, x_points=x_points,
                y_points=y_points, diagonal=diagonal, nonnegative=nonnegative,
            )
            signed.append(v)
            if nonnegative:
                absolute.append(v)
            else:
                a, _ = integrate_2d(
                    lambda x, y: np.abs(g(x, y)), xr, yr, abs_tol=abs_tol, scale=scale,
                    x_points=x_points, y_points=y_points, diagonal=diagonal, nonnegative=True,
                )
                absolute.append(a)
        return math.fsum(signed), math.fsum(absolute)

    desc = {"x": exh_x.describe(), "y": exh_y.describe(), "shape": "rectangle stages"}
    return _run(iter(combined), increment, tol, label, desc)
