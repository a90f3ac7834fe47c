"""Adaptive composite-midpoint quadrature on bounded intervals.

Each panel is integrated with the midpoint rule on ``m``, ``2m`` and ``4m``
nodes; two Richardson steps give the panel value and an error estimate.
Panels whose estimate is too large are bisected (the mesh halves) until the
summed estimate meets the tolerance. Panels start out graded geometrically
away from breakpoints so that narrow features, such as the ridge of a
kernel along the diagonal, are seen by the very first pass.

The engine is batched: one call integrates ``B`` related integrands at once,
which is what makes iterated 2-D integration affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NoConvergence, NonFinite

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MeshControl:
    """Knobs for :func:`riemann`."""

    tol: float = 1e-8
    rel_tol: float = 0.0
    nodes: int = 4
    max_refinements: int = 48
    scale: float = 1.0
    breakpoints: tuple = ()
    nonnegative: bool = False


def graded_cuts(lo: float, hi: float, points=(), scale: float = 1.0) -> np.ndarray:
    """Panel boundaries on ``[lo, hi]``, geometrically graded from every breakpoint.

    Widths grow as ``scale * 2**k`` moving away from ``lo``, ``hi`` and each
    interior breakpoint, so the number of panels is logarithmic in the length.
    """
    inner = sorted({float(p) for p in points if lo < p < hi})
    knots = [lo, *inner, hi]
    cuts = [lo]
    for a, b in zip(knots[:-1], knots[1:]):
        half = 0.5 * (b - a)
        offsets = []
        w = scale
        while w < half:
            offsets.append(w)
            w *= 2.0
        left = [a + o for o in offsets]
        right = [b - o for o in reversed(offsets)]
        cuts.extend(left)
        if b - a > 2.0 * scale:
            cuts.append(a + half)
        cuts.extend(right)
        cuts.append(b)
    return np.unique(np.asarray(cuts, dtype=float))


def _panel_rule(f, member, a, b, m, nonnegative):
    width = b - a
    t = np.concatenate([(np.arange(k) + 0.5) / k for k in (m, 2 * m, 4 * m)])
    nodes = a[:, None] + width[:, None] * t[None, :]
    values = np.asarray(f(member, nodes), dtype=float)
    if values.shape != nodes.shape:
        values = np.broadcast_to(values, nodes.shape)
    if not np.all(np.isfinite(values)):
        bad = nodes[~np.isfinite(values)][:3]
        raise NonFinite(f"integrand is not finite at {bad.tolist()}")
    m1 = width * values[:, :m].mean(axis=1)
    m2 = width * values[:, m : 3 * m].mean(axis=1)
    m4 = width * values[:, 3 * m :].mean(axis=1)
    # two Richardson steps on the midpoint sums (h^2 then h^4 error terms)
    r1 = m2 + (m2 - m1) / 3.0
    r2 = m4 + (m4 - m2) / 3.0
    est = r2 + (r2 - r1) / 15.0
    if nonnegative:
        est = np.maximum(est, 0.0)
    l1 = width * np.abs(values[:, 3 * m :]).mean(axis=1)
    noise = 64.0 * _EPS * l1
    err = np.maximum(np.abs(r2 - r1) / 15.0 - noise, 0.0)
    return est, err, l1


def integrate_batch(
    f,
    lo,
    hi,
    *,
    abs_tol: float,
    rel_tol: float = 0.0,
    breakpoints=None,
    scale: float = 1.0,
    nodes: int = 4,
    max_refinements: int = 48,
    nonnegative: bool = False,
    max_panels: int = 1_000_000,
):
    """Integrate ``B`` integrands over ``[lo[b], hi[b]]``.

    ``f(member, x)`` receives an integer array ``member`` of shape ``(P,)``
    telling which integrand each row of the node array ``x`` (shape
    ``(P, n)``) belongs to, and returns values of the same shape as ``x``.

    A member is done once its summed error estimate is below
    ``max(abs_tol, rel_tol * integral of |f|)``.

    Returns ``(values, errors)``, two arrays of shape ``(B,)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    n_members = lo.size
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
        raise ValueError("integrate_batch needs bounded intervals")
    if np.any(hi < lo):
        raise ValueError("interval with hi < lo")

    pa, pb, pm = [], [], []
    for b in range(n_members):
        if hi[b] == lo[b]:
            continue
        pts = () if breakpoints is None else breakpoints[b]
        cuts = graded_cuts(lo[b], hi[b], pts, scale)
        pa.append(cuts[:-1])
        pb.append(cuts[1:])
        pm.append(np.full(cuts.size - 1, b))
    if not pa:
        return np.zeros(n_members), np.zeros(n_members)
    A = np.concatenate(pa)
    Bv = np.concatenate(pb)
    M = np.concatenate(pm)
    EST, ERR, L1 = _panel_rule(f, M, A, Bv, nodes, nonnegative)

    for _ in range(max_refinements + 1):
        tot_err = np.bincount(M, ERR, minlength=n_members)
        tot_l1 = np.bincount(M, L1, minlength=n_members)
        count = np.bincount(M, minlength=n_members)
        target = np.maximum(abs_tol, rel_tol * tot_l1)
        pending = tot_err > target
        if not pending.any():
            break
        share = target / np.maximum(count, 1)
        width_floor = 8.0 * _EPS * np.maximum(np.abs(A), np.abs(Bv))
        split = pending[M] & (ERR > share[M]) & ((Bv - A) > width_floor)
        if not split.any():
            raise NoConvergence("quadrature error cannot be reduced further (round-off floor)")
        if A.size + split.sum() > max_panels:
            raise NoConvergence(f"more than {max_panels} panels needed")
        mid = 0.5 * (A[split] + Bv[split])
        na = np.concatenate([A[split], mid])
        nb = np.concatenate([mid, Bv[split]])
        nm = np.concatenate([M[split], M[split]])
        est, err, l1 = _panel_rule(f, nm, na, nb, nodes, nonnegative)
        keep = ~split
        A = np.concatenate([A[keep], na])
        Bv = np.concatenate([Bv[keep], nb])
        M = np.concatenate([M[keep], nm])
        EST = np.concatenate([EST[keep], est])
        ERR = np.concatenate([ERR[keep], err])
        L1 = np.concatenate([L1[keep], l1])
    else:
        raise NoConvergence(f"no convergence after {max_refinements} refinements")

    order = np.argsort(M, kind="stable")
    bounds = np.searchsorted(M[order], np.arange(n_members + 1))
    est_sorted = EST[order]
    values = np.array([math.fsum(est_sorted[bounds[b] : bounds[b + 1]]) for b in range(n_members)])
    errors = np.bincount(M, ERR, minlength=n_members)
    return values, errors


def integrate(f, a: float, b: float, *, abs_tol: float = 1e-10, rel_tol: float = 0.0, **kwargs):
    """Integrate a vectorized scalar function ``f(x)`` over ``[a, b]``; returns ``(value, error)``."""
    values, errors = integrate_batch(
        lambda member, x: f(x), [a], [b], abs_tol=abs_tol, rel_tol=rel_tol,
        breakpoints=[kwargs.pop("breakpoints", ())], **kwargs,
    )
    return float(values[0]), float(errors[0])


def riemann(integrand, interval, mesh_control: MeshControl | None = None) -> float:
    """Composite midpoint quadrature of ``integrand`` over a bounded ``interval``.

    Raises :class:`NonFinite` on NaN/inf at a node and :class:`NoConvergence`
    when ``mesh_control.max_refinements`` halvings are not enough.
    """
    mc = mesh_control or MeshControl()
    a, b = (float(v) for v in interval)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("riemann() integrates over bounded intervals only; see improper()")
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    value, _ = integrate(
        integrand, a, b, abs_tol=mc.tol, rel_tol=mc.rel_tol, nodes=mc.nodes,
        max_refinements=mc.max_refinements, scale=mc.scale, breakpoints=mc.breakpoints,
        nonnegative=mc.nonnegative,
    )
    return sign * value


def integrate_2d(
    g,
    xrange,
    yrange,
    *,
    abs_tol: float,
    rel_tol: float = 0.0,
    scale: float = 1.0,
    x_points=(),
    y_points=(),
    diagonal: bool = True,
    nonnegative: bool = False,
):
    """Iterated integral of ``g(x, y)`` over a rectangle.

    The inner integral over ``y`` is batched across all outer nodes. With
    ``diagonal`` set, ``y = x`` is an inner breakpoint and the ends of the
    ``y`` range are outer breakpoints, so a ridge along the diagonal is
    always resolved.
    """
    x0, x1 = (float(v) for v in xrange)
    y0, y1 = (float(v) for v in yrange)
    if x1 <= x0 or y1 <= y0:
        return 0.0, 0.0
    inner_abs = 0.1 * abs_tol / (x1 - x0)
    inner_rel = max(0.1 * rel_tol, 1e-13) if rel_tol else 1e-13
    y_points = tuple(y_points)

    def outer(member, xs):
        flat = xs.ravel()
        if diagonal:
            bps = [(*y_points, x) for x in flat]
        else:
            bps = [y_points] * flat.size
        vals, _ = integrate_batch(
            lambda mem, ys: g(flat[mem][:, None], ys),
            np.full(flat.size, y0), np.full(flat.size, y1),
            abs_tol=inner_abs, rel_tol=inner_rel, breakpoints=bps, scale=scale,
            nonnegative=nonnegative,
        )
        return vals.reshape(xs.shape)

    outer_points = tuple(x_points) + ((y0, y1) if diagonal else ())
    return integrate(
        lambda xs: outer(None, xs), x0, x1, abs_tol=abs_tol, rel_tol=rel_tol,
        breakpoints=outer_points, scale=scale, nonnegative=nonnegative,
    )
