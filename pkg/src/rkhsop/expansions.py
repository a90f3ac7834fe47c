"""Finite elements of an RKHS and their exact inner-product algebra.

An :class:`Expansion` is a weighted list of atoms:

* ``Value(c)``  stands for ``K(c, .)``;
* ``Deriv(c)``  stands for ``dK/dx1(c, .)``;
* ``Embed(mu)`` stands for a mean embedding ``mu_p``.

Inner products reduce to kernel evaluations through the reproducing
identities, e.g. ``<Deriv(c), Value(d)> = dK/dx1(c, d)`` and
``<Deriv(c), Deriv(d)> = d2K/dx1dx2(c, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import KernelMismatch, RegularityError
from .kernels import EPS_PSD, KernelSpec, parse_kernel

# Above this many atom pairs, pairwise (numpy) summation replaces fsum.
_FSUM_LIMIT = 4096


@dataclass(frozen=True)
class Value:
    center: float


@dataclass(frozen=True)
class Deriv:
    center: float


@dataclass(frozen=True, eq=False)
class Embed:
    embedding: object  # EmbeddingResult; kept untyped to avoid an import cycle


Atom = Union[Value, Deriv, Embed]


@dataclass(frozen=True)
class Expansion:
    kernel: KernelSpec
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((float(w), atom) for w, atom in self.terms)
        for _, atom in terms:
            _check_atom(self.kernel, atom)
        object.__setattr__(self, "terms", terms)

    def __call__(self, x):
        return eval_expansion(self, x)

    def __add__(self, other):
        return combine(1.0, self, 1.0, other)

    def __sub__(self, other):
        return combine(1.0, self, -1.0, other)

    def __mul__(self, a):
        return combine(float(a), self, 0.0, Expansion(self.kernel))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __len__(self):
        return len(self.terms)

    @classmethod
    def value(cls, kernel, center, weight=1.0):
        return cls(kernel, ((weight, Value(float(center))),))

    @classmethod
    def deriv(cls, kernel, center, weight=1.0):
        return cls(kernel, ((weight, Deriv(float(center))),))

    @classmethod
    def embed(cls, embedding, weight=1.0):
        return cls(embedding.kernel, ((weight, Embed(embedding)),))


def _check_atom(k: KernelSpec, atom) -> None:
    if isinstance(atom, Value):
        k.domain.check(atom.center, "center")
    elif isinstance(atom, Deriv):
        if not k.regularity.cross_derivative_on_diagonal:
            raise RegularityError(f"dK/dx1(c, .) is not known to lie in the RKHS of {k.id}")
        k.domain.check(atom.center, "center")
    elif isinstance(atom, Embed):
        if atom.embedding.kernel != k:
            raise KernelMismatch(f"embedding built on {atom.embedding.kernel.id}, expansion on {k.id}")
    else:
        raise TypeError(f"not an atom: {atom!r}")


def _same_kernel(e1: Expansion, e2: Expansion) -> None:
    if e1.kernel != e2.kernel:
        raise KernelMismatch(f"{e1.kernel.id} vs {e2.kernel.id}")


def _split(e: Expansion):
    """Group terms by kind: (weights, centers) for Value and Deriv, list for Embed."""
    vw, vc, dw, dc, emb = [], [], [], [], []
    for w, atom in e.terms:
        if isinstance(atom, Value):
            vw.append(w)
            vc.append(atom.center)
        elif isinstance(atom, Deriv):
            dw.append(w)
            dc.append(atom.center)
        else:
            emb.append((w, atom.embedding))
    return (np.array(vw), np.array(vc)), (np.array(dw), np.array(dc)), emb


def _weighted_sum(products: np.ndarray) -> float:
    flat = np.ravel(products)
    if flat.size <= _FSUM_LIMIT:
        return math.fsum(flat.tolist())
    return float(np.sum(flat))


def _block(k, fn, w1, c1, w2, c2) -> float:
    if w1.size == 0 or w2.size == 0:
        return 0.0
    return _weighted_sum(w1[:, None] * w2[None, :] * fn(c1[:, None], c2[None, :]))


def inner(e1: Expansion, e2: Expansion) -> float:
    """Bilinear inner product, summed term by term with compensated summation."""
    _same_kernel(e1, e2)
    k = e1.kernel
    (vw1, vc1), (dw1, dc1), emb1 = _split(e1)
    (vw2, vc2), (dw2, dc2), emb2 = _split(e2)
    parts = [
        _block(k, k._k, vw1, vc1, vw2, vc2),
        # <Deriv(c), Value(d)> = dK/dx1(c, d)
        _block(k, k._d1, dw1, dc1, vw2, vc2),
        _block(k, lambda a, b: k._d1(b, a), vw1, vc1, dw2, dc2),
    ]
    if dw1.size and dw2.size:
        parts.append(_block(k, k._d12, dw1, dc1, dw2, dc2))
    for w, mu in emb1:
        if vw2.size:
            parts.append(w * _weighted_sum(vw2 * mu(vc2)))
        if dw2.size:
            parts.append(w * _weighted_sum(dw2 * mu.deriv(dc2)))
        for w2, nu in emb2:
            parts.append(w * w2 * mu.inner_with(nu))
    for w2, nu in emb2:
        if vw1.size:
            parts.append(w2 * _weighted_sum(vw1 * nu(vc1)))
        if dw1.size:
            parts.append(w2 * _weighted_sum(dw1 * nu.deriv(dc1)))
    return math.fsum(parts)


def norm2(e: Expansion, eps: float = EPS_PSD) -> float:
    """Squared norm; round-off negatives down to ``-eps`` are clamped to 0."""
    value = inner(e, e)
    if -eps <= value < 0.0:
        return 0.0
    return value


def eval_expansion(e: Expansion, x):
    """Evaluate ``e`` at ``x`` through ``<e, K(x, .)>``."""
    if np.ndim(x) == 0:
        return inner(e, Expansion.value(e.kernel, x))
    xs = np.asarray(x, dtype=float)
    e.kernel.domain.check(xs, "x")
    flat = xs.ravel()
    return np.array([inner(e, Expansion(e.kernel, ((1.0, Value(v)),))) for v in flat]).reshape(xs.shape)


def combine(a: float, e1: Expansion, b: float, e2: Expansion) -> Expansion:
    """``a e1 + b e2`` as a concatenated term list (no simplification)."""
    _same_kernel(e1, e2)
    terms = tuple((a * w, atom) for w, atom in e1.terms) + tuple((b * w, atom) for w, atom in e2.terms)
    return Expansion(e1.kernel, terms)


def cauchy_distance2(e1: Expansion, e2: Expansion) -> float:
    """``||e1 - e2||^2`` expanded as ``<e1,e1> + <e2,e2> - 2 <e1,e2>``."""
    return inner(e1, e1) + inner(e2, e2) - 2.0 * inner(e1, e2)


def to_dict(e: Expansion) -> dict:
    terms = []
    for w, atom in e.terms:
        if isinstance(atom, Value):
            terms.append({"weight": w, "kind": "value", "center": atom.center})
        elif isinstance(atom, Deriv):
            terms.append({"weight": w, "kind": "deriv", "center": atom.center})
        else:
            emb = atom.embedding
            terms.append({"weight": w, "kind": "embed", "density": emb.density.id, "tol": emb.tol})
    return {"kernel": e.kernel.id, "terms": terms}


def from_dict(doc: dict) -> Expansion:
    k = parse_kernel(doc["kernel"])
    terms = []
    for t in doc["terms"]:
        kind = t["kind"]
        if kind == "value":
            terms.append((t["weight"], Value(float(t["center"]))))
        elif kind == "deriv":
            terms.append((t["weight"], Deriv(float(t["center"]))))
        elif kind == "embed":
            from .embedding import mean_embedding, parse_density

            emb = mean_embedding(k, parse_density(t["density"]), float(t.get("tol", 1e-8)))
            terms.append((t["weight"], Embed(emb)))
        else:
            raise ValueError(f"unknown atom kind {kind!r}")
    return Expansion(k, tuple(terms))


def dumps(e: Expansion) -> str:
    from .serialize import dumps17

    return dumps17(to_dict(e))


def loads(text: str) -> Expansion:
    import json

    return from_dict(json.loads(text))
