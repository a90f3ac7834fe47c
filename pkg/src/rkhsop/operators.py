"""Combinations of composition operators and the convergence of their representers.

An operator ``L = sum_i alpha_i T_{v_i}`` acts by ``Lf(x) = sum_i alpha_i f(v_i(x))``.
Its representer at ``x`` is ``sum_i alpha_i K(v_i(x), .)``, which is *not*
``L`` applied to ``K(x, .)``. For a sequence ``L_n`` the representers converge
in the RKHS exactly when the double sequence
``u[n, m] = <rep(L_n, x), rep(L_m, x)>`` has a joint limit, which
:func:`loeve_table` tabulates and judges numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grammar
from .errors import DomainError, GrammarError
from .expansions import Deriv, Embed, Expansion, Value
from .kernels import KernelSpec

TOL_CONV = 1e-3
DIVERGENCE_CAP = 1e12
MIN_STEP = 2.0**-26
CONVERGED, DIVERGED, INCONCLUSIVE = "converged", "diverged", "inconclusive"


# -- maps ---------------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    def __call__(self, x):
        return x

    def __str__(self):
        return "identity"


@dataclass(frozen=True)
class Shift:
    u: float

    def __call__(self, x):
        return x + self.u

    def __str__(self):
        return f"shift({grammar.fmt(self.u)})"


@dataclass(frozen=True)
class Scale:
    s: float

    def __call__(self, x):
        return self.s * x

    def __str__(self):
        return f"scale({grammar.fmt(self.s)})"


@dataclass(frozen=True)
class Affine:
    """x -> a x + b; ``a = 0`` gives a constant map."""

    a: float
    b: float

    def __call__(self, x):
        return self.a * x + self.b

    def __str__(self):
        return f"affine({grammar.fmt(self.a)}, {grammar.fmt(self.b)})"


@dataclass(frozen=True)
class OperatorSpec:
    terms: tuple

    def __post_init__(self):
        terms = tuple((float(a), v) for a, v in self.terms)
        if not terms:
            raise ValueError("an operator needs at least one term")
        object.__setattr__(self, "terms", terms)

    @property
    def q(self) -> int:
        return len(self.terms)

    def points(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        alphas = np.array([a for a, _ in self.terms])
        pts = np.array([v(float(x)) for _, v in self.terms], dtype=float)
        return alphas, pts

    def __str__(self):
        if self.q == 1 and self.terms[0][0] == 1.0:
            return str(self.terms[0][1])
        inner = ", ".join(f"({grammar.fmt(a)}, {v})" for a, v in self.terms)
        return f"combo([{inner}])"


IDENTITY = OperatorSpec(((1.0, Identity()),))


def _check_points(domain, pts, what="v_i(x)"):
    inside = domain.contains(pts)
    if not np.all(inside):
        raise DomainError(f"{what} = {pts[~inside].tolist()} outside {domain}")


def apply(op: OperatorSpec, f, x: float, domain=None) -> float:
    """``sum_i alpha_i f(v_i(x))`` for a vectorized callable ``f``."""
    alphas, pts = op.points(x)
    if domain is None:
        domain = getattr(getattr(f, "kernel", None), "domain", None)
    if domain is not None:
        _check_points(domain, pts)
    values = np.asarray(f(pts), dtype=float)
    return math.fsum((alphas * values).tolist())


def representer(op: OperatorSpec, k: KernelSpec, x: float) -> Expansion:
    """``sum_i alpha_i K(v_i(x), .)``."""
    alphas, pts = op.points(x)
    _check_points(k.domain, pts)
    return Expansion(k, tuple((a, Value(float(p))) for a, p in zip(alphas, pts)))


def apply_to_kernel_section(op: OperatorSpec, k: KernelSpec, x: float):
    """``L(K(x, .))``, i.e. ``y -> sum_i alpha_i K(x, v_i(y))``; differs from the representer."""

    def section(y):
        y = np.asarray(y, dtype=float)
        total = np.zeros_like(y)
        for a, v in op.terms:
            total = total + a * k.eval(x, v(y))
        return total

    return section


def gram_entry(opA: OperatorSpec, opB: OperatorSpec, k: KernelSpec, x: float, y: float) -> float:
    """``sum_ij alphaA_i alphaB_j K(vA_i(x), vB_j(y))`` with compensated summation."""
    a, pa = opA.points(x)
    b, pb = opB.points(y)
    _check_points(k.domain, pa)
    _check_points(k.domain, pb)
    products = a[:, None] * b[None, :] * k._k(pa[:, None], pb[None, :])
    if products.size <= 4096:
        return math.fsum(products.ravel().tolist())
    return float(np.sum(products))


def exact_representer(family: str, k: KernelSpec, x_or_density, tol: float = 1e-8) -> Expansion:
    """Limit representer: ``dK/dx1(x, .)`` for ``derivative``, ``mu_p`` for ``embedding``."""
    if family == "derivative":
        return Expansion(k, ((1.0, Deriv(float(x_or_density))),))
    if family == "embedding":
        from .embedding import EmbeddingResult, mean_embedding

        emb = x_or_density
        if not isinstance(emb, EmbeddingResult):
            emb = mean_embedding(k, x_or_density, tol)
        return Expansion(k, ((1.0, Embed(emb)),))
    raise ValueError(f"unknown family {family!r}")


# -- sequences ----------------------------------------------------------------


@dataclass(frozen=True)
class DerivativeDiff:
    """``L_n = (T_{x + u_n} - T_x) / u_n`` with ``u_n = base**-n`` or ``1/n``."""

    base: float = 2.0
    harmonic: bool = False

    def step(self, n: int) -> float:
        return 1.0 / n if self.harmonic else self.base ** (-n)

    def at(self, n: int) -> OperatorSpec:
        u = self.step(n)
        return OperatorSpec(((1.0 / u, Shift(u)), (-1.0 / u, Identity())))

    def max_index(self) -> int:
        if self.harmonic:
            return int(1.0 / MIN_STEP)
        return int(math.floor(-math.log(MIN_STEP) / math.log(self.base) + 1e-9))

    def __str__(self):
        return "seq.derivative(step=harmonic)" if self.harmonic else f"seq.derivative(base={grammar.fmt(self.base)})"


@dataclass(frozen=True)
class Averaging:
    """``L_n = sum_{i=1..n} (1/n) T_{x -> (i/n) x}``."""

    def at(self, n: int) -> OperatorSpec:
        return OperatorSpec(tuple((1.0 / n, Scale(i / n)) for i in range(1, n + 1)))

    def max_index(self) -> int:
        return 1 << 30

    def __str__(self):
        return "seq.averaging"


@dataclass(frozen=True)
class RiemannQuadrature:
    """Riemann sums of ``p`` on ``[a, b]``: weights ``(v_i - v_{i-1}) p(v_i)`` on constant maps."""

    a: float
    b: float
    density: object = None

    def at(self, n: int) -> OperatorSpec:
        nodes = self.a + (self.b - self.a) * np.arange(n + 1) / n
        right = nodes[1:]
        widths = np.diff(nodes)
        weights = widths if self.density is None else widths * self.density.pdf(right)
        return OperatorSpec(tuple((float(w), Affine(0.0, float(v))) for w, v in zip(weights, right)))

    def max_index(self) -> int:
        return 1 << 30

    def __str__(self):
        dens = "" if self.density is None else f", {self.density.id}"
        return f"seq.quadrature({grammar.fmt(self.a)}, {grammar.fmt(self.b)}{dens})"


@dataclass(frozen=True)
class ConstantSequence:
    op: OperatorSpec = IDENTITY

    def at(self, n: int) -> OperatorSpec:
        return self.op

    def max_index(self) -> int:
        return 1 << 30

    def __str__(self):
        return f"seq.constant({self.op})"


# -- convergence analysis -----------------------------------------------------


@dataclass(frozen=True)
class ConvergenceReport:
    x: float
    indices: tuple
    table: np.ndarray = field(repr=False)
    verdict: str
    limit: float | None
    oscillations: tuple
    diagnostics: dict = field(default_factory=dict)

    def cell(self, n: int, m: int) -> float:
        return float(self.table[self.indices.index(n), self.indices.index(m)])

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "indices": list(self.indices),
            "verdict": self.verdict,
            "limit": self.limit,
            "oscillations": list(self.oscillations),
            "diagnostics": self.diagnostics,
            "table": [list(map(float, row)) for row in self.table],
        }


def _window_oscillations(table: np.ndarray, idx: list[int]):
    """Tail oscillation for three growing prefix windows of the index range.

    For a window ``[n_lo, N]`` the oscillation is
    ``max |u[n, m] - u[N, N]|`` over ``n, m >= (n_lo + N) / 2``.
    """
    n_lo, n_hi = idx[0], idx[-1]
    span = n_hi - n_lo
    ends = sorted({n_lo + max(2, round(span * k / 3)) for k in (1, 2)} | {n_hi})
    out = []
    for end in ends:
        stop = idx.index(end)
        mid = (n_lo + end + 1) // 2
        start = next(i for i, n in enumerate(idx) if n >= mid)
        block = table[start : stop + 1, start : stop + 1]
        out.append((end, float(np.max(np.abs(block - table[stop, stop])))))
    return out


def loeve_table(
    seq,
    k: KernelSpec,
    x: float,
    n_lo: int,
    n_hi: int,
    *,
    tol_conv: float = TOL_CONV,
    divergence_cap: float = DIVERGENCE_CAP,
) -> ConvergenceReport:
    """Tabulate ``u[n, m] = <rep(L_n, x), rep(L_m, x)>`` on ``[n_lo, n_hi]^2`` and judge it.

    Converged when the tail oscillation shrinks across three growing windows
    and ends below ``tol_conv``; Diverged when a cell passes
    ``divergence_cap`` or ``|u[N, N]|`` grows without slowing down across
    the window ends; otherwise Inconclusive. Row-first and column-first sections are kept
    in the diagnostics because iterated limits can exist without a joint one.
    """
    if n_lo < 1:
        raise ValueError("n_lo must be >= 1")
    if n_hi < n_lo + 4:
        raise ValueError("the window needs at least five indices (n_hi >= n_lo + 4)")
    diagnostics = {"sequence": str(seq), "kernel": k.id}
    cap = seq.max_index()
    if n_hi > cap:
        diagnostics["n_hi_requested"] = n_hi
        n_hi = cap
        if n_hi < n_lo + 4:
            raise ValueError(f"step floor {MIN_STEP} leaves no usable window")
    idx = list(range(n_lo, n_hi + 1))
    ops = [seq.at(n) for n in idx]
    pts = []
    for op in ops:
        alphas, p = op.points(x)
        _check_points(k.domain, p)
        pts.append((alphas, p))

    size = len(idx)
    table = np.empty((size, size))
    small = max(len(a) for a, _ in pts) ** 2 <= 64
    for i in range(size):
        a, pa = pts[i]
        for j in range(0 if small else i, size):
            b, pb = pts[j]
            products = a[:, None] * b[None, :] * k._k(pa[:, None], pb[None, :])
            if products.size <= 4096:
                table[i, j] = math.fsum(products.ravel().tolist())
            else:
                table[i, j] = float(np.sum(products))
            if not small:
                table[j, i] = table[i, j]

    osc = _window_oscillations(table, idx)
    values = [o for _, o in osc]
    noise = 1e-12 * max(1.0, float(np.max(np.abs(table))))
    # |u| along the diagonal at the start and at each window end
    diag_ends = [abs(table[0, 0])] + [abs(table[idx.index(e), idx.index(e)]) for e, _ in osc]
    growth = np.diff(diag_ends)
    if not np.all(np.isfinite(table)) or np.max(np.abs(table)) > divergence_cap:
        verdict, limit = DIVERGED, None
    elif all(b <= a + noise for a, b in zip(values[:-1], values[1:])) and values[-1] < tol_conv:
        verdict, limit = CONVERGED, float(table[-1, -1])
    elif np.all(growth > noise) and np.all(growth[1:] >= growth[:-1]) and values[-1] > tol_conv:
        # |u| keeps growing and the growth is not slowing down
        verdict, limit = DIVERGED, None
    else:
        verdict, limit = INCONCLUSIVE, None

    mid = (n_lo + n_hi + 1) // 2
    start = idx.index(mid)
    row_first = table[:, -1]
    col_first = table[-1, :]
    diag = np.diag(table)
    diagnostics.update(
        {
            "row_first": row_first.tolist(),
            "col_first": col_first.tolist(),
            "diagonal": diag.tolist(),
            "iterated_row_first": float(row_first[start]),
            "iterated_col_first": float(col_first[start]),
            "iterated_gap": float(np.max(np.abs(row_first[start:] - diag[start:]))),
            "max_oscillation": values[-1],
            "window_ends": [e for e, _ in osc],
        }
    )
    return ConvergenceReport(
        x=float(x), indices=tuple(idx), table=table, verdict=verdict, limit=limit,
        oscillations=tuple(values), diagnostics=diagnostics,
    )


def representer_cauchy_decay(seq, k: KernelSpec, x: float, indices) -> list[float]:
    """``||rep(L_{n_{j+1}}, x) - rep(L_{n_j}, x)||^2`` from three Gram entries each."""
    indices = list(indices)
    if any(b <= a for a, b in zip(indices[:-1], indices[1:])):
        raise ValueError("indices must be increasing")
    out = []
    for a, b in zip(indices[:-1], indices[1:]):
        La, Lb = seq.at(a), seq.at(b)
        out.append(gram_entry(Lb, Lb, k, x, x) + gram_entry(La, La, k, x, x) - 2.0 * gram_entry(La, Lb, k, x, x))
    return out


# -- grammar ------------------------------------------------------------------


def _parse_map(node) -> object:
    if not isinstance(node, grammar.Call):
        raise GrammarError(f"expected a map, got {node!r}")
    if node.name == "identity":
        grammar.bind(node, ())
        return Identity()
    if node.name == "shift":
        return Shift(grammar.number(grammar.bind(node, ("u",))["u"], "u"))
    if node.name == "scale":
        return Scale(grammar.number(grammar.bind(node, ("s",))["s"], "s"))
    if node.name in ("affine", "const"):
        if node.name == "const":
            return Affine(0.0, grammar.number(grammar.bind(node, ("c",))["c"], "c"))
        bound = grammar.bind(node, ("a", "b"))
        return Affine(grammar.number(bound["a"], "a"), grammar.number(bound["b"], "b"))
    raise GrammarError(f"unknown map {node.name!r}")


def _operator_from(node) -> OperatorSpec:
    if isinstance(node, grammar.Call) and node.name == "combo":
        (terms,) = grammar.bind(node, ("terms",)).values()
        if not isinstance(terms, tuple) or not terms:
            raise GrammarError("combo expects a non-empty list of (alpha, map) pairs")
        pairs = []
        for t in terms:
            if not (isinstance(t, tuple) and len(t) == 2):
                raise GrammarError("combo terms are (alpha, map) pairs")
            pairs.append((grammar.number(t[0], "alpha"), _parse_map(t[1])))
        return OperatorSpec(tuple(pairs))
    return OperatorSpec(((1.0, _parse_map(node)),))


def parse_operator(text) -> OperatorSpec:
    """``identity``, ``shift(u)``, ``scale(s)``, ``affine(a,b)`` or ``combo([(alpha, map), ...])``."""
    if isinstance(text, OperatorSpec):
        return text
    return _operator_from(grammar.parse(text))


def parse_sequence(text, density=None):
    """``seq.derivative(base=2)``, ``seq.derivative(step=harmonic)``, ``seq.averaging``,
    ``seq.quadrature(a, b[, density])`` or ``seq.constant(<operator>)``."""
    if not isinstance(text, str):
        return text
    node = grammar.parse_call(text)
    name = node.name
    if name == "seq.derivative":
        bound = grammar.bind(node, ("base", "step"), {"base": 2.0, "step": None})
        step = bound["step"]
        if step is not None:
            if not (isinstance(step, grammar.Call) and step.name == "harmonic"):
                raise GrammarError("step must be 'harmonic' (or give base=...)")
            return DerivativeDiff(harmonic=True)
        base = grammar.number(bound["base"], "base")
        if base <= 1:
            raise GrammarError("base must exceed 1")
        return DerivativeDiff(base=base)
    if name == "seq.averaging":
        grammar.bind(node, ())
        return Averaging()
    if name == "seq.quadrature":
        bound = grammar.bind(node, ("a", "b", "density"), {"density": None})
        dens = bound["density"]
        if dens is not None:
            from .embedding import parse_density

            if not isinstance(dens, grammar.Call):
                raise GrammarError("density must be a density expression")
            dens = parse_density(_unparse(dens))
        else:
            dens = density
        return RiemannQuadrature(grammar.number(bound["a"], "a"), grammar.number(bound["b"], "b"), dens)
    if name == "seq.constant":
        (op,) = grammar.bind(node, ("op",)).values()
        return ConstantSequence(_operator_from(op))
    raise GrammarError(f"unknown sequence {name!r}")


def _unparse(node) -> str:
    if isinstance(node, grammar.Call):
        args = [_unparse(a) for a in node.args] + [f"{k}={_unparse(v)}" for k, v in node.kwargs.items()]
        return f"{node.name}({', '.join(args)})" if args else node.name
    if isinstance(node, float):
        return grammar.fmt(node)
    return repr(node)
