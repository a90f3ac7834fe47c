"""Penalized least squares over operator observations via the representer theorem.

The minimizer of ``sum_i (L_i h(x_i) - y_i)^2 + lambda ||h||^2`` is
``h = sum_j c_j rep_j`` with ``rep_j`` the representer of the j-th
observation functional and ``(G + lambda I) c = y``, ``G[i, j] = <rep_i, rep_j>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .embedding import DensitySpec, mean_embedding, parse_density
from .errors import SingularSystem
from .expansions import Deriv, Embed, Expansion, Value, inner
from .kernels import KernelSpec, parse_kernel
from .operators import OperatorSpec, parse_operator, representer

KINDS = ("value", "operator", "derivative", "expectation")
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)
CONDITION_CAP = 1e12


@dataclass(frozen=True)
class Observation:
    """One functional ``L_i h(x_i)`` with its observed value ``y``."""

    kind: str
    y: float = 0.0
    x: float | None = None
    operator: OperatorSpec | None = None
    density: DensitySpec | None = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"observation kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "expectation":
            if self.density is None or self.x is not None:
                raise ValueError("an expectation observation takes a density and no x")
        elif self.x is None:
            raise ValueError(f"a {self.kind} observation needs x")
        if self.kind == "operator" and self.operator is None:
            raise ValueError("an operator observation needs an operator")
        object.__setattr__(self, "y", float(self.y))
        if self.x is not None:
            object.__setattr__(self, "x", float(self.x))

    @classmethod
    def value(cls, x, y=0.0):
        return cls("value", y, x)

    @classmethod
    def derivative(cls, x, y=0.0):
        return cls("derivative", y, x)

    @classmethod
    def apply(cls, op, x, y=0.0):
        return cls("operator", y, x, operator=op)

    @classmethod
    def expectation(cls, density, y=0.0, tol=1e-8):
        return cls("expectation", y, density=density, tol=tol)

    def to_dict(self) -> dict:
        doc = {"type": self.kind}
        if self.x is not None:
            doc["x"] = self.x
        if self.operator is not None:
            doc["operator"] = str(self.operator)
        if self.density is not None:
            doc["density"] = self.density.id
        doc["y"] = self.y
        return doc


class _Representers:
    """Builds observation representers, sharing one embedding per density."""

    def __init__(self, k: KernelSpec):
        self.k = k
        self._embeddings = {}

    def __call__(self, ob: Observation) -> Expansion:
        k = self.k
        if ob.kind == "value":
            return Expansion(k, ((1.0, Value(ob.x)),))
        if ob.kind == "derivative":
            return Expansion(k, ((1.0, Deriv(ob.x)),))
        if ob.kind == "operator":
            return representer(ob.operator, k, ob.x)
        key = (ob.density.id, ob.tol)
        if key not in self._embeddings:
            self._embeddings[key] = mean_embedding(k, ob.density, ob.tol)
        return Expansion(k, ((1.0, Embed(self._embeddings[key])),))


def assemble_gram(obs, k: KernelSpec, _reps=None) -> np.ndarray:
    """``G[i, j] = <rep_i, rep_j>``; upper triangle computed, lower mirrored."""
    reps = _reps or _Representers(k)
    elems = [reps(o) for o in obs]
    n = len(elems)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = inner(elems[i], elems[j])
    return G


@dataclass(frozen=True, eq=False)
class Model:
    kernel: KernelSpec
    observations: tuple
    lam: float
    coefficients: np.ndarray
    gram: np.ndarray
    condition: float
    jitter: float
    residual: float
    _reps: _Representers = field(repr=False, default=None)

    def expansion(self) -> Expansion:
        """The fitted function as an explicit Expansion."""
        terms = []
        for c, ob in zip(self.coefficients, self.observations):
            terms.extend((c * w, atom) for w, atom in self._reps(ob).terms)
        return Expansion(self.kernel, tuple(terms))

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.id,
            "lambda": self.lam,
            "coefficients": self.coefficients.tolist(),
            "condition_estimate": self.condition,
            "jitter": self.jitter,
            "residual_inf": self.residual,
            "observations": [o.to_dict() for o in self.observations],
        }


def fit(obs, k: KernelSpec, lam: float) -> Model:
    """Solve ``(G + lam I) c = y`` by Cholesky, escalating diagonal jitter if needed.

    Raises
    ------
    SingularSystem
        When ``lam == 0`` and the Gram condition estimate exceeds the cap,
        or when no rung of the jitter ladder yields a factorization.
    """
    if not lam >= 0:
        raise ValueError("lambda must be >= 0")
    obs = tuple(obs)
    if not obs:
        raise ValueError("no observations")
    reps = _Representers(k)
    G = assemble_gram(obs, k, reps)
    y = np.array([o.y for o in obs])
    n = len(obs)
    cond = float(np.linalg.cond(G)) if np.all(np.isfinite(G)) else float("inf")
    if lam == 0 and not cond <= CONDITION_CAP:
        raise SingularSystem(f"Gram condition estimate {cond:.3g} exceeds {CONDITION_CAP:g} at lambda = 0")
    A = G + lam * np.eye(n)
    for jitter in JITTER_LADDER:
        try:
            factor = scipy.linalg.cho_factor(A + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
        c = scipy.linalg.cho_solve(factor, y)
        residual = float(np.max(np.abs(A @ c - y)))
        return Model(k, obs, float(lam), c, G, cond, jitter, residual, reps)
    raise SingularSystem(f"Cholesky failed for every jitter in {JITTER_LADDER}")


def predict(model: Model, query: Observation) -> float:
    """``sum_j c_j <rep_query, rep_j>``."""
    rq = model._reps(query)
    return float(sum(c * inner(rq, model._reps(o)) for c, o in zip(model.coefficients, model.observations)))


def objective(model: Model, c=None) -> float:
    """``||G c - y||^2 + lam c^T G c`` for the model's coefficients or a given ``c``."""
    c = model.coefficients if c is None else np.asarray(c, dtype=float)
    y = np.array([o.y for o in model.observations])
    r = model.gram @ c - y
    return float(r @ r + model.lam * c @ model.gram @ c)


# -- problem files ------------------------------------------------------------

_OBS_KEYS = {"type", "x", "operator", "density", "y", "tol"}
_PROBLEM_KEYS = {"kernel", "lambda", "observations", "queries"}


def observation_from_dict(doc: dict, *, need_y: bool = True) -> Observation:
    unknown = set(doc) - _OBS_KEYS
    if unknown:
        raise ValueError(f"unknown observation keys: {sorted(unknown)}")
    kind = doc.get("type")
    if kind not in KINDS:
        raise ValueError(f"observation type must be one of {KINDS}")
    if need_y and "y" not in doc:
        raise ValueError("observation needs y")
    op = parse_operator(doc["operator"]) if "operator" in doc else None
    dens = parse_density(doc["density"]) if "density" in doc else None
    return Observation(kind, doc.get("y", 0.0), doc.get("x"), op, dens, float(doc.get("tol", 1e-8)))


@dataclass(frozen=True)
class Problem:
    kernel: KernelSpec
    lam: float
    observations: tuple
    queries: tuple = ()


def parse_problem(doc) -> Problem:
    """Parse a problem document (dict or JSON text); unknown keys are errors."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise ValueError("problem must be a JSON object")
    unknown = set(doc) - _PROBLEM_KEYS
    if unknown:
        raise ValueError(f"unknown problem keys: {sorted(unknown)}")
    if "kernel" not in doc or "observations" not in doc:
        raise ValueError("problem needs kernel and observations")
    k = parse_kernel(doc["kernel"])
    obs = tuple(observation_from_dict(o) for o in doc["observations"])
    queries = tuple(observation_from_dict(q, need_y=False) for q in doc.get("queries", ()))
    return Problem(k, float(doc.get("lambda", 0.0)), obs, queries)
