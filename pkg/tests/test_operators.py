"""Composition operators, representers and the double-sequence convergence analyzer."""

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sci

from rkhsop.errors import DomainError, GrammarError, RegularityError
from rkhsop.expansions import Expansion, Value, eval_expansion, inner, norm2
from rkhsop.kernels import Brownian, Gaussian, RankOneOsc, ScaledGaussian
from rkhsop.operators import (
    CONVERGED,
    DIVERGED,
    IDENTITY,
    Affine,
    Averaging,
    ConstantSequence,
    DerivativeDiff,
    Identity,
    OperatorSpec,
    RiemannQuadrature,
    Scale,
    Shift,
    apply,
    apply_to_kernel_section,
    exact_representer,
    gram_entry,
    loeve_table,
    parse_operator,
    parse_sequence,
    representer,
    representer_cauchy_decay,
)
from rkhsop.serialize import dumps17

G = Gaussian(1.0)


def test_apply_identity_and_examples():
    assert apply(IDENTITY, np.cos, 0.7) == math.cos(0.7)
    n = 10_000
    diff = OperatorSpec(((n, Shift(1.0 / n)), (-n, Identity())))
    assert apply(diff, np.exp, 0.0) == pytest.approx((math.exp(1e-4) - 1.0) * 1e4, rel=1e-12)
    assert apply(Averaging().at(100), lambda t: t, 1.0) == pytest.approx(0.505, rel=1e-14)


def test_apply_reports_offending_points():
    op = OperatorSpec(((1.0, Shift(-0.5)), (1.0, Identity())))
    with pytest.raises(DomainError, match="0.7"):
        apply(op, np.log, 1.2, domain=ScaledGaussian().domain)


def test_representer_examples():
    assert representer(IDENTITY, G, 0.3) == Expansion(G, ((1.0, Value(0.3)),))
    rep = representer(DerivativeDiff(base=10).at(1), G, 0.0)
    assert rep.terms == ((10.0, Value(0.1)), (-10.0, Value(0.0)))
    with pytest.raises(DomainError):
        representer(OperatorSpec(((1.0, Shift(-2.0)),)), Brownian(), 1.0)


def test_gram_entry_examples():
    assert gram_entry(IDENTITY, IDENTITY, G, 0.2, 1.1) == G.eval(0.2, 1.1)
    seq = DerivativeDiff()
    for n, m in [(3, 5), (7, 7), (10, 4)]:
        u_n, u_m = 2.0**-n, 2.0**-m
        got = gram_entry(seq.at(n), seq.at(m), Brownian(), 1.0, 1.0)
        assert got == pytest.approx(1.0 / max(u_n, u_m), rel=1e-9)


def test_exact_representer_cases():
    assert norm2(exact_representer("derivative", G, 0.9)) == 2.0
    assert norm2(exact_representer("derivative", RankOneOsc(), 0.0)) == 0.0
    with pytest.raises(RegularityError):
        exact_representer("derivative", Brownian(), 1.0)
    with pytest.raises(ValueError):
        exact_representer("laplacian", G, 0.0)


def test_order_of_composition_guard():
    op = OperatorSpec(((1.0, Shift(0.4)),))
    rep = representer(op, G, 0.0)
    section = apply_to_kernel_section(op, G, 0.0)
    ys = np.linspace(-2, 2, 9)
    assert np.max(np.abs(eval_expansion(rep, ys) - section(ys))) > 0.1


def test_loeve_gaussian_derivative_converges_to_two():
    rep = loeve_table(DerivativeDiff(), G, 0.0, 4, 12)
    assert rep.verdict == CONVERGED
    assert rep.limit == pytest.approx(2.0, abs=1e-3)
    assert np.allclose(rep.table, rep.table.T, atol=1e-10)
    d = rep.diagnostics
    for key in ("row_first", "col_first", "diagonal", "iterated_gap", "max_oscillation"):
        assert key in d


def test_loeve_brownian_diverges():
    rep = loeve_table(DerivativeDiff(), Brownian(), 1.0, 1, 20)
    assert rep.verdict == DIVERGED
    for n in range(1, 21):
        assert rep.cell(n, n) == pytest.approx(2.0**n, rel=1e-9)


def test_loeve_window_precondition_and_cap():
    with pytest.raises(ValueError):
        loeve_table(DerivativeDiff(), G, 0.0, 4, 7)
    rep = loeve_table(DerivativeDiff(), G, 0.0, 20, 40)
    assert rep.indices[-1] == 26
    assert rep.diagnostics["n_hi_requested"] == 40


def test_loeve_averaging_converges_to_double_integral():
    ref, _ = sci.dblquad(lambda t, s: math.exp(-((s - t) ** 2)), 0, 1, 0, 1, epsabs=1e-13)
    rep = loeve_table(Averaging(), G, 1.0, 16, 64)
    assert rep.verdict == CONVERGED
    assert rep.limit == pytest.approx(ref, abs=1e-3)


def test_loeve_averaging_full_window():
    ref = math.sqrt(math.pi) * math.erf(1.0) + math.exp(-1.0) - 1.0
    rep = loeve_table(Averaging(), G, 1.0, 16, 256)
    assert rep.verdict == CONVERGED
    assert rep.limit == pytest.approx(ref, abs=1e-3)
    assert rep.diagnostics["iterated_gap"] < 1e-3


def test_second_step_family_spot_check():
    # harmonic steps converge too, only more slowly
    rep = loeve_table(DerivativeDiff(harmonic=True), G, 0.5, 200, 400)
    assert rep.cell(400, 400) == pytest.approx(2.0, abs=1e-2)
    assert rep.diagnostics["max_oscillation"] < 1e-2


def test_report_is_json_serializable():
    rep = loeve_table(DerivativeDiff(), G, 0.0, 4, 9)
    doc = json.loads(dumps17(rep.to_dict()))
    assert doc["verdict"] == "converged"
    assert len(doc["table"]) == 6 and len(doc["table"][0]) == 6


def test_cauchy_decay():
    g = representer_cauchy_decay(DerivativeDiff(), G, 0.0, range(4, 12))
    assert all(b < a for a, b in zip(g, g[1:])) and g[-1] < 1e-4
    b = representer_cauchy_decay(DerivativeDiff(), Brownian(), 1.0, range(2, 9))
    assert all(v >= 2.0**n * (1 - 1e-9) for v, n in zip(b, range(2, 9)))
    assert representer_cauchy_decay(ConstantSequence(IDENTITY), G, 0.3, [1, 2, 5]) == [0.0, 0.0]
    with pytest.raises(ValueError):
        representer_cauchy_decay(DerivativeDiff(), G, 0.0, [3, 2])


def test_pointwise_convergence_of_representers():
    ys = np.linspace(-2, 2, 11)
    exact = eval_expansion(exact_representer("derivative", G, 0.3), ys)
    errs = [np.max(np.abs(eval_expansion(representer(DerivativeDiff().at(n), G, 0.3), ys) - exact)) for n in (4, 8, 12)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3


def test_quadrature_sequence_weights():
    from rkhsop.embedding import Uniform

    op = RiemannQuadrature(0.0, 2.0, Uniform(0.0, 2.0)).at(4)
    assert [a for a, _ in op.terms] == [0.25] * 4
    assert [v.b for _, v in op.terms] == [0.5, 1.0, 1.5, 2.0]


@pytest.mark.parametrize(
    "text, expected",
    [
        ("identity", IDENTITY),
        ("shift(0.5)", OperatorSpec(((1.0, Shift(0.5)),))),
        ("combo([(2, scale(3)), (-1, affine(a=0, b=1))])", OperatorSpec(((2.0, Scale(3.0)), (-1.0, Affine(0.0, 1.0))))),
    ],
)
def test_parse_operator(text, expected):
    assert parse_operator(text) == expected
    assert parse_operator(str(expected)) == expected


@pytest.mark.parametrize(
    "text, expected",
    [
        ("seq.derivative(base=2)", DerivativeDiff(2.0)),
        ("seq.derivative", DerivativeDiff(2.0)),
        ("seq.derivative(step=harmonic)", DerivativeDiff(harmonic=True)),
        ("seq.averaging", Averaging()),
        ("seq.constant(shift(1))", ConstantSequence(OperatorSpec(((1.0, Shift(1.0)),)))),
    ],
)
def test_parse_sequence(text, expected):
    assert parse_sequence(text) == expected


def test_parse_sequence_quadrature_with_density():
    seq = parse_sequence("seq.quadrature(0, 1, uniform(0, 1))")
    assert seq.density.id == "uniform(0.0, 1.0)"


@pytest.mark.parametrize("text", ["seq.derivative(base=1)", "seq.nope", "combo([])", "combo([(1, warp(2))])", "shift()"])
def test_parse_errors(text):
    with pytest.raises(GrammarError):
        (parse_sequence if text.startswith("seq") else parse_operator)(text)


maps = st.one_of(
    st.just(Identity()),
    st.builds(Shift, st.floats(-2, 2)),
    st.builds(Scale, st.floats(-2, 2)),
    st.builds(Affine, st.floats(-2, 2), st.floats(-2, 2)),
)
ops = st.lists(st.tuples(st.floats(-3, 3), maps), min_size=1, max_size=5).map(lambda t: OperatorSpec(tuple(t)))
pts = st.floats(-2, 2)


@given(ops, ops, pts, pts)
def test_gram_factorization_property(a, b, x, y):
    lhs = gram_entry(a, b, G, x, y)
    rhs = inner(representer(a, G, x), representer(b, G, y))
    scale = 1.0 + sum(abs(w) for w, _ in a.terms) * sum(abs(w) for w, _ in b.terms)
    assert lhs == pytest.approx(rhs, abs=1e-12 * scale)


@given(ops, pts, st.lists(st.tuples(st.floats(-3, 3), pts), min_size=1, max_size=5))
def test_representer_duality_property(op, x, f_terms):
    f = Expansion(G, tuple((c, Value(z)) for c, z in f_terms))
    lhs = apply(op, f, x)
    rhs = inner(f, representer(op, G, x))
    scale = sum(abs(w) for w, _ in op.terms) * sum(abs(c) for c, _ in f_terms)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13 * (1 + scale))
