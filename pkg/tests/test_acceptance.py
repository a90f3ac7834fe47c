"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v -s``.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import integrate as sci
from scipy.special import erf

import conftest
from rkhsop import cli
from rkhsop.embedding import (
    CONVERGED,
    DIVERGED,
    InvSquare,
    Uniform,
    abs_condition,
    expectation,
    mean_embedding,
    standard_variation,
)
from rkhsop.errors import RegularityError
from rkhsop.expansions import Expansion, Value, inner, norm2
from rkhsop.kernels import Brownian, Gaussian, RankOneOsc, ScaledGaussian, osc_second
from rkhsop.operators import Averaging, DerivativeDiff, RiemannQuadrature, exact_representer, loeve_table
from rkhsop.regression import Observation, fit, objective, predict

SEED = 20240611
G = Gaussian(1.0)


def record(n, ok, detail):
    conftest.ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_derivative_norm_identity():
    rng = np.random.default_rng(SEED)
    xs = rng.uniform(-3, 3, 20)
    t0 = time.perf_counter()
    exact = [norm2(exact_representer("derivative", G, x)) for x in xs]
    limits = [loeve_table(DerivativeDiff(), G, x, 4, 12) for x in xs]
    elapsed = time.perf_counter() - t0
    worst = max(abs(r.limit - 2.0) for r in limits if r.verdict == CONVERGED)
    ok = (
        all(v == 2.0 for v in exact)
        and all(r.verdict == CONVERGED for r in limits)
        and worst <= 1e-3
        and elapsed < 1.0
    )
    record(1, ok, f"norm2(Deriv)=2 exactly at 20 x; max |Loeve limit - 2| = {worst:.2e} (tol 1e-3); {elapsed:.2f} s (< 1 s)")


def test_criterion_2_derivative_reproducing():
    rng = np.random.default_rng(SEED + 2)
    c, z = rng.normal(size=5), rng.uniform(-2, 2, 5)
    f = Expansion(G, tuple(zip(c, map(Value, z))))
    worst = 0.0
    for x in rng.uniform(-2.5, 2.5, 50):
        # independent oracle: differentiate sum c_i exp(-(x - z_i)^2) by hand
        analytic = float(np.sum(c * -2.0 * (x - z) * np.exp(-((x - z) ** 2))))
        got = inner(f, Expansion.deriv(G, x))
        worst = max(worst, abs(got - analytic) / abs(analytic))
    record(2, worst <= 1e-10, f"max relative error of <f, Deriv(x)> vs f'(x) over 50 x = {worst:.2e} (tol 1e-10)")


def test_criterion_3_non_c2_counterexample(monkeypatch):
    k = RankOneOsc()
    xk = 1.0 / (2 * math.pi * 1e4 + math.pi / 2)
    # independent evaluation of f'' from its closed form
    inv = 1.0 / xk
    f2 = 12 * xk**2 * math.sin(inv) - 6 * xk * math.cos(inv) - math.sin(inv)
    d12_zero = k.d12(0.0, 0.0)

    calls = []
    monkeypatch.setattr(RankOneOsc, "_d11", lambda self, x, y: calls.append((x, y)))
    try:
        k.d11(0.1, 0.2)
        guarded = False
    except RegularityError:
        guarded = True
    # exercise every first-order path; none may touch the second derivative
    norm2(exact_representer("derivative", k, 0.0))
    loeve_table(DerivativeDiff(), k, 0.0, 4, 12)
    fit([Observation.value(0.5, 0.1), Observation.derivative(0.3, 0.0)], k, 1e-6)
    ok = (
        d12_zero == 0.0
        and abs(f2 + 1.0) <= 0.05
        and abs(float(osc_second(xk)) + 1.0) <= 0.05
        and k.regularity.c2 is False
        and guarded
        and not calls
    )
    record(3, ok, f"d12(0,0) = {d12_zero}; |f''(x_k)+1| = {abs(f2 + 1):.2e} (tol 0.05); c2=false honored, second-derivative calls: {len(calls)}")


def test_criterion_4_negative_convergence(tmp_path):
    out = tmp_path / "brownian.json"
    code = cli.main(["verify", "--kernel", "brownian", "--seq", "seq.derivative(base=2)", "--x", "1", "--window", "1:20", "--out", str(out)])
    rep = json.loads(out.read_text())["reports"][0]
    idx = rep["indices"]
    table = np.array(rep["table"])
    worst = max(abs(table[i, i] - 2.0**n) / 2.0**n for i, n in enumerate(idx))
    ok = code == cli.EXIT_DIVERGED and rep["verdict"] == DIVERGED and idx[-1] == 20 and worst <= 1e-9
    record(4, ok, f"verify exit {code} (Diverged = {cli.EXIT_DIVERGED}); max relative |u_nn - 2^n| for n <= 20 = {worst:.1e} (tol 1e-9)")


def test_criterion_5_mean_embedding_separation():
    k, p = ScaledGaussian(), InvSquare()
    t0 = time.perf_counter()
    std = standard_variation(k, p, 1e-6)
    absr = abs_condition(k, p, 1e-6)
    emb = mean_embedding(k, p, 1e-6, abs_report=absr)
    elapsed = time.perf_counter() - t0
    log_err = max(abs(i - math.log(s.hi)) for s, i in zip(std.stages, std.partials))
    monotone = all(b > a for a, b in zip(absr.partials, absr.partials[1:]))
    bound = math.sqrt(math.pi)
    assert f"{bound:.7f}" == "1.7724539"
    ok = (
        std.verdict == DIVERGED
        and log_err <= 1e-6
        and absr.verdict == CONVERGED
        and monotone
        and max(absr.partials) <= bound + 1e-6
        and emb.norm2 > 0
        and elapsed < 30.0
    )
    record(
        5, ok,
        f"standard variation {std.verdict}, max |I_s - ln(hi)| = {log_err:.1e} (tol 1e-6); "
        f"abs_condition {absr.verdict}, monotone={monotone}, I = {absr.limit:.7f} <= sqrt(pi); {elapsed:.1f} s (< 30 s)",
    )


def test_criterion_6_embedding_reproducing():
    rng = np.random.default_rng(SEED + 6)
    emb = mean_embedding(G, Uniform(0.0, 1.0))
    xs = rng.uniform(-1.0, 2.0, 20)
    mu_err = float(np.max(np.abs(emb(xs) - 0.5 * math.sqrt(math.pi) * (erf(xs) + erf(1.0 - xs)))))
    exp_err = 0.0
    for _ in range(10):
        c, z = rng.normal(size=4), rng.uniform(-1, 2, 4)
        f = Expansion(G, tuple(zip(c, map(Value, z))))
        direct, _ = sci.quad(lambda t: f(t), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        exp_err = max(exp_err, abs(expectation(f, emb) - direct))
    # 2-D oracle by scipy; it agrees with sqrt(pi) erf(1) + e^-1 - 1 = 0.86152770...
    oracle, _ = sci.dblquad(lambda y, x: math.exp(-((x - y) ** 2)), 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-13)
    closed = math.sqrt(math.pi) * math.erf(1.0) + math.exp(-1.0) - 1.0
    n2_err = abs(emb.norm2 - oracle)
    ok = mu_err <= 1e-7 and exp_err <= 3e-8 and n2_err <= 1e-6 and abs(oracle - closed) < 1e-12
    record(
        6, ok,
        f"max |mu_p - erf form| = {mu_err:.1e} (tol 1e-7); max |E f - quad| = {exp_err:.1e} (tol 3e-8); "
        f"|norm2 - oracle {oracle:.10f}| = {n2_err:.1e} (tol 1e-6)",
    )


def test_criterion_7_representer_solver():
    rng = np.random.default_rng(SEED + 7)
    c, z = rng.normal(size=4), rng.uniform(-1, 2, 4)
    h = Expansion(G, tuple(zip(c, map(Value, z))))
    emb = mean_embedding(G, Uniform(0.0, 1.0))
    obs = [Observation.value(x, h(x)) for x in rng.uniform(-1, 2, 6)]
    obs += [Observation.derivative(x, inner(h, Expansion.deriv(G, x))) for x in rng.uniform(-1, 2, 4)]
    obs.append(Observation.expectation(Uniform(0.0, 1.0), expectation(h, emb)))
    model = fit(obs, G, 1e-10)
    worst = max(abs(predict(model, o) - o.y) for o in obs)
    best = objective(model)
    drop = max(best - objective(model, model.coefficients + rng.normal(size=11) * 10.0 ** rng.uniform(-8, 0)) for _ in range(100))
    ok = len(obs) == 11 and worst <= 1e-6 and drop <= 1e-10
    record(7, ok, f"11 functionals reproduced, max error {worst:.1e} (tol 1e-6); max objective decrease over 100 perturbations {max(drop, 0.0):.1e} (tol 1e-10)")


def test_criterion_8_property_suites(tmp_path):
    import test_embedding
    import test_expansions
    import test_operators
    import test_quadrature

    suites = {
        "gram factorization": test_operators.test_gram_factorization_property,
        "bilinearity": test_expansions.test_bilinearity,
        "cauchy-schwarz": test_expansions.test_cauchy_schwarz,
        "exhaustion independence (1-D)": test_quadrature.test_exhaustion_independence_property,
        "exhaustion independence (embedding)": test_embedding.test_embedding_is_exhaustion_independent,
        "fubini routes": test_quadrature.test_improper_2d_fubini_routes_agree,
    }
    t0 = time.perf_counter()
    failed = []
    for name, fn in suites.items():
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - collected into the report line
            failed.append(f"{name}: {type(exc).__name__}")

    keys = ("row_first", "col_first", "diagonal", "iterated_row_first", "iterated_col_first", "iterated_gap")
    reports = [
        loeve_table(DerivativeDiff(), G, 0.0, 4, 12),
        loeve_table(DerivativeDiff(harmonic=True), G, 0.5, 4, 12),
        loeve_table(DerivativeDiff(), Brownian(), 1.0, 1, 12),
        loeve_table(Averaging(), G, 1.0, 8, 24),
        loeve_table(RiemannQuadrature(0.0, 1.0, Uniform(0.0, 1.0)), G, 0.5, 4, 16),
    ]
    out = tmp_path / "v.json"
    cli.main(["verify", "--kernel", "gaussian", "--x", "0,1", "--out", str(out)])
    docs = [r.to_dict() for r in reports] + json.loads(out.read_text())["reports"]
    missing = sum(1 for d in docs if not all(key in d["diagnostics"] for key in keys))
    elapsed = time.perf_counter() - t0
    ok = not failed and missing == 0 and elapsed < 60.0
    record(
        8, ok,
        f"{len(suites) - len(failed)}/{len(suites)} property suites pass under a fixed seed; "
        f"iterated-vs-double diagnostics in {len(docs) - missing}/{len(docs)} reports; {elapsed:.1f} s (< 60 s)"
        + (f"; failures: {failed}" if failed else ""),
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
