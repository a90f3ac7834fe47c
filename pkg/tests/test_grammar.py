import math

import pytest

from rkhsop import grammar
from rkhsop.errors import GrammarError


def test_nested_call_with_keywords():
    node = grammar.parse("Seq.Derivative(base=2)")
    assert node == grammar.Call("seq.derivative", (), {"base": 2})


def test_constants_and_arithmetic():
    node = grammar.parse("f(-inf, pi/2, 2**-3)")
    assert node.args == (-math.inf, math.pi / 2, 0.125)


def test_bare_name_is_a_call_without_arguments():
    assert grammar.parse_call("brownian") == grammar.Call("brownian", (), {})


@pytest.mark.parametrize("text", ["", "gauss(", "f(lambda: 1)", "f(x=1, x=2)", "f(1 + g)", "f(1/0)", "f(a[0])"])
def test_rejects_malformed_or_unsafe_input(text):
    with pytest.raises(GrammarError):
        grammar.bind(grammar.parse_call(text), ("x",), {"x": 0})


def test_nothing_is_evaluated():
    node = grammar.parse("os.system('ls')")
    assert node == grammar.Call("os.system", ("ls",), {})


def test_bind_fills_defaults_and_rejects_unknown():
    call = grammar.parse_call("k(1)")
    assert grammar.bind(call, ("a", "b"), {"b": 5}) == {"a": 1, "b": 5}
    with pytest.raises(GrammarError):
        grammar.bind(grammar.parse_call("k(c=1)"), ("a",), {"a": 0})


def test_fmt_roundtrips():
    for v in (0.1, 1e-300, -2.5, math.inf, -math.inf):
        assert grammar.parse(f"f({grammar.fmt(v)})").args[0] == v
