"""Tiny expression reader for the kernel/density/operator grammars.

Strings such as ``gaussian(l=1.0)``, ``combo([(1, shift(0.5)), (-1, identity)])``
or ``seq.derivative(base=2)`` are read with :mod:`ast` and turned into
:class:`Call` nodes. Nothing is ever evaluated.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

from .errors import GrammarError

_CONSTANTS = {"inf": math.inf, "infinity": math.inf, "pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    kwargs: dict = field(default_factory=dict)


def _convert(node):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float, str)):
            raise GrammarError(f"unsupported literal {node.value!r}")
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _convert(node.operand)
        if not isinstance(value, (int, float)):
            raise GrammarError("sign applied to a non-number")
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Div, ast.Mult, ast.Pow)):
        left, right = _convert(node.left), _convert(node.right)
        if not all(isinstance(v, (int, float)) for v in (left, right)):
            raise GrammarError("arithmetic on a non-number")
        try:
            if isinstance(node.op, ast.Div):
                return left / right
            if isinstance(node.op, ast.Mult):
                return left * right
            return float(left) ** right
        except (ZeroDivisionError, OverflowError) as exc:
            raise GrammarError(f"bad arithmetic: {exc}") from None
    if isinstance(node, (ast.List, ast.Tuple)):
        return tuple(_convert(elt) for elt in node.elts)
    if isinstance(node, (ast.Name, ast.Attribute)):
        name = _dotted(node)
        if name in _CONSTANTS:
            return _CONSTANTS[name]
        return Call(name)
    if isinstance(node, ast.Call):
        kwargs = {}
        for kw in node.keywords:
            if kw.arg is None:
                raise GrammarError("**kwargs are not part of the grammar")
            if kw.arg.lower() in kwargs:
                raise GrammarError(f"duplicate argument {kw.arg!r}")
            kwargs[kw.arg.lower()] = _convert(kw.value)
        return Call(_dotted(node.func), tuple(_convert(a) for a in node.args), kwargs)
    raise GrammarError(f"unsupported syntax: {ast.dump(node)}")


def _dotted(node) -> str:
    if isinstance(node, ast.Name):
        return node.id.lower()
    if isinstance(node, ast.Attribute):
        return f"{_dotted(node.value)}.{node.attr.lower()}"
    raise GrammarError("expected a name")


def parse(text: str):
    """Parse ``text`` into a :class:`Call` (or a literal)."""
    if not isinstance(text, str) or not text.strip():
        raise GrammarError("empty expression")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise GrammarError(f"cannot parse {text!r}: {exc.msg}") from None
    return _convert(tree.body)


def parse_call(text: str) -> Call:
    node = parse(text)
    if not isinstance(node, Call):
        raise GrammarError(f"expected a named expression, got {text!r}")
    return node


def bind(call: Call, names: tuple[str, ...], defaults: dict | None = None) -> dict:
    """Match positional and keyword arguments of ``call`` against ``names``."""
    defaults = dict(defaults or {})
    if len(call.args) > len(names):
        raise GrammarError(f"{call.name}: too many arguments")
    bound = dict(zip(names, call.args))
    for key, value in call.kwargs.items():
        if key not in names:
            raise GrammarError(f"{call.name}: unknown argument {key!r}")
        if key in bound:
            raise GrammarError(f"{call.name}: duplicate argument {key!r}")
        bound[key] = value
    for key in names:
        if key not in bound:
            if key not in defaults:
                raise GrammarError(f"{call.name}: missing argument {key!r}")
            bound[key] = defaults[key]
    return bound


def number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise GrammarError(f"{what} must be a number, got {value!r}")
    return float(value)


def fmt(value: float) -> str:
    """Shortest round-trip repr, with infinities spelled ``inf``."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))
