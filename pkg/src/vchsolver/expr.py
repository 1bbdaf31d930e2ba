"""Initial-condition expressions: a small arithmetic language over ``x`` and ``y``.

Grammar: numbers, ``x``, ``y``, ``pi``, ``e``, the operators ``+ - * / **``,
parentheses, and the functions ``sin``, ``cos``, ``exp``, ``tanh``, ``sqrt``
and ``noise(amplitude)`` (uniform in ``[-amplitude, amplitude]`` per grid
point, drawn from the configured seed).
"""
from __future__ import annotations

import ast
import operator

import numpy as np

from .spectral import BasisSpec


class ExpressionError(ValueError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "sqrt": np.sqrt}
_CONSTS = {"pi": np.pi, "e": np.e}


def parse(text: str) -> ast.Expression:
    """Parse and validate; raises :class:`ExpressionError` on anything outside the grammar."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Load, ast.operator, ast.unaryop)):
            if isinstance(node, ast.operator) and type(node) not in _BINOPS:
                raise ExpressionError(f"operator {type(node).__name__} not allowed")
            if isinstance(node, ast.unaryop) and type(node) not in _UNARY:
                raise ExpressionError(f"operator {type(node).__name__} not allowed")
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            continue
        if isinstance(node, (ast.BinOp, ast.UnaryOp)):
            continue
        if isinstance(node, ast.Name) and node.id in ("x", "y", *_CONSTS, *_FUNCS, "noise"):
            continue
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in (*_FUNCS, "noise"):
                raise ExpressionError(f"unknown function in {text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            continue
        raise ExpressionError(f"{type(node).__name__} not allowed in {text!r}")
    return tree


def evaluate(text: str, basis: BasisSpec, seed: int = 0) -> np.ndarray:
    """Evaluate on the collocation grid of ``basis``."""
    tree = parse(text)
    coords = basis.grid()
    env = {"x": coords[0], "y": coords[1] if basis.n > 1 else None}
    rng = np.random.default_rng(seed)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            value = env.get(node.id)
            if value is None:
                raise ExpressionError(f"{node.id!r} is not defined for n={basis.n}")
            return value
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call):
            arg = ev(node.args[0])
            if node.func.id == "noise":
                return arg * rng.uniform(-1.0, 1.0, basis.grid_shape)
            return _FUNCS[node.func.id](arg)
        raise ExpressionError(f"unexpected node {type(node).__name__}")  # pragma: no cover

    with np.errstate(all="raise"):
        try:
            values = ev(tree)
        except FloatingPointError as exc:
            raise ExpressionError(f"{text!r}: {exc}") from None
    values = np.broadcast_to(np.asarray(values, dtype=float), basis.grid_shape)
    return np.array(values)
