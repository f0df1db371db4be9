"""Small arithmetic expression language for metric and profile entries.

Grammar (whitespace insignificant)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := ('+' | '-') factor | power
    power   := atom ('^' factor)?
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sin | cos | exp | sqrt
    NAME    := a coordinate variable (x, y) or the constant pi

``**`` is accepted as a synonym for ``^``, and a number directly followed
by ``pi`` (``2.5pi``) means multiplication.  Expressions are parsed with
the :mod:`ast` module, checked against this whitelist, and turned into
sympy expressions so that exact partial derivatives are available.
"""

import ast
import re

import numpy as np
import sympy

from .errors import ConfigError

FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp, "sqrt": sympy.sqrt}
CONSTANTS = {"pi": sympy.pi}

_IMPLICIT_PI = re.compile(r"(\d|\.)\s*pi\b")


def parse(text, variables=("x", "y")):
    """Parse ``text`` into a sympy expression over ``variables``."""
    if isinstance(text, (int, float)):
        return sympy.Float(text) if isinstance(text, float) else sympy.Integer(text)
    if not isinstance(text, str) or not text.strip():
        raise ConfigError(f"expected an expression string, got {text!r}")
    src = _IMPLICIT_PI.sub(r"\1*pi", text.replace("^", "**"))
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    symbols = {name: sympy.Symbol(name, real=True) for name in variables}
    return _convert(tree.body, symbols, text)


def _convert(node, symbols, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return sympy.Float(node.value) if isinstance(node.value, float) else sympy.Integer(node.value)
    if isinstance(node, ast.Name):
        if node.id in symbols:
            return symbols[node.id]
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise ConfigError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        arg = _convert(node.operand, symbols, text)
        return -arg if isinstance(node.op, ast.USub) else arg
    if isinstance(node, ast.BinOp):
        a = _convert(node.left, symbols, text)
        b = _convert(node.right, symbols, text)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        if isinstance(node.op, ast.Pow):
            return a**b
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS:
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id} takes exactly one argument in {text!r}")
        return FUNCTIONS[node.func.id](_convert(node.args[0], symbols, text))
    raise ConfigError(f"unsupported syntax {ast.dump(node)[:40]}... in {text!r}")


def evaluate_constant(text):
    """Evaluate a variable-free expression such as ``"2.5pi"`` or ``"(1.5*pi)^2"``."""
    value = parse(text, variables=())
    try:
        return float(value)
    except TypeError:
        raise ConfigError(f"{text!r} is not a real constant") from None


def compile_expr(expr, variables=("x", "y")):
    """Vectorised numpy callable for a sympy expression; output broadcasts to the inputs."""
    symbols = [sympy.Symbol(name, real=True) for name in variables]
    fn = sympy.lambdify(symbols, expr, modules="numpy")

    def f(*args):
        args = [np.asarray(a, dtype=float) for a in args]
        out = np.asarray(fn(*args), dtype=float)
        return np.broadcast_to(out, np.broadcast(*args).shape).copy() if args else out

    return f


def derivative(expr, name):
    return sympy.diff(expr, sympy.Symbol(name, real=True))
