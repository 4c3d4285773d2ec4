"""Small arithmetic expression language for nonlinearities and densities.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

So ``-2^2 == -4`` and ``2^3^2 == 512``.  Evaluation accepts scalars or
numpy arrays as bindings and is vectorised.
"""

import re
from dataclasses import dataclass

import numpy as np
from scipy import special

KNOWN_VARS = frozenset({"t", "u", "x", "s"})


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExprDomainError(ExprError, ArithmeticError):
    pass


def _pow(base, exponent):
    base = np.asarray(base, dtype=float)
    exponent = np.asarray(exponent, dtype=float)
    bad = (base < 0) & (exponent != np.round(exponent))
    if np.any(bad):
        raise ExprDomainError("negative base raised to a non-integer power")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.power(base, exponent)


def _log(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ExprDomainError("log of a non-positive number")
    return np.log(x)


def _sqrt(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ExprDomainError("sqrt of a negative number")
    return np.sqrt(x)


def _gamma(x):
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) & (x == np.round(x))):
        raise ExprDomainError("gamma pole at a non-positive integer")
    return special.gamma(x)


# name -> (arity, implementation)
FUNCTIONS = {
    "exp": (1, np.exp),
    "log": (1, _log),
    "sqrt": (1, _sqrt),
    "abs": (1, np.abs),
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "pow": (2, _pow),
    "gamma": (1, _gamma),
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, allowed_vars):
        self.tokens = tokenize(source)
        self.i = 0
        self.allowed = allowed_vars

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, pos = self.peek()
        if value != text or kind == "end":
            found = "end of input" if kind == "end" else repr(value)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", pos)
        self.advance()

    def parse(self):
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {value!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and value == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(value, pos)
            if value in FUNCTIONS:
                raise ExprSyntaxError(f"function {value!r} needs arguments", pos)
            if value not in self.allowed:
                allowed = ", ".join(sorted(self.allowed)) or "none"
                raise ExprSyntaxError(
                    f"unknown variable {value!r} (allowed: {allowed})", pos)
            return Var(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"unexpected {found}", pos)

    def call(self, name, pos):
        if name not in FUNCTIONS:
            raise ExprSyntaxError(f"unknown function {name!r}", pos)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name][0]
        if len(args) != arity:
            raise ExprSyntaxError(
                f"{name}() takes {arity} argument(s), got {len(args)}", pos)
        return Call(name, tuple(args))


class Expression:
    """A parsed expression together with its source text."""

    def __init__(self, source, tree):
        self.source = source
        self.tree = tree

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __call__(self, **bindings):
        return evaluate(self, bindings)

    @property
    def free_vars(self):
        return free_vars(self)

    def to_source(self):
        return unparse(self.tree)


def parse(source, allowed_vars=KNOWN_VARS):
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    tree = _Parser(source, frozenset(allowed_vars)).parse()
    return Expression(source, tree)


def free_vars(e):
    tree = e.tree if isinstance(e, Expression) else e
    found = set()
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
        elif isinstance(node, Call):
            stack.extend(node.args)
    return found


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExprError(f"no binding for variable {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        left = _eval(node.left, env)
        right = _eval(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if np.any(np.asarray(right) == 0):
                raise ExprDomainError("division by zero")
            return left / right
        return _pow(left, right)
    if isinstance(node, Call):
        return FUNCTIONS[node.name][1](*(_eval(a, env) for a in node.args))
    raise ExprError(f"malformed expression node {node!r}")


def evaluate(e, bindings=None):
    """Evaluate ``e`` under ``bindings``; arrays broadcast elementwise.

    Scalar inputs give a Python float. A non-finite result raises
    :class:`ExprDomainError`.
    """
    tree = e.tree if isinstance(e, Expression) else e
    env = {k: (v if np.isscalar(v) else np.asarray(v, dtype=float))
           for k, v in (bindings or {}).items()}
    with np.errstate(over="ignore", invalid="ignore"):
        value = _eval(tree, env)
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ExprDomainError("expression evaluated to a non-finite value")
    return float(arr) if arr.ndim == 0 else arr


def unparse(node):
    """Fully parenthesised source text; floats keep their exact repr."""
    if isinstance(node, Num):
        text = repr(node.value)
        return text if node.value >= 0 else f"({text})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(unparse(a) for a in node.args)})"
    raise ExprError(f"malformed expression node {node!r}")


def as_function(e, var_map):
    """Wrap an expression as a positional callable.

    ``var_map`` lists, per positional argument, the expression variable
    names bound to it, e.g. ``[("t",), ("u",)]`` gives ``f(t, u)``.
    """
    def fn(*args):
        env = {}
        for names, value in zip(var_map, args):
            for name in names:
                env[name] = value
        return evaluate(e, env)
    fn.__name__ = "expr_fn"
    fn.source = e.source
    return fn

