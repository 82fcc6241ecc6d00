"""A small arithmetic expression language for problem definitions.

Grammar, loosest binding first::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'

``VAR`` is one of ``x t y s u``; ``FUNC`` is one of ``sin cos tan exp log
sqrt abs``. There is no implicit multiplication. Expressions evaluate
elementwise over numpy arrays.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

VARIABLES = ("x", "t", "y", "s", "u")
FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": math.pi}


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvalError(ExprError):
    pass


class UnboundVariableError(EvalError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} is not bound")
        self.name = name


class MathDomainError(EvalError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Const, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            offset = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ParseError(f"unexpected character {src[offset]!r}", offset)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, value, offset = self.take()
        if value != text or kind != "op":
            found = "end of input" if kind == "end" else repr(value)
            raise ParseError(f"expected {text!r}, found {found}", offset)

    def parse(self) -> Expr:
        tree = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", offset)
        return tree

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, value, offset = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in CONSTANTS:
                return Const(value)
            if value in VARIABLES:
                return Var(value)
            raise UnknownIdentifierError(value, offset)
        if (kind, value) == ("op", "("):
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", offset)


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree.

    Raises
    ------
    ParseError
        On malformed input; ``offset`` locates the offending character.
    UnknownIdentifierError
        For names that are not variables, functions or constants.
    """
    if not src or not src.strip():
        raise ParseError("empty expression", 0)
    return _Parser(src).parse()


_BINARY = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv, "^": operator.pow}


def _eval(e: Expr, env: Mapping[str, object]):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        return _BINARY[e.op](_eval(e.left, env), _eval(e.right, env))
    if isinstance(e, Call):
        return FUNCTIONS[e.func](_eval(e.arg, env))
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expr, env: Mapping[str, object]):
    """Evaluate ``e`` with variables bound by ``env`` (floats or arrays)."""
    try:
        with np.errstate(divide="raise", invalid="raise"):
            return _eval(e, env)
    except ZeroDivisionError as exc:
        raise MathDomainError(f"division by zero: {exc}") from None
    except FloatingPointError as exc:
        raise MathDomainError(str(exc)) from None
    except (ValueError, OverflowError) as exc:
        # python float ** raises these for e.g. negative base, fractional power
        raise MathDomainError(str(exc)) from None


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return variables(e.arg)
    return set()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Num) and e.value < 0:
        return 3
    return 5


def pretty(e: Expr) -> str:
    """Render ``e`` with the minimum parentheses needed to re-parse it."""

    def wrap(child: Expr, needs: bool) -> str:
        text = pretty(child)
        return f"({text})" if needs else text

    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    if isinstance(e, Neg):
        return "-" + wrap(e.operand, _prec(e.operand) < 3)
    p = _PREC[e.op]
    if e.op == "^":
        left = wrap(e.left, _prec(e.left) <= p)
        right = wrap(e.right, _prec(e.right) < 3)
        return f"{left}^{right}"
    left = wrap(e.left, _prec(e.left) < p)
    right = wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}"


def compile_expr(src_or_expr, args: tuple[str, ...]) -> Callable:
    """Turn an expression into a function of the positional ``args``.

    Raises :class:`UnknownIdentifierError` if the expression uses a
    variable outside ``args``.
    """
    e = parse(src_or_expr) if isinstance(src_or_expr, str) else src_or_expr
    extra = variables(e) - set(args)
    if extra:
        raise UnknownIdentifierError(sorted(extra)[0], 0)

    def fn(*values):
        return eval_expr(e, dict(zip(args, values)))

    fn.expr = e
    fn.__name__ = f"expr({pretty(e)})"
    return fn
