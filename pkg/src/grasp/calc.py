"""Arithmetic evaluator backing the agent's calculator tool.

Supports numbers (commas allowed as thousands separators), ``+ - * / %``,
parentheses, and unary minus, with standard precedence. Everything is
computed in :class:`decimal.Decimal`, so currency sums stay exact. Unicode
minus/multiplication/division signs are accepted as aliases.
"""

from __future__ import annotations

import re
from decimal import Decimal, DivisionByZero, InvalidOperation, localcontext

from .errors import GraspError

_ALIASES = {"−": "-", "×": "*", "÷": "/"}
_NUMBER_RE = re.compile(r"\d[\d,]*(?:\.\d*)?|\.\d+")


class CalcError(GraspError):
    """Expression could not be parsed or evaluated."""


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise CalcError("unexpected end of expression")
        self.pos += 1
        return token

    def expr(self) -> Decimal:
        value = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> Decimal:
        value = self.unary()
        while self.peek() in ("*", "/", "%"):
            op = self.take()
            rhs = self.unary()
            try:
                if op == "*":
                    value = value * rhs
                elif op == "/":
                    value = value / rhs
                else:
                    value = value % rhs
            except (DivisionByZero, InvalidOperation) as exc:
                raise CalcError("division by zero") from exc
        return value

    def unary(self) -> Decimal:
        if self.peek() == "-":
            self.take()
            return -self.unary()
        return self.primary()

    def primary(self) -> Decimal:
        token = self.take()
        if token == "(":
            value = self.expr()
            if self.peek() != ")":
                raise CalcError("missing closing parenthesis")
            self.take()
            return value
        if _NUMBER_RE.fullmatch(token):
            try:
                return Decimal(token.replace(",", ""))
            except InvalidOperation as exc:
                raise CalcError(f"bad number {token!r}") from exc
        raise CalcError(f"unexpected token {token!r}")


def _tokenize(expression: str) -> list[str]:
    text = expression
    for alias, plain in _ALIASES.items():
        text = text.replace(alias, plain)
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/%()":
            tokens.append(ch)
            i += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(m.group(0))
            i = m.end()
            continue
        raise CalcError(f"unexpected character {ch!r} at position {i}")
    if not tokens:
        raise CalcError("empty expression")
    return tokens


def evaluate(expression: str) -> Decimal:
    """Evaluate an arithmetic expression to a Decimal (28 significant digits)."""
    with localcontext() as ctx:
        ctx.prec = 28
        parser = _Parser(_tokenize(expression))
        value = parser.expr()
        if parser.peek() is not None:
            raise CalcError(f"unexpected trailing token {parser.peek()!r}")
        return value


def format_result(value: Decimal) -> str:
    """Render a result for the observation text.

    Whole numbers print without a decimal point; fractional results are
    trimmed to at most six decimal places with trailing zeros dropped, which
    keeps currency figures tidy while ratios retain enough precision.
    """
    if value == value.to_integral_value():
        return str(value.quantize(Decimal(1)))
    text = str(value.quantize(Decimal("0.000001")))
    return text.rstrip("0").rstrip(".")


def evaluate_text(expression: str) -> str:
    return format_result(evaluate(expression))
