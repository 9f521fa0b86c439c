"""Text form of symbolic expressions.

Grammar (whitespace ignored)::

    expr   := ['+' | '-'] term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := INT ['/' INT] | 'u' | 'ub' | OP '(' expr ')' | '(' expr ')'
    OP     := 'd' | 'db' | 'di' | 'dbi'

``format_expr`` prints canonical expressions so that ``parse`` reads them back
to the same canonical map.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import ONE, OPERATORS, SymExpr, SymbolicError, node_text

__all__ = ["parse", "format_expr", "format_coefficient"]

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_]+)|(.))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    text = text.replace("−", "-")
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        pos = m.end()
        num, name, sym = m.groups()
        if num is not None:
            out.append(("num", num))
        elif name is not None:
            out.append(("name", name))
        elif sym is not None and not sym.isspace():
            if sym not in "+-*/()":
                raise SymbolicError(f"unexpected character {sym!r}")
            out.append(("sym", sym))
    out.append(("end", ""))
    return out


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value or kind
            raise SymbolicError(f"expected {want!r}, found {tok[1] or 'end of input'!r}")
        self.pos += 1
        return tok

    def expr(self) -> SymExpr:
        sign = 1
        if self.peek() in (("sym", "+"), ("sym", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        total = self.term() * sign
        while self.peek() in (("sym", "+"), ("sym", "-")):
            sign = -1 if self.take()[1] == "-" else 1
            total = total + self.term() * sign
        return total

    def term(self) -> SymExpr:
        value = self.factor()
        while self.peek() == ("sym", "*"):
            self.take()
            value = value * self.factor()
        return value

    def factor(self) -> SymExpr:
        kind, text = self.peek()
        if kind == "num":
            self.take()
            num = Fraction(int(text))
            if self.peek() == ("sym", "/"):
                self.take()
                den = int(self.take("num")[1])
                if den == 0:
                    raise SymbolicError("zero denominator")
                num /= den
            return SymExpr.constant(num)
        if kind == "name":
            self.take()
            if text in ("u", "ub"):
                return SymExpr.atom(text)
            if text in OPERATORS:
                self.take("sym", "(")
                inner = self.expr()
                self.take("sym", ")")
                return inner.apply(text)
            raise SymbolicError(f"unknown name {text!r}")
        if (kind, text) == ("sym", "("):
            self.take()
            inner = self.expr()
            self.take("sym", ")")
            return inner
        raise SymbolicError(f"unexpected {text or 'end of input'!r}")


def parse(text: str) -> SymExpr:
    p = _Parser(text)
    out = p.expr()
    p.take("end")
    return out


def format_coefficient(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_expr(expr: SymExpr) -> str:
    pieces = []
    for node, c in expr.items():
        mag = abs(c)
        if node == ONE:
            body = format_coefficient(mag)
        elif mag == 1:
            body = node_text(node)
        else:
            body = f"{format_coefficient(mag)}*{node_text(node)}"
        sign = "-" if c < 0 else "+"
        pieces.append((sign, body))
    if not pieces:
        return "0"
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out
