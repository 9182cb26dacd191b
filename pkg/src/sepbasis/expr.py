"""Text grammar for polynomials and operator expressions.

Grammar (both parsers share it; only the legal identifiers differ)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" INT)?
    primary := INT | IDENT | "(" expr ")"

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``. There is
no implicit multiplication: ``2x`` is rejected and must be written ``2*x``.
A rational literal is an integer divided by an integer, ``3/2``; division
is only accepted by a nonzero constant.

For operators, ``*`` is composition (the right operand acts first) and
``^`` is iterated composition.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import ONE, X, Polynomial
from .errors import SepBasisError
from .opspace import (
    ATOM_NAMES,
    Atom,
    Const,
    OperatorExpr,
    add,
    compose,
    const,
    power,
    scale,
    sub,
)

__all__ = ["Token", "ParseError", "tokenize", "parse_poly", "parse_operator"]


class ParseError(SepBasisError, ValueError):
    def __init__(self, message: str, position: int, expected=()):
        self.message = message
        self.position = position
        self.expected = tuple(expected)
        text = f"{message} at offset {position}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


@dataclass(frozen=True)
class Token:
    kind: str  # integer, slash, ident, plus, minus, star, caret, lparen, rparen, end
    text: str
    position: int


_PUNCT = {
    "+": "plus",
    "-": "minus",
    "*": "star",
    "/": "slash",
    "^": "caret",
    "(": "lparen",
    ")": "rparen",
}


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens; positions are byte offsets into the UTF-8 input."""
    data = text.encode("utf-8")
    tokens: list[Token] = []
    i = 0
    while i < len(data):
        ch = chr(data[i])
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(data) and chr(data[j]).isdigit():
                j += 1
            tokens.append(Token("integer", data[i:j].decode(), i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(data) and (chr(data[j]).isalnum() or chr(data[j]) == "_"):
                j += 1
            tokens.append(Token("ident", data[i:j].decode(), i))
            i = j
        elif ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i, ("number", "identifier", "operator"))
    tokens.append(Token("end", "", len(data)))
    return tokens


# far above any working dimension; stops "x^99999999" from exhausting memory
MAX_EXPONENT = 1000

_START = ("number", "identifier", "'('", "'-'")


class _Parser:
    """Recursive descent over a token list, parameterized by value algebra."""

    def __init__(self, text: str, algebra):
        self.tokens = tokenize(text)
        self.pos = 0
        self.alg = algebra

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def parse(self):
        if self.tok.kind == "end":
            raise ParseError("empty expression", self.tok.position, _START)
        value = self.expr()
        if self.tok.kind != "end":
            t = self.tok
            if t.kind in ("integer", "ident", "lparen"):
                # "2x", "2(x+1)", "x D": the grammar has no juxtaposition
                raise ParseError(
                    f"unexpected {t.text!r}; implicit multiplication is not allowed, use '*'",
                    t.position,
                    ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"),
                )
            raise ParseError(f"unexpected {t.text!r}", t.position, ("'+'", "'-'", "'*'", "'/'", "end of input"))
        return value

    def expr(self):
        value = self.term()
        while self.tok.kind in ("plus", "minus"):
            op = self.advance()
            rhs = self.term()
            value = self.alg.add(value, rhs) if op.kind == "plus" else self.alg.sub(value, rhs)
        return value

    def term(self):
        value = self.unary()
        while self.tok.kind in ("star", "slash"):
            op = self.advance()
            rhs_pos = self.tok.position
            rhs = self.unary()
            if op.kind == "star":
                value = self.alg.mul(value, rhs)
            else:
                c = self.alg.as_constant(rhs)
                if c is None:
                    raise ParseError("division is only allowed by a constant", rhs_pos, ("constant",))
                if c == 0:
                    raise ParseError("division by zero", rhs_pos, ("nonzero constant",))
                value = self.alg.scale(value, 1 / c)
        return value

    def unary(self):
        if self.tok.kind == "minus":
            self.advance()
            return self.alg.scale(self.unary(), Fraction(-1))
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.kind == "caret":
            self.advance()
            t = self.tok
            if t.kind == "minus":
                raise ParseError("negative exponent", t.position, ("non-negative integer",))
            if t.kind != "integer":
                raise ParseError(f"unexpected {t.text or 'end of input'!r} after '^'", t.position, ("non-negative integer",))
            self.advance()
            if int(t.text) > MAX_EXPONENT:
                raise ParseError(f"exponent {t.text} exceeds {MAX_EXPONENT}", t.position, ("smaller exponent",))
            if self.tok.kind == "caret":
                raise ParseError("chained '^' is ambiguous; use parentheses", self.tok.position, ("'('",))
            base = self.alg.pow(base, int(t.text))
        return base

    def primary(self):
        t = self.tok
        if t.kind == "integer":
            self.advance()
            return self.alg.number(Fraction(int(t.text)))
        if t.kind == "ident":
            self.advance()
            return self.alg.ident(t)
        if t.kind == "lparen":
            self.advance()
            value = self.expr()
            if self.tok.kind != "rparen":
                raise ParseError("unbalanced parenthesis", self.tok.position, ("')'",))
            self.advance()
            return value
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"unexpected {found}", t.position, _START)


class _PolyAlgebra:
    add = staticmethod(lambda a, b: a + b)
    sub = staticmethod(lambda a, b: a - b)
    mul = staticmethod(lambda a, b: a * b)
    scale = staticmethod(lambda a, c: a.scale(c))
    pow = staticmethod(lambda a, n: a ** n)
    number = staticmethod(Polynomial.constant)

    @staticmethod
    def as_constant(p: Polynomial):
        return p.coeff(0) if p.degree <= 0 else None

    @staticmethod
    def ident(t: Token) -> Polynomial:
        if t.text == "x":
            return X
        raise ParseError(f"unknown identifier {t.text!r}; polynomials use only 'x'", t.position, ("'x'",))


class _OperatorAlgebra:
    add = staticmethod(add)
    sub = staticmethod(sub)
    mul = staticmethod(compose)
    scale = staticmethod(lambda e, c: scale(c, e))
    pow = staticmethod(power)
    number = staticmethod(const)

    @staticmethod
    def as_constant(e: OperatorExpr):
        return e.value if isinstance(e, Const) else None

    @staticmethod
    def ident(t: Token) -> OperatorExpr:
        if t.text in ATOM_NAMES:
            return Atom(t.text)
        raise ParseError(
            f"unknown identifier {t.text!r}; legal atoms are {', '.join(ATOM_NAMES)}",
            t.position,
            tuple(f"'{a}'" for a in ATOM_NAMES),
        )


def parse_poly(text: str) -> Polynomial:
    """Parse a polynomial in ``x``, e.g. ``"1/2*(x^2 - 4*x + 2)"``."""
    return _Parser(text, _PolyAlgebra).parse()


def parse_operator(text: str) -> OperatorExpr:
    """Parse an operator over ``D``, ``Dinv`` and ``x``, e.g. ``"(D - 1)^2"``."""
    return _Parser(text, _OperatorAlgebra).parse()
