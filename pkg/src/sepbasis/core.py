"""Exact rational scalars and dense univariate polynomials.

Scalars are :class:`fractions.Fraction` values, which are always stored in
lowest terms with a positive denominator, so equality is structural.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence, Union

__all__ = [
    "Q",
    "Polynomial",
    "fmt_rational",
    "parse_rational",
    "poly_arith",
    "poly_derivative",
    "poly_antiderivative",
    "poly_eval",
    "X",
    "ONE",
    "ZERO",
]

Scalar = Union[int, Fraction]


def Q(value) -> Fraction:
    """Coerce an int, Fraction or 'p/q' string to a Fraction.

    Floats are refused: they would silently smuggle rounding into an
    otherwise exact pipeline.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact scalar")


def fmt_rational(q: Fraction) -> str:
    """Canonical text: 'p/q' in lowest terms, or 'p' when q == 1."""
    q = Q(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    num, sep, den = text.partition("/")
    try:
        if sep:
            return Fraction(int(num), int(den))
        return Fraction(int(num))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a canonical rational: {text!r}") from exc


class Polynomial:
    """Immutable dense polynomial in x over the rationals.

    ``coeffs[k]`` is the coefficient of x**k. Trailing zeros are stripped on
    construction, so the zero polynomial has an empty coefficient tuple and
    degree -1.
    """

    __slots__ = ("_c", "_hash")

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        c = [Q(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self._c: tuple[Fraction, ...] = tuple(c)
        self._hash = None

    # construction helpers

    @classmethod
    def constant(cls, value: Scalar) -> "Polynomial":
        return cls((value,))

    @classmethod
    def monomial(cls, k: int, coeff: Scalar = 1) -> "Polynomial":
        if k < 0:
            raise ValueError("monomial exponent must be >= 0")
        return cls([0] * k + [coeff])

    # basic accessors

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    def is_zero(self) -> bool:
        return not self._c

    def coeff(self, k: int) -> Fraction:
        if 0 <= k < len(self._c):
            return self._c[k]
        return Fraction(0)

    @property
    def leading(self) -> Fraction:
        return self._c[-1] if self._c else Fraction(0)

    # ring structure

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self._c == Polynomial.constant(other)._c
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("Polynomial", self._c))
        return self._hash

    def __add__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        a, b = self._c, other._c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] += v
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-v for v in self._c)

    def __sub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        a, b = self._c, other._c
        if not a or not b:
            return Polynomial()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, u in enumerate(a):
            if u == 0:
                continue
            for j, v in enumerate(b):
                if v:
                    out[i + j] += u * v
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: Scalar) -> "Polynomial":
        c = Q(c)
        if c == 0:
            return Polynomial()
        return Polynomial(c * v for v in self._c)

    def __truediv__(self, c):
        if isinstance(c, Polynomial):
            if c.degree != 0:
                raise TypeError("polynomials can only be divided by nonzero constants")
            c = c._c[0]
        c = Q(c)
        if c == 0:
            raise ZeroDivisionError("division of a polynomial by zero")
        return self.scale(1 / c)

    # calculus

    def derivative(self) -> "Polynomial":
        return Polynomial(k * v for k, v in enumerate(self._c) if k)

    def antiderivative(self) -> "Polynomial":
        """Formal antiderivative with zero integration constant."""
        if not self._c:
            return Polynomial()
        return Polynomial([0] + [v / (k + 1) for k, v in enumerate(self._c)])

    def __call__(self, point: Scalar) -> Fraction:
        point = Q(point)
        acc = Fraction(0)
        for v in reversed(self._c):
            acc = acc * point + v
        return acc

    def compose(self, inner: "Polynomial") -> "Polynomial":
        acc = Polynomial()
        for v in reversed(self._c):
            acc = acc * inner + v
        return acc

    # rendering

    def __str__(self) -> str:
        return render_poly(self)

    def __repr__(self) -> str:
        return f"Polynomial({render_poly(self)!r})"

    def to_json(self) -> dict:
        return {"coeffs": [fmt_rational(v) for v in self._c]}

    @classmethod
    def from_json(cls, obj: dict) -> "Polynomial":
        return cls(parse_rational(s) for s in obj["coeffs"])


def _as_poly(value) -> Polynomial | None:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Polynomial.constant(value)
    return None


def _power_text(k: int, var: str) -> str:
    if k == 0:
        return ""
    if k == 1:
        return var
    return f"{var}^{k}"


def render_terms(terms: Sequence[tuple[Fraction, str]]) -> str:
    """Join (coefficient, unit) pairs as ``c*unit`` terms with signs.

    A unit of ``""`` denotes a bare constant term. Zero coefficients are
    skipped; an empty sum renders as ``0``.
    """
    parts: list[str] = []
    for c, unit in terms:
        if c == 0:
            continue
        mag = abs(c)
        if not unit:
            body = fmt_rational(mag)
        elif mag == 1:
            body = unit
        else:
            body = f"{fmt_rational(mag)}*{unit}"
        if not parts:
            parts.append(f"-{body}" if c < 0 else body)
        else:
            parts.append(f"- {body}" if c < 0 else f"+ {body}")
    return " ".join(parts) if parts else "0"


def render_poly(p: Polynomial, var: str = "x") -> str:
    """Canonical text, decreasing powers: ``1/2*x^2 - 2*x + 1``."""
    terms = [(p.coeffs[k], _power_text(k, var)) for k in range(p.degree, -1, -1)]
    return render_terms(terms)


ZERO = Polynomial()
ONE = Polynomial((1,))
X = Polynomial((0, 1))


def poly_arith(kind: str, lhs: Polynomial, rhs) -> Polynomial:
    """Dispatch ring arithmetic by name: add, sub, mul or scale."""
    if kind == "add":
        return lhs + rhs
    if kind == "sub":
        return lhs - rhs
    if kind == "mul":
        return lhs * rhs
    if kind == "scale":
        return lhs.scale(rhs)
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def poly_derivative(p: Polynomial) -> Polynomial:
    return p.derivative()


def poly_antiderivative(p: Polynomial) -> Polynomial:
    return p.antiderivative()


def poly_eval(p: Polynomial, point: Scalar) -> Fraction:
    return p(point)
