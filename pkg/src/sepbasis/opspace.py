"""Coordinate frames, exact linear maps and operator expressions.

A :class:`BasisFamily` is an ordered, linearly independent list of
polynomials. A :class:`LinearMap` is a rational matrix between two frames
whose column ``j`` holds the target coordinates of the image of source
member ``j``. Operator expressions (:class:`OperatorExpr`) are small ASTs
over ``D``, ``Dinv``, multiplication by ``x`` and rational constants; they
are evaluated exactly on polynomials and compiled to matrices on truncated
monomial frames. Because ``D`` is nilpotent there, series such as
``exp(-D^2/2)`` terminate exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .core import ONE, X, ZERO, Polynomial, Q, fmt_rational, render_poly, render_terms
from .errors import (
    ConsistencyError,
    DegreeOverflowError,
    FrameMismatchError,
    NotDifferentialFormError,
    NotTriangularError,
    SingularMatrixError,
    SpanError,
)

Matrix = tuple[tuple[Fraction, ...], ...]


# ---------------------------------------------------------------------------
# dense exact matrices (row-major tuples of Fractions)
# ---------------------------------------------------------------------------

def mat_identity(n: int) -> Matrix:
    one, zero = Fraction(1), Fraction(0)
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def mat_zero(rows: int, cols: int) -> Matrix:
    return tuple((Fraction(0),) * cols for _ in range(rows))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    inner = len(b)
    if a and len(a[0]) != inner:
        raise ValueError(f"cannot multiply {len(a)}x{len(a[0])} by {inner}x…")
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [Fraction(0)] * cols
        for k, v in enumerate(row):
            if v:
                for j, w in enumerate(b[k]):
                    if w:
                        acc[j] += v * w
        out.append(tuple(acc))
    return tuple(out)


def mat_add(a: Matrix, b: Matrix, sign: int = 1) -> Matrix:
    if sign == 1:
        return tuple(tuple(u + v if v else u for u, v in zip(ra, rb)) for ra, rb in zip(a, b))
    return tuple(tuple(u - v if v else u for u, v in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Matrix, c: Fraction) -> Matrix:
    if c == 0:
        return mat_zero(len(a), len(a[0]) if a else 0)
    return tuple(tuple(c * v if v else v for v in row) for row in a)


def mat_vec(a: Matrix, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(sum((x * y for x, y in zip(row, v) if x and y), Fraction(0)) for row in a)


def bareiss_inverse(a: Matrix) -> Matrix:
    """Exact inverse by fraction-free Gauss-Jordan elimination.

    Rows are first scaled to integers. Every intermediate entry of the
    augmented integer matrix is then a minor of the original, so the
    divisions by the previous pivot are exact and no rational arithmetic is
    needed until the final division by the determinant.
    """
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("only square matrices can be inverted")
    if n == 0:
        return ()
    scales = [math.lcm(*(v.denominator for v in row)) for row in a]
    work = [
        [int(v * s) for v in row] + [s if i == j else 0 for j in range(n)]
        for i, (row, s) in enumerate(zip(a, scales))
    ]
    width = 2 * n
    prev = 1
    trace: list[tuple[int, int]] = []
    for k in range(n):
        pivot_row = next((r for r in range(k, n) if work[r][k] != 0), None)
        if pivot_row is None:
            trace.append((k, 0))
            raise SingularMatrixError("singular matrix", trace)
        if pivot_row != k:
            work[k], work[pivot_row] = work[pivot_row], work[k]
        pk = work[k][k]
        trace.append((k, pk))
        rk = work[k]
        for i in range(n):
            if i == k:
                continue
            ri = work[i]
            aik = ri[k]
            for j in range(width):
                num = pk * ri[j] - aik * rk[j]
                q, r = divmod(num, prev)
                if r:
                    raise ConsistencyError("fraction-free elimination lost exactness")
                ri[j] = q
        prev = pk
    det = prev
    # the identity block was pre-multiplied by the row scales, so the right
    # half is det * a^{-1} directly
    return tuple(tuple(Fraction(work[i][n + j], det) for j in range(n)) for i in range(n))


def _rank_pivots(rows: Sequence[Sequence[Fraction]]) -> list[int]:
    """Pivot columns of the row echelon form of ``rows``."""
    work = [list(r) for r in rows]
    if not work:
        return []
    ncols = len(work[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(work)) if work[i][c] != 0), None)
        if p is None:
            continue
        work[r], work[p] = work[p], work[r]
        piv = work[r][c]
        for i in range(r + 1, len(work)):
            f = work[i][c]
            if f:
                f /= piv
                work[i] = [u - f * v for u, v in zip(work[i], work[r])]
        pivots.append(c)
        r += 1
        if r == len(work):
            break
    return pivots


# ---------------------------------------------------------------------------
# basis families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisFamily:
    """An ordered coordinate frame of linearly independent polynomials."""

    label: str
    members: tuple[Polynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("a basis family needs at least one member")
        if self.members[0].is_zero():
            raise ValueError("member 0 of a basis family must be nonzero")
        self._solver  # validates independence eagerly

    @property
    def dim(self) -> int:
        return len(self.members)

    @property
    def ambient_degree(self) -> int:
        return max(m.degree for m in self.members)

    @cached_property
    def is_monomial(self) -> bool:
        return all(m == Polynomial.monomial(k) for k, m in enumerate(self.members))

    @cached_property
    def _solver(self):
        if self.is_monomial:
            return None
        width = self.ambient_degree + 1
        rows = [[m.coeff(k) for k in range(width)] for m in self.members]
        pivots = _rank_pivots(rows)
        if len(pivots) < self.dim:
            raise ValueError(
                f"members of {self.label!r} are linearly dependent "
                f"(rank {len(pivots)} < {self.dim})"
            )
        sub = tuple(tuple(m.coeff(r) for m in self.members) for r in pivots)
        return pivots, bareiss_inverse(sub)

    def coordinates(self, p: Polynomial) -> tuple[Fraction, ...]:
        if self.is_monomial:
            if p.degree >= self.dim:
                raise SpanError(f"{p} is not in span of {self.label} (degree {p.degree} >= {self.dim})")
            return tuple(p.coeff(k) for k in range(self.dim))
        if p.degree > self.ambient_degree:
            raise SpanError(f"{p} is not in span of {self.label}")
        pivots, inv = self._solver
        coords = mat_vec(inv, [p.coeff(r) for r in pivots])
        if self.combine(coords) != p:
            raise SpanError(f"{p} is not in span of {self.label}")
        return coords

    def combine(self, coords: Sequence[Fraction]) -> Polynomial:
        acc = ZERO
        for c, m in zip(coords, self.members):
            if c:
                acc = acc + m.scale(c)
        return acc

    def prefix(self, m: int) -> "BasisFamily":
        if m == self.dim:
            return self
        if self.is_monomial:
            return monomial_basis(m)
        return BasisFamily(f"{self.label}[:{m}]", self.members[:m])

    def __str__(self) -> str:
        return f"{self.label} (dim {self.dim})"


def monomial_basis(dim: int) -> BasisFamily:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return BasisFamily("monomial", tuple(Polynomial.monomial(k) for k in range(dim)))


def build_basis(kind: str, dim: int, B: Polynomial | None = None) -> BasisFamily:
    """Monomials ``(1, x, ...)`` or powers ``(1, B, B^2, ...)`` of ``B``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if kind == "monomial":
        return monomial_basis(dim)
    if kind == "bpower":
        if B is None:
            raise ValueError("bpower basis needs a generator polynomial B")
        if B.degree < 1:
            raise ValueError(f"bpower generator must have degree >= 1, got {B}")
        members = [ONE]
        for _ in range(dim - 1):
            members.append(members[-1] * B)
        return BasisFamily(f"bpower[{B}]", tuple(members))
    raise ValueError(f"unknown basis kind {kind!r}")


def basis_coordinates(p: Polynomial, family: BasisFamily) -> tuple[Fraction, ...]:
    return family.coordinates(p)


# ---------------------------------------------------------------------------
# linear maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearMap:
    source: BasisFamily
    target: BasisFamily
    matrix: Matrix

    def __post_init__(self):
        m = tuple(
            tuple(row) if all(type(v) is Fraction for v in row) else tuple(Q(v) for v in row)
            for row in self.matrix
        )
        object.__setattr__(self, "matrix", m)
        if len(m) != self.target.dim or any(len(row) != self.source.dim for row in m):
            raise ValueError(
                f"matrix shape does not match frames {self.target.dim}x{self.source.dim}"
            )

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        return (
            self.matrix == other.matrix
            and _same_frame(self.source, other.source)
            and _same_frame(self.target, other.target)
        )

    __hash__ = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.target.dim, self.source.dim

    @property
    def is_square(self) -> bool:
        return _same_frame(self.source, self.target)

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self.matrix)

    def image(self, j: int) -> Polynomial:
        return self.target.combine(self.column(j))

    def images(self) -> list[Polynomial]:
        return [self.image(j) for j in range(self.source.dim)]

    def apply(self, p: Polynomial) -> Polynomial:
        return map_apply(self, p)

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return map_compose(self, other)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        _check_same(self, other)
        return LinearMap(self.source, self.target, mat_add(self.matrix, other.matrix))

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        _check_same(self, other)
        return LinearMap(self.source, self.target, mat_add(self.matrix, other.matrix, -1))

    def __neg__(self) -> "LinearMap":
        return self.scale(-1)

    def scale(self, c) -> "LinearMap":
        return LinearMap(self.source, self.target, mat_scale(self.matrix, Q(c)))

    def inverse(self) -> "LinearMap":
        return map_invert(self)

    def is_upper_triangular(self) -> bool:
        return all(self.matrix[i][j] == 0 for i in range(len(self.matrix)) for j in range(min(i, self.source.dim)))

    def diagonal(self) -> tuple[Fraction, ...]:
        return tuple(self.matrix[i][i] for i in range(min(self.shape)))

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.matrix for v in row)

    def to_json(self) -> list[list[str]]:
        return [[fmt_rational(v) for v in row] for row in self.matrix]


def _same_frame(a: BasisFamily, b: BasisFamily) -> bool:
    return a is b or a == b


def _check_same(f: LinearMap, g: LinearMap):
    if not (_same_frame(f.source, g.source) and _same_frame(f.target, g.target)):
        raise FrameMismatchError(
            f"maps act between different frames: {f.source}->{f.target} vs {g.source}->{g.target}"
        )


def identity_map(frame: BasisFamily) -> LinearMap:
    return LinearMap(frame, frame, mat_identity(frame.dim))


def zero_map(source: BasisFamily, target: BasisFamily) -> LinearMap:
    return LinearMap(source, target, mat_zero(target.dim, source.dim))


def diagonal_map(frame: BasisFamily, values: Sequence) -> LinearMap:
    values = [Q(v) for v in values]
    if len(values) != frame.dim:
        raise ValueError("diagonal length must equal the frame dimension")
    m = tuple(tuple(values[i] if i == j else Fraction(0) for j in range(frame.dim)) for i in range(frame.dim))
    return LinearMap(frame, frame, m)


def op_from_action(source: BasisFamily, target: BasisFamily, images: Sequence[Polynomial]) -> LinearMap:
    """Map sending source member ``j`` to ``images[j]``."""
    if len(images) != source.dim:
        raise ValueError(f"expected {source.dim} images, got {len(images)}")
    cols = []
    for j, img in enumerate(images):
        try:
            cols.append(target.coordinates(img))
        except SpanError as exc:
            raise SpanError(f"image {j} ({img}) is not in span of {target.label}") from exc
    matrix = tuple(tuple(cols[j][i] for j in range(source.dim)) for i in range(target.dim))
    return LinearMap(source, target, matrix)


def retarget(f: LinearMap, target: BasisFamily) -> LinearMap:
    """Re-express the images of ``f`` in another target frame."""
    return op_from_action(f.source, target, f.images())


def map_compose(f: LinearMap, g: LinearMap) -> LinearMap:
    """``f`` after ``g``."""
    if not _same_frame(f.source, g.target):
        raise FrameMismatchError(
            f"cannot compose: source of outer map is {f.source}, target of inner map is {g.target}"
        )
    return LinearMap(g.source, f.target, mat_mul(f.matrix, g.matrix))


def map_invert(f: LinearMap) -> LinearMap:
    if f.source.dim != f.target.dim:
        raise ValueError(f"cannot invert a {f.shape[0]}x{f.shape[1]} map")
    return LinearMap(f.target, f.source, bareiss_inverse(f.matrix))


def map_apply(f: LinearMap, p: Polynomial) -> Polynomial:
    coords = f.source.coordinates(p)
    return f.target.combine(mat_vec(f.matrix, coords))


# ---------------------------------------------------------------------------
# operator expressions
# ---------------------------------------------------------------------------

class OperatorExpr:
    """Base class of the operator AST; nodes are frozen dataclasses."""

    def __str__(self) -> str:
        return format_operator(self)

    def __call__(self, p: Polynomial, max_degree: int | None = None) -> Polynomial:
        return apply_operator(self, p, max_degree)


@dataclass(frozen=True, eq=True, repr=True)
class Atom(OperatorExpr):
    name: str  # "D", "Dinv" or "x"

    def __post_init__(self):
        if self.name not in ATOM_NAMES:
            raise ValueError(f"unknown atom {self.name!r}; legal atoms are {', '.join(ATOM_NAMES)}")

    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Const(OperatorExpr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Q(self.value))

    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Add(OperatorExpr):
    left: OperatorExpr
    right: OperatorExpr
    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Sub(OperatorExpr):
    left: OperatorExpr
    right: OperatorExpr
    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Compose(OperatorExpr):
    """``outer`` applied after ``inner``."""

    outer: OperatorExpr
    inner: OperatorExpr
    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Pow(OperatorExpr):
    base: OperatorExpr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("operator powers must be non-negative integers")

    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Scale(OperatorExpr):
    factor: Fraction
    operand: OperatorExpr

    def __post_init__(self):
        object.__setattr__(self, "factor", Q(self.factor))

    __str__ = OperatorExpr.__str__


@dataclass(frozen=True)
class Exp(OperatorExpr):
    """``exp(arg)`` as a terminating series; ``arg`` must lower degree."""

    arg: OperatorExpr
    __str__ = OperatorExpr.__str__


ATOM_NAMES = ("D", "Dinv", "x")
D = Atom("D")
DINV = Atom("Dinv")
XOP = Atom("x")
IDENTITY = Const(1)


# smart constructors keep parsed ASTs in one normal form, which is what
# makes print -> parse a fixed point

def const(v) -> Const:
    return Const(Q(v))


def scale(c, e: OperatorExpr) -> OperatorExpr:
    c = Q(c)
    if isinstance(e, Const):
        return Const(c * e.value)
    if c == 0:
        return Const(0)
    if isinstance(e, Scale):
        return scale(c * e.factor, e.operand)
    if c == 1:
        return e
    return Scale(c, e)


def compose(outer: OperatorExpr, inner: OperatorExpr) -> OperatorExpr:
    if isinstance(outer, Const):
        return scale(outer.value, inner)
    if isinstance(inner, Const):
        return scale(inner.value, outer)
    if isinstance(outer, Scale):
        return scale(outer.factor, compose(outer.operand, inner))
    if isinstance(inner, Scale):
        return scale(inner.factor, compose(outer, inner.operand))
    return Compose(outer, inner)


def add(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def power(e: OperatorExpr, n: int) -> OperatorExpr:
    if n < 0:
        raise ValueError("operator powers must be non-negative integers")
    if isinstance(e, Const):
        return Const(e.value ** n)
    if n == 0:
        return Const(1)
    if n == 1:
        return e
    return Pow(e, n)


def compose_all(*exprs: OperatorExpr) -> OperatorExpr:
    out = exprs[-1]
    for e in reversed(exprs[:-1]):
        out = compose(e, out)
    return out


def multiplier(p: Polynomial) -> OperatorExpr:
    """AST for multiplication by the polynomial ``p``."""
    terms = [scale(c, power(XOP, k)) for k, c in enumerate(p.coeffs) if c]
    if not terms:
        return Const(0)
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = add(out, t)
    return out


# printing

def _fmt(e: OperatorExpr) -> tuple[str, int]:
    """Render with a precedence level: 1 sum, 2 product, 3 unary, 4 power, 5 atom."""
    if isinstance(e, Atom):
        return e.name, 5
    if isinstance(e, Const):
        v = e.value
        text = fmt_rational(v)
        if v.denominator != 1:
            return text, 2
        return text, 3 if v < 0 else 5
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        return f"{_wrap(e.left, 1)} {op} {_wrap(e.right, 2)}", 1
    if isinstance(e, Compose):
        return f"{_wrap(e.outer, 2)}*{_wrap(e.inner, 3)}", 2
    if isinstance(e, Scale):
        if e.factor == -1:
            return f"-{_wrap(e.operand, 3)}", 3
        return f"{fmt_rational(e.factor)}*{_wrap(e.operand, 2)}", 2
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 5)}^{e.exponent}", 4
    if isinstance(e, Exp):
        return f"exp({_fmt(e.arg)[0]})", 5
    raise TypeError(f"not an operator expression: {e!r}")


def _wrap(e: OperatorExpr, need: int) -> str:
    text, level = _fmt(e)
    return text if level >= need else f"({text})"


def format_operator(e: OperatorExpr) -> str:
    return _fmt(e)[0]


# evaluation

def apply_operator(expr: OperatorExpr, p: Polynomial, max_degree: int | None = None) -> Polynomial:
    """Apply ``expr`` to ``p`` exactly.

    ``max_degree`` bounds every intermediate result; exceeding it raises
    :class:`DegreeOverflowError` (nothing is ever truncated).
    """

    def check(q: Polynomial, where: str) -> Polynomial:
        if max_degree is not None and q.degree > max_degree:
            raise DegreeOverflowError(q.degree, max_degree, where)
        return q

    def ev(e: OperatorExpr, q: Polynomial) -> Polynomial:
        if isinstance(e, Atom):
            if e.name == "D":
                return q.derivative()
            if e.name == "Dinv":
                return check(q.antiderivative(), "Dinv")
            return check(q * X, "x")
        if isinstance(e, Const):
            return q.scale(e.value)
        if isinstance(e, Add):
            return ev(e.left, q) + ev(e.right, q)
        if isinstance(e, Sub):
            return ev(e.left, q) - ev(e.right, q)
        if isinstance(e, Compose):
            return ev(e.outer, ev(e.inner, q))
        if isinstance(e, Scale):
            return ev(e.operand, q).scale(e.factor)
        if isinstance(e, Pow):
            for _ in range(e.exponent):
                q = ev(e.base, q)
            return q
        if isinstance(e, Exp):
            total, term = q, q
            k = 0
            while not term.is_zero():
                k += 1
                nxt = ev(e.arg, term)
                if nxt.degree >= term.degree:
                    raise ValueError(f"exp argument {e.arg} does not lower degree; series would not terminate")
                term = nxt / k
                total = total + term
            return total
        raise TypeError(f"not an operator expression: {e!r}")

    return check(ev(expr, check(p, "input")), "result")


def compile_operator(expr: OperatorExpr, frame: BasisFamily, headroom: int = 0) -> LinearMap:
    """Matrix of ``expr`` from a monomial frame into monomials of dim ``frame.dim + headroom``.

    Intermediate images may use the headroom; anything beyond it is a
    degree overflow, never a truncation.
    """
    if not frame.is_monomial:
        raise ValueError(f"compile_operator needs a monomial frame, got {frame.label}")
    if headroom < 0:
        raise ValueError("headroom must be >= 0")
    size = frame.dim + headroom
    target = frame if headroom == 0 else monomial_basis(size)
    images = [apply_operator(expr, Polynomial.monomial(j), size - 1) for j in range(frame.dim)]
    return op_from_action(frame, target, images)


# ---------------------------------------------------------------------------
# differential forms
# ---------------------------------------------------------------------------

def _xd_unit(j: int, k: int) -> str:
    xs = "" if j == 0 else ("x" if j == 1 else f"x^{j}")
    ds = "" if k == 0 else ("D" if k == 1 else f"D^{k}")
    return "*".join(s for s in (xs, ds) if s)


@dataclass(frozen=True)
class DiffForm:
    """``sum_k coeffs[k](x) * D^k``; trailing zero coefficients are trimmed."""

    coeffs: tuple[Polynomial, ...]

    def __post_init__(self):
        c = list(self.coeffs)
        while c and c[-1].is_zero():
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> Polynomial:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    def apply(self, p: Polynomial) -> Polynomial:
        acc, dp = ZERO, p
        for c in self.coeffs:
            acc = acc + c * dp
            dp = dp.derivative()
        return acc

    def to_operator(self) -> OperatorExpr:
        terms = [compose(multiplier(c), power(D, k)) for k, c in enumerate(self.coeffs) if not c.is_zero()]
        if not terms:
            return Const(0)
        out = terms[-1]
        for t in reversed(terms[:-1]):
            out = add(out, t)
        return out

    def __neg__(self) -> "DiffForm":
        return DiffForm(tuple(-c for c in self.coeffs))

    def scale(self, c) -> "DiffForm":
        return DiffForm(tuple(p.scale(c) for p in self.coeffs))

    def expanded_terms(self) -> list[tuple[Fraction, str]]:
        return [
            (self.coeffs[k].coeff(j), _xd_unit(j, k))
            for k in range(self.order, -1, -1)
            for j in range(self.coeffs[k].degree, -1, -1)
            if self.coeffs[k].coeff(j)
        ]

    def _groups(self, parenthesize) -> list[tuple[bool, str]]:
        """(negative, unsigned text) chunks in descending derivative order."""
        out: list[tuple[bool, str]] = []
        for k in range(self.order, -1, -1):
            c = self.coeffs[k]
            if c.is_zero():
                continue
            nonzero = [j for j in range(c.degree, -1, -1) if c.coeff(j)]
            if len(nonzero) > 1 and parenthesize(c):
                dpart = "" if k == 0 else ("*D" if k == 1 else f"*D^{k}")
                out.append((False, f"({render_poly(c)}){dpart}"))
                continue
            for j in nonzero:
                text = render_terms([(abs(c.coeff(j)), _xd_unit(j, k))])
                out.append((c.coeff(j) < 0, text))
        return out

    @staticmethod
    def _join(groups: list[tuple[bool, str]]) -> str:
        if not groups:
            return "0"
        neg, text = groups[0]
        parts = [f"-{text}" if neg else text]
        parts += [f"- {t}" if n else f"+ {t}" for n, t in groups[1:]]
        return " ".join(parts)

    def render_grouped(self) -> str:
        """One chunk per derivative order: ``(x^2 - 1)*D^2 + 2*x*D``."""
        return self._join(self._groups(lambda c: True))

    def render_expanded(self) -> str:
        """One ``c*x^j*D^k`` term per nonzero entry: ``x*D^2 - x*D + D``."""
        return render_terms(self.expanded_terms())

    def render_factored(self) -> str:
        """Expanded text with a leading minus sign pulled out: ``-(x*D^2 - x*D + D)``."""
        terms = self.expanded_terms()
        if terms and terms[0][0] < 0:
            return f"-({(-self).render_expanded()})"
        return self.render_expanded()

    def render(self) -> str:
        """Display text.

        An overall minus sign is pulled out when that leaves fewer negative
        terms. Coefficients with several terms stay parenthesized when their
        leading coefficient is positive, and a positive chunk is moved to
        the front if the leading one is negative. This gives
        ``-(x*D^2 - x*D + D)``, ``x*D - D^2`` and ``(x^2 - 1)*D^2 + 2*x*D``.
        """
        def negatives(form: "DiffForm") -> int:
            return sum(1 for c, _ in form.expanded_terms() if c < 0)

        if negatives(-self) < negatives(self):
            return f"-({(-self).render()})"
        groups = self._groups(lambda c: c.leading > 0)
        if groups and groups[0][0]:
            first_pos = next((i for i, (n, _) in enumerate(groups) if not n), None)
            if first_pos is not None:
                groups.insert(0, groups.pop(first_pos))
        return self._join(groups)

    def __str__(self) -> str:
        return self.render()

    def to_json(self) -> dict:
        return {
            "coeffs": [c.to_json() for c in self.coeffs],
            "text": self.render(),
            "expanded": self.render_expanded(),
        }


def to_differential_form(f: LinearMap, max_order: int) -> DiffForm:
    """Identify ``f`` (monomial frame to monomial frame) as ``sum_k c_k(x) D^k``.

    Since ``D^k x^n = 0`` for ``k > n``, column ``n`` pins down ``c_n`` once
    the lower coefficients are known. Orders ``0..max_order`` are tried in
    turn; the first whose coefficients reproduce every column exactly (with
    no truncation) is returned, which makes the answer the minimal order.
    """
    if not (f.source.is_monomial and f.target.is_monomial):
        raise ValueError("to_differential_form needs monomial source and target frames")
    n_cols = f.source.dim
    if not 0 <= max_order < n_cols:
        raise ValueError(f"max_order must satisfy 0 <= max_order < {n_cols}")
    images = f.images()
    coeffs: list[Polynomial] = []
    for k in range(max_order + 1):
        form_lower = DiffForm(tuple(coeffs))
        residual = images[k] - form_lower.apply(Polynomial.monomial(k))
        coeffs.append(residual / math.factorial(k))
        form = DiffForm(tuple(coeffs))
        if all(form.apply(Polynomial.monomial(n)) == images[n] for n in range(k + 1, n_cols)):
            return form
    raise NotDifferentialFormError(f"not a differential form of order <= {max_order}")


def eigenvalues_triangular(f: LinearMap) -> tuple[Fraction, ...]:
    if not f.is_square:
        raise NotTriangularError("eigenvalues need a square map on a single frame")
    if not f.is_upper_triangular():
        raise NotTriangularError(
            "matrix is not upper-triangular in its frame; supply the eigenvalues explicitly"
        )
    return f.diagonal()
