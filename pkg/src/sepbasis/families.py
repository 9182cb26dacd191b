"""Classical families and the Rodrigues construction from a Pearson pair.

A Pearson pair ``(A, B)`` (``deg A <= 1``, ``deg B <= 2``) fixes a weight
through ``w'/w = (A - B')/B`` and the Rodrigues polynomials
``h_n = (1/w) D^n [w B^n]``. The weight never has to be written down:
``h_n`` follows from a polynomial recurrence, and the polynomials are
eigenfunctions of ``B D^2 + A D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .core import ONE, X, Polynomial, Q
from .covariant import (
    EigenSpec,
    MomentFunctional,
    SeparatedTransform,
    coordinate_projectors,
    derive_raising,
    frobenius_covariant,
)
from .errors import ConsistencyError
from .opspace import (
    D,
    DINV,
    XOP,
    BasisFamily,
    Const,
    DiffForm,
    Exp,
    OperatorExpr,
    add,
    apply_operator,
    build_basis,
    compile_operator,
    compose,
    diagonal_map,
    map_apply,
    multiplier,
    power,
    scale,
    sub,
)

METHODS = ("operator", "rodrigues", "raising")


@dataclass(frozen=True)
class PearsonPair:
    A: Polynomial
    B: Polynomial

    def __post_init__(self):
        if self.A.degree > 1:
            raise ValueError(f"A must have degree <= 1, got degree {self.A.degree} ({self.A})")
        if self.B.is_zero():
            raise ValueError("B must be nonzero")
        if self.B.degree > 2:
            raise ValueError(f"B must have degree <= 2, got degree {self.B.degree} ({self.B})")

    @property
    def a1(self) -> Fraction:
        return self.A.coeff(1)

    @property
    def b2(self) -> Fraction:
        return self.B.coeff(2)

    def weight_ratio(self) -> tuple[Polynomial, Polynomial]:
        """Numerator and denominator of ``w'/w = (A - B')/B``."""
        return self.A - self.B.derivative(), self.B

    def first_step(self) -> OperatorExpr:
        """``B D + A``: the first Rodrigues step acting on multiples of ``B``."""
        return add(compose(multiplier(self.B), D), multiplier(self.A))


def rodrigues_general(pair: PearsonPair, n: int) -> Polynomial:
    """``h_n`` from ``h_{j+1} = B h_j' + ((n-j) B' + A - B') h_j``, ``h_0 = 1``.

    Writing ``w B^n`` differentiated ``j`` times as ``w B^(n-j) h_j`` and
    differentiating once more gives the recurrence.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    A, B = pair.A, pair.B
    dB = B.derivative()
    h = ONE
    for j in range(n):
        h = B * h.derivative() + (dB.scale(n - j) + A - dB) * h
    return h


def pearson_operator(pair: PearsonPair) -> DiffForm:
    return DiffForm((Polynomial(), pair.A, pair.B))


def pearson_eigenvalue(pair: PearsonPair, n: int) -> Fraction:
    if n < 0:
        raise ValueError("n must be >= 0")
    return n * pair.a1 + n * (n - 1) * pair.b2


@dataclass(frozen=True)
class FamilySpec:
    name: str
    pearson: PearsonPair
    transform_expr: Callable[[int], OperatorExpr]
    source_kind: str  # "monomial" or "bpower"
    eigenvalue: Callable[[int], Fraction]
    raising_closed_form: OperatorExpr | None
    moment: Callable[[int], Fraction]
    rodrigues_scale: Callable[[int], Fraction]
    # sign s with derived operator = s * (B D^2 + A D)
    pearson_sign: int
    norm: Callable[[int], Fraction]

    def source_basis(self, dim: int) -> BasisFamily:
        if self.source_kind == "bpower":
            return build_basis("bpower", dim, self.pearson.B)
        return build_basis("monomial", dim)

    @property
    def raising_generator(self) -> Polynomial:
        """What ``Ô^-1 A+ Ô`` multiplies by: ``x`` or the B-power step ``B``."""
        return self.pearson.B if self.source_kind == "bpower" else X

    def moments(self, count: int) -> MomentFunctional:
        return MomentFunctional(tuple(self.moment(k) for k in range(count)))

    def eigenvalues(self, dim: int) -> EigenSpec:
        return EigenSpec(tuple(self.eigenvalue(n) for n in range(dim)))


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


_HERMITE_OP = Exp(scale(Fraction(-1, 2), power(D, 2)))

FAMILIES: dict[str, FamilySpec] = {
    "laguerre": FamilySpec(
        name="laguerre",
        pearson=PearsonPair(Polynomial((1, -1)), X),
        transform_expr=lambda n: scale(Fraction(1, math.factorial(n)), power(sub(D, Const(1)), n)),
        source_kind="monomial",
        eigenvalue=lambda n: Fraction(n),
        raising_closed_form=sub(Const(1), DINV),
        moment=lambda k: Fraction(math.factorial(k)),
        rodrigues_scale=lambda n: Fraction(math.factorial(n)),
        pearson_sign=-1,
        norm=lambda n: Fraction(1),
    ),
    "hermite": FamilySpec(
        name="hermite",
        pearson=PearsonPair(Polynomial((0, -1)), ONE),
        transform_expr=lambda n: _HERMITE_OP,
        source_kind="monomial",
        eigenvalue=lambda n: Fraction(n),
        raising_closed_form=sub(XOP, D),
        moment=lambda k: Fraction(_double_factorial(k - 1)) if k % 2 == 0 else Fraction(0),
        rodrigues_scale=lambda n: Fraction((-1) ** n),
        pearson_sign=-1,
        norm=lambda n: Fraction(math.factorial(n)),
    ),
    "legendre": FamilySpec(
        name="legendre",
        pearson=PearsonPair(Polynomial((0, 2)), Polynomial((-1, 0, 1))),
        transform_expr=lambda n: scale(Fraction(1, 2 ** n * math.factorial(n)), power(D, n)),
        source_kind="bpower",
        eigenvalue=lambda n: Fraction(n * (n + 1)),
        raising_closed_form=None,
        moment=lambda k: Fraction(2, k + 1) if k % 2 == 0 else Fraction(0),
        rodrigues_scale=lambda n: Fraction(2 ** n * math.factorial(n)),
        pearson_sign=1,
        norm=lambda n: Fraction(2, 2 * n + 1),
    ),
}


def get_family(name: str) -> FamilySpec:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}") from None


# ---------------------------------------------------------------------------
# transforms and generation
# ---------------------------------------------------------------------------

def family_transform(spec: FamilySpec, dim: int) -> SeparatedTransform:
    src = spec.source_basis(dim)
    return SeparatedTransform.from_ops(src, [spec.transform_expr(n) for n in range(dim)])


def source_operator(spec_or_frame, dim: int | None = None):
    """The source-frame operator ``diag(0, 1, ..., dim-1)``.

    On monomials it is ``xD``; on B-powers it is the operator that counts
    powers of ``B``, which as a differential operator would be ``(B/B') D``.
    """
    frame = spec_or_frame.source_basis(dim) if isinstance(spec_or_frame, FamilySpec) else spec_or_frame
    return diagonal_map(frame, range(frame.dim))


def base_projectors(frame: BasisFamily) -> list:
    """Frobenius covariants of the source operator, checked against coordinate projectors."""
    op = source_operator(frame)
    eigs = EigenSpec(tuple(range(frame.dim)))
    covs = [frobenius_covariant(op, eigs, l) for l in range(frame.dim)]
    if covs != coordinate_projectors(frame):
        raise ConsistencyError("Frobenius covariants of the source operator are not coordinate projectors")
    return covs


def pearson_transform(pair: PearsonPair, dim: int) -> SeparatedTransform:
    """Source ``B``-powers (or monomials when ``B`` is constant) sent to raw ``h_n``."""
    if pair.B.degree >= 1:
        src = build_basis("bpower", dim, pair.B)
    else:
        src = build_basis("monomial", dim)
    return SeparatedTransform.from_images(src, [rodrigues_general(pair, n) for n in range(dim)])


def _raising_chain(spec: FamilySpec, n: int) -> list[Polynomial]:
    out = [ONE]
    if spec.raising_closed_form is not None:
        for k in range(n):
            out.append(apply_operator(spec.raising_closed_form, out[-1]))
        return out
    t = family_transform(spec, n + 2)
    raise_map = derive_raising(t, spec.raising_generator)
    for k in range(n):
        out.append(map_apply(raise_map, out[-1]))
    return out


def gen_classical(spec: FamilySpec | str, n: int, method: str, check: bool = False) -> Polynomial:
    """The ``n``-th normalized family polynomial by the chosen method."""
    return gen_sequence(spec, n, method, check)[-1]


def gen_sequence(spec: FamilySpec | str, n: int, method: str, check: bool = False) -> list[Polynomial]:
    """``P_0 ... P_n`` by the chosen method; ``check`` compares against the other two."""
    if isinstance(spec, str):
        spec = get_family(spec)
    if n < 0:
        raise ValueError("n must be >= 0")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "operator":
        src = spec.source_basis(n + 1)
        out = []
        for k in range(n + 1):
            member = src.members[k]
            frame = build_basis("monomial", member.degree + 1)
            out.append(map_apply(compile_operator(spec.transform_expr(k), frame), member))
    elif method == "rodrigues":
        out = [rodrigues_general(spec.pearson, k) / spec.rodrigues_scale(k) for k in range(n + 1)]
    else:
        out = _raising_chain(spec, n)
    if check:
        for other in METHODS:
            if other != method and gen_sequence(spec, n, other) != out:
                raise ConsistencyError(f"{spec.name}: methods {method} and {other} disagree")
    return out
