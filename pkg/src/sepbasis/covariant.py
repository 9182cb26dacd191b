"""Projectors, separated transforms and the operators derived from them.

A separated transform attaches one operator ``O_i`` to each member ``e_i``
of a source frame. Only the images ``e'_i = O_i(e_i)`` matter for the
projectors; the combined change of basis ``Ô = sum_j O_j P_j`` has those
images as its columns, and every transformed projector or operator is
obtained from ``Ô`` and its exact inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .core import ONE, Polynomial, Q
from .errors import (
    ConsistencyError,
    CovariantUndefinedError,
    FrameMismatchError,
    SingularMatrixError,
    SpanError,
)
from .opspace import (
    D,
    BasisFamily,
    DiffForm,
    LinearMap,
    OperatorExpr,
    add,
    apply_operator,
    compile_operator,
    compose,
    diagonal_map,
    identity_map,
    map_apply,
    map_compose,
    map_invert,
    mat_identity,
    mat_mul,
    monomial_basis,
    multiplier,
    op_from_action,
    scale,
    sub,
    to_differential_form,
    XOP,
    zero_map,
    Const,
)

# frame used to lift an operator known only from its first two eigenpairs;
# it only has to be large enough that a second-order form is pinned down
LIFT_DIM = 8


@dataclass(frozen=True)
class EigenSpec:
    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Q(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def is_simple(self) -> bool:
        return len(set(self.values)) == len(self.values)


@dataclass(frozen=True)
class MomentFunctional:
    """Linear functional ``L[x^n] = moments[n]`` and the inner product ``L[f*g]``."""

    moments: tuple[Fraction, ...]

    def __post_init__(self):
        m = tuple(Q(v) for v in self.moments)
        if not m or m[0] <= 0:
            raise ValueError("moment 0 must be positive")
        object.__setattr__(self, "moments", m)

    def apply(self, p: Polynomial) -> Fraction:
        if p.degree >= len(self.moments):
            raise ValueError(
                f"need {p.degree + 1} moments for a degree-{p.degree} integrand, have {len(self.moments)}"
            )
        return sum((c * m for c, m in zip(p.coeffs, self.moments) if c), Fraction(0))

    def inner(self, f: Polynomial, g: Polynomial) -> Fraction:
        return self.apply(f * g)


# ---------------------------------------------------------------------------
# separated transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SeparatedTransform:
    """Operators ``O_i`` on a source frame, with their realized images.

    ``ops`` may be ``None`` when the images are known directly (for example
    from a Rodrigues recurrence) and no operator expression is at hand.
    """

    source: BasisFamily
    target_frame: BasisFamily
    realized_images: tuple[Polynomial, ...]
    ops: tuple[OperatorExpr, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "realized_images", tuple(self.realized_images))
        if self.ops is not None:
            object.__setattr__(self, "ops", tuple(self.ops))
            if len(self.ops) != self.source.dim:
                raise ValueError(f"expected {self.source.dim} operators, got {len(self.ops)}")
        if len(self.realized_images) != self.source.dim:
            raise ValueError(f"expected {self.source.dim} images, got {len(self.realized_images)}")
        if not self.target_frame.is_monomial:
            raise ValueError("the target frame of a separated transform must be monomial")

    @classmethod
    def from_ops(cls, source: BasisFamily, ops: Sequence[OperatorExpr], target: BasisFamily | None = None):
        ops = tuple(ops)
        if len(ops) != source.dim:
            raise ValueError(f"expected {source.dim} operators, got {len(ops)}")
        images = tuple(apply_operator(op, m) for op, m in zip(ops, source.members))
        return cls(source, target or monomial_basis(source.dim), images, ops)

    @classmethod
    def from_images(cls, source: BasisFamily, images: Sequence[Polynomial], target: BasisFamily | None = None):
        return cls(source, target or monomial_basis(source.dim), tuple(images))

    @property
    def dim(self) -> int:
        return self.source.dim

    def check_coherence(self) -> bool:
        if self.ops is None:
            return True
        return all(apply_operator(op, m) == img for op, m, img in zip(self.ops, self.source.members, self.realized_images))

    @cached_property
    def composite(self) -> LinearMap:
        return op_from_action(self.source, self.target_frame, self.realized_images)

    @cached_property
    def composite_inverse(self) -> LinearMap:
        try:
            return map_invert(self.composite)
        except SingularMatrixError as exc:
            raise SingularMatrixError(
                f"sum of O_j P_j is singular: realized images are linearly dependent; {exc}"
            ) from exc

    def rank_one(self, i: int) -> LinearMap:
        """``O_i P_i`` realized as: member i -> image i, other members -> 0."""
        col = self.composite.column(i)
        m = tuple(tuple(col[r] if j == i else Fraction(0) for j in range(self.dim)) for r in range(len(col)))
        return LinearMap(self.source, self.target_frame, m)

    @cached_property
    def image_family(self) -> BasisFamily:
        return BasisFamily(f"image of {self.source.label}", self.realized_images)

    def prefix(self, m: int) -> "SeparatedTransform":
        """The same transform restricted to the first ``m`` members."""
        ops = None if self.ops is None else self.ops[:m]
        return SeparatedTransform(self.source.prefix(m), monomial_basis(m), self.realized_images[:m], ops)


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------

def frobenius_covariant(op: LinearMap, eigs: EigenSpec, l: int) -> LinearMap:
    """``prod_{k != l} (op - lambda_k) / (lambda_l - lambda_k)``."""
    if not op.is_square:
        raise FrameMismatchError("Frobenius covariants need a square map on a single frame")
    n = op.source.dim
    if len(eigs) != n:
        raise ValueError(f"need {n} eigenvalues, got {len(eigs)}")
    if not 0 <= l < n:
        raise IndexError(f"index {l} out of range for dimension {n}")
    if not eigs.is_simple():
        raise CovariantUndefinedError("covariant undefined: eigenvalues are not pairwise distinct")
    lam = eigs.values
    a = op.matrix
    result = mat_identity(n)
    for k in range(n):
        if k == l:
            continue
        inv = 1 / (lam[l] - lam[k])
        factor = tuple(
            tuple((v - lam[k]) * inv if r == c else (v * inv if v else v) for c, v in enumerate(row))
            for r, row in enumerate(a)
        )
        result = mat_mul(factor, result)
    return LinearMap(op.source, op.source, result)


def coordinate_projector(family: BasisFamily, i: int) -> LinearMap:
    if not 0 <= i < family.dim:
        raise IndexError(f"index {i} out of range for dimension {family.dim}")
    return diagonal_map(family, [1 if j == i else 0 for j in range(family.dim)])


def coordinate_projectors(family: BasisFamily) -> list[LinearMap]:
    return [coordinate_projector(family, i) for i in range(family.dim)]


def spectral_expand(eigs: EigenSpec, projectors: Sequence[LinearMap]) -> LinearMap:
    if len(eigs) != len(projectors):
        raise ValueError("eigenvalue and projector counts differ")
    if not projectors:
        raise ValueError("no projectors given")
    total = zero_map(projectors[0].source, projectors[0].target)
    for lam, p in zip(eigs.values, projectors):
        total = total + p.scale(lam)
    return total


def separated_compose(t: SeparatedTransform) -> LinearMap:
    t.composite_inverse  # raises for dependent images
    return t.composite


def _check_base(t: SeparatedTransform, base_projectors: Sequence[LinearMap]):
    if len(base_projectors) != t.dim:
        raise ValueError(f"expected {t.dim} base projectors, got {len(base_projectors)}")
    for p in base_projectors:
        if not (p.source == t.source and p.target == t.source):
            raise FrameMismatchError(f"base projectors must act on {t.source}")


def transform_projector(t: SeparatedTransform, base_projectors: Sequence[LinearMap], i: int) -> LinearMap:
    """``P'_i = O_i P_i (sum_j O_j P_j)^-1``, checked against ``Ô P_i Ô^-1``."""
    _check_base(t, base_projectors)
    inv = t.composite_inverse
    direct = t.rank_one(i) @ base_projectors[i] @ inv
    similar = t.composite @ base_projectors[i] @ inv
    if direct != similar:
        raise ConsistencyError(f"projector {i}: rank-one form and similarity form differ")
    return direct


def transformed_projectors(t: SeparatedTransform, base_projectors: Sequence[LinearMap] | None = None) -> list[LinearMap]:
    base = coordinate_projectors(t.source) if base_projectors is None else list(base_projectors)
    return [transform_projector(t, base, i) for i in range(t.dim)]


def rejected_projector(t: SeparatedTransform, i: int) -> LinearMap:
    """The reversed ordering ``(sum_j P_j O_j)^-1 P_i O_i`` with compiled ``O_j``.

    This is not a valid projector for the transformed basis; it exists so the
    failure can be demonstrated.
    """
    if t.ops is None or not t.source.is_monomial:
        raise ValueError("the reversed-order form needs compiled operators on a monomial source")
    frame = t.target_frame
    compiled = [compile_operator(op, t.source) for op in t.ops]
    projs = coordinate_projectors(frame)
    total = zero_map(frame, frame)
    for p, o in zip(projs, compiled):
        total = total + p @ o
    return map_invert(total) @ (projs[i] @ compiled[i])


# ---------------------------------------------------------------------------
# derived operators
# ---------------------------------------------------------------------------

def derive_operator(t: SeparatedTransform, base_projectors: Sequence[LinearMap], target_eigs: EigenSpec) -> LinearMap:
    """``(sum_i lambda'_i O_i P_i)(sum_j O_j P_j)^-1`` on the target frame."""
    _check_base(t, base_projectors)
    if len(target_eigs) != t.dim:
        raise ValueError(f"need {t.dim} target eigenvalues, got {len(target_eigs)}")
    inv = t.composite_inverse
    total = zero_map(t.source, t.target_frame)
    for i, lam in enumerate(target_eigs.values):
        if lam:
            total = total + (t.rank_one(i) @ base_projectors[i]).scale(lam)
    result = total @ inv
    for n, (img, lam) in enumerate(zip(t.realized_images, target_eigs.values)):
        if map_apply(result, img) != img.scale(lam):
            raise ConsistencyError(f"derived operator fails its eigen-relation on image {n}")
    return result


def similarity_conjugate(O: LinearMap, Dm: LinearMap) -> LinearMap:
    """``O Dm O^-1``."""
    return O @ Dm @ map_invert(O)


def two_point_operator(
    t: SeparatedTransform,
    target_eigs: EigenSpec,
    frame_dim: int = LIFT_DIM,
    first_step: OperatorExpr | None = None,
) -> LinearMap:
    """Extend the derived operator off the first two images.

    Only ``e_0, e_1``, ``O_0, O_1`` and their images ``P_0 = O_0 e_0``,
    ``P_1 = O_1 e_1`` are used. On ``span{P_0, P_1}`` the inverse change of
    basis composed with the second projector is the first-order operator
    ``(e_1 / P_1') D``, so the derived operator there is

        lambda'_1 O_1 e_1 (1/P_1') D  +  lambda'_0 O_0 (e_0/P_0)(1 - (P_1/P_1') D)

    and this expression, evaluated as an operator on polynomials, is the
    extension. ``first_step`` overrides ``O_1 * e_1`` (multiplication by
    ``e_1`` followed by ``O_1``) when ``O_1`` is only known through its
    action on multiples of ``e_1``.

    When every ``O_i`` is the same operator on a monomial source, the
    transform is one similarity ``O (.) O^-1`` and the source operator
    ``lambda'_0 (1 - xD) + lambda'_1 xD`` is conjugated on the lift frame
    instead.

    Returns the map from ``monomial(frame_dim)`` into a monomial frame with
    two spare degrees, ready for :func:`to_differential_form`.
    """
    if t.dim < 2:
        raise ValueError("two-point lift needs at least two members")
    lam0, lam1 = target_eigs.values[0], target_eigs.values[1]
    p0, p1 = t.realized_images[0], t.realized_images[1]
    e0, e1 = t.source.members[0], t.source.members[1]
    frame = monomial_basis(frame_dim)
    headroom = 2
    uniform = t.ops is not None and t.source.is_monomial and all(op == t.ops[0] for op in t.ops[:2])
    if uniform and first_step is None:
        o = compile_operator(t.ops[0], frame)
        xd = compose(XOP, D)
        base = add(scale(lam0, sub(Const(1), xd)), scale(lam1, xd))
        conj = similarity_conjugate(o, compile_operator(base, frame))
        target = monomial_basis(frame_dim + headroom)
        return op_from_action(frame, target, conj.images())
    if p0.degree != 0 or e0.degree != 0:
        raise ValueError("two-point lift needs constant first member and image")
    if p1.degree != 1:
        raise ValueError("two-point lift needs a degree-1 second image")
    slope = p1.coeff(1)
    if first_step is None:
        if t.ops is None:
            raise ValueError("two-point lift needs operators or an explicit first step")
        first_step = compose(t.ops[1], multiplier(e1))
    expr = scale(lam1 / slope, compose(first_step, D))
    if lam0:
        o0 = Const(1) if t.ops is None else t.ops[0]
        zero_part = scale(e0.coeff(0) / p0.coeff(0), sub(Const(1), scale(1 / slope, compose(multiplier(p1), D))))
        expr = add(expr, scale(lam0, compose(o0, zero_part)))
    return compile_operator(expr, frame, headroom)


def derive_differential_form(
    t: SeparatedTransform,
    base_projectors: Sequence[LinearMap],
    target_eigs: EigenSpec,
    max_order: int = 2,
    first_step: OperatorExpr | None = None,
) -> tuple[DiffForm, LinearMap]:
    """Derived operator on the target frame and its differential form.

    The form comes from the two-point lift; it is checked against the derived
    matrix on the target frame and, when the frame has at least three
    members, against the form read off the matrix directly.
    """
    matrix = derive_operator(t, base_projectors, target_eigs)
    lifted = two_point_operator(t, target_eigs, max(LIFT_DIM, t.dim), first_step)
    form = to_differential_form(lifted, max_order)
    if compile_operator(form.to_operator(), t.target_frame) != matrix:
        raise ConsistencyError("lifted form does not reproduce the derived matrix")
    if t.dim > max_order:
        direct = to_differential_form(matrix, max_order)
        if direct != form:
            raise ConsistencyError(f"direct form {direct} differs from lifted form {form}")
    return form, matrix


# ---------------------------------------------------------------------------
# umbral composition, moments and raising operators
# ---------------------------------------------------------------------------

def umbral_apply(t: SeparatedTransform, p: Polynomial) -> Polynomial:
    """Keep the expansion coefficients of ``p`` and substitute the images."""
    coords = t.source.coordinates(p)
    out = Polynomial()
    for c, img in zip(coords, t.realized_images):
        if c:
            out = out + img.scale(c)
    return out


def check_orthogonal(mf: MomentFunctional, family: BasisFamily) -> None:
    members = family.members
    for a in range(len(members)):
        for b in range(a):
            if mf.inner(members[a], members[b]) != 0:
                raise ValueError(f"family {family.label} is not orthogonal: <{a}, {b}> != 0")


def moment_projector(mf: MomentFunctional, family: BasisFamily, i: int, F: Polynomial, check: bool = True) -> Polynomial:
    """``(<phi_i, F> / <phi_i, phi_i>) phi_i`` under the moment inner product."""
    if not 0 <= i < family.dim:
        raise IndexError(f"index {i} out of range for dimension {family.dim}")
    need = 2 * max(family.ambient_degree, F.degree) + 1
    if len(mf.moments) < need:
        raise ValueError(f"need {need} moments, have {len(mf.moments)}")
    if check:
        check_orthogonal(mf, family)
    phi = family.members[i]
    return phi.scale(mf.inner(phi, F) / mf.inner(phi, phi))


def derive_raising(t: SeparatedTransform, B: Polynomial) -> LinearMap:
    """``Ô (multiply by B) Ô^-1`` on the part of the target frame where it is exact.

    The domain is ``monomial(m)`` for the largest ``m`` such that
    ``B * e_j`` stays in the source span for every ``j < m`` and ``Ô^-1``
    sends ``x^k`` (``k < m``) into the first ``m`` source members.
    """
    src = t.source
    m = 0
    mult = []
    while m < src.dim:
        try:
            mult.append(src.coordinates(B * src.members[m]))
        except SpanError:
            break
        m += 1
    if m == 0:
        raise ValueError(f"multiplication by {B} leaves the source span immediately")
    inv = t.composite_inverse
    for k in range(m):
        if any(inv.matrix[r][k] for r in range(m, src.dim)):
            raise ValueError("inverse change of basis is not triangular enough for a raising operator")
    domain = monomial_basis(m)
    head = src.prefix(m)
    inv_block = LinearMap(domain, head, tuple(tuple(inv.matrix[r][k] for k in range(m)) for r in range(m)))
    mult_map = LinearMap(head, src, tuple(tuple(mult[j][r] for j in range(m)) for r in range(src.dim)))
    return t.composite @ mult_map @ inv_block


# ---------------------------------------------------------------------------
# stacked transforms
# ---------------------------------------------------------------------------

def stacked_direct(t1: SeparatedTransform, second_ops: Sequence[OperatorExpr]) -> list[LinearMap]:
    """Projectors of the transform with per-index operators ``O'_i O_i``, built at once."""
    images = [apply_operator(op, img) for op, img in zip(second_ops, t1.realized_images)]
    t12 = SeparatedTransform.from_images(t1.source, images, t1.target_frame)
    return transformed_projectors(t12)


def stacked_two_step(t1: SeparatedTransform, second_ops: Sequence[OperatorExpr]) -> list[LinearMap]:
    """Projectors obtained by transforming the already transformed ``P'_i`` again."""
    first = transformed_projectors(t1)
    mid = t1.image_family
    images = [apply_operator(op, img) for op, img in zip(second_ops, t1.realized_images)]
    t2 = SeparatedTransform.from_images(mid, images, t1.target_frame)
    # carry P'_i (monomial coordinates) into coordinates of the image family
    embed = op_from_action(mid, t1.target_frame, mid.members)
    back = map_invert(embed)
    base = [back @ p @ embed for p in first]
    return transformed_projectors(t2, base)
