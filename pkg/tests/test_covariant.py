from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import hermite_he, laguerre, legendre, matmul
from sepbasis.core import ONE, X, Polynomial
from sepbasis.covariant import (
    EigenSpec,
    MomentFunctional,
    SeparatedTransform,
    coordinate_projector,
    derive_differential_form,
    derive_operator,
    derive_raising,
    frobenius_covariant,
    moment_projector,
    rejected_projector,
    separated_compose,
    similarity_conjugate,
    spectral_expand,
    stacked_direct,
    stacked_two_step,
    transform_projector,
    transformed_projectors,
    two_point_operator,
    umbral_apply,
)
from sepbasis.errors import CovariantUndefinedError, SingularMatrixError, SpanError
from sepbasis.expr import parse_operator
from sepbasis.families import FAMILIES, base_projectors, family_transform
from sepbasis.opspace import (
    BasisFamily,
    DiffForm,
    LinearMap,
    Const,
    add,
    compile_operator,
    diagonal_map,
    eigenvalues_triangular,
    identity_map,
    map_apply,
    monomial_basis,
    power,
    scale,
    to_differential_form,
    D,
)
from strategies import small_rationals

P = Polynomial
F = Fraction
LAG = FAMILIES["laguerre"]
HER = FAMILIES["hermite"]
LEG = FAMILIES["legendre"]


def xd(n):
    return compile_operator(parse_operator("x*D"), monomial_basis(n))


def raw(m):
    return [list(r) for r in m.matrix]


# frobenius_covariant, coordinate_projector, spectral_expand


def test_covariant_dim2():
    op = xd(2)
    eigs = EigenSpec((0, 1))
    assert frobenius_covariant(op, eigs, 1) == op
    assert frobenius_covariant(op, eigs, 0) == identity_map(op.source) - op


def test_covariant_dim3_middle():
    op = xd(3)
    got = frobenius_covariant(op, EigenSpec((0, 1, 2)), 1)
    # -xD (xD - 2), computed with plain matrices
    a = raw(op)
    shifted = [[a[i][j] - (2 if i == j else 0) for j in range(3)] for i in range(3)]
    oracle = [[-v for v in row] for row in matmul(a, shifted)]
    assert raw(got) == oracle == [[0, 0, 0], [0, 1, 0], [0, 0, 0]]


def test_covariant_repeated_eigenvalues():
    with pytest.raises(CovariantUndefinedError):
        frobenius_covariant(identity_map(monomial_basis(2)), EigenSpec((1, 1)), 0)


def test_coordinate_projector_action():
    fam = BasisFamily("lag", tuple(laguerre(k) for k in range(4)))
    p0 = coordinate_projector(fam, 0)
    assert map_apply(p0, fam.members[0]) == fam.members[0]
    assert map_apply(coordinate_projector(fam, 1), fam.members[0]) == P()
    with pytest.raises(IndexError):
        coordinate_projector(fam, 4)


@given(st.integers(1, 5).flatmap(lambda n: st.lists(small_rationals, min_size=n, max_size=n, unique=True)))
def test_coordinate_projector_is_covariant_of_diagonal(values):
    frame = monomial_basis(len(values))
    op = diagonal_map(frame, values)
    eigs = EigenSpec(values)
    for i in range(len(values)):
        assert coordinate_projector(frame, i) == frobenius_covariant(op, eigs, i)


def test_spectral_expand_examples():
    frame = monomial_basis(3)
    projs = [coordinate_projector(frame, i) for i in range(3)]
    assert spectral_expand(EigenSpec((0, 1, 2)), projs) == xd(3)
    assert spectral_expand(EigenSpec((1, 1, 1)), projs) == identity_map(frame)
    op = xd(4)
    eigs = EigenSpec((0, 1, 2, 3))
    covs = [frobenius_covariant(op, eigs, l) for l in range(4)]
    assert spectral_expand(eigs, covs) == op


# separated_compose and projector transformation


def test_separated_compose_laguerre():
    t = family_transform(LAG, 2)
    o = separated_compose(t)
    assert o.matrix == ((1, 1), (0, -1))
    assert map_apply(o, X) == P([1, -1])
    ident = SeparatedTransform.from_ops(monomial_basis(3), [Const(1)] * 3)
    assert separated_compose(ident) == identity_map(monomial_basis(3))


def test_dependent_images_are_singular():
    t = SeparatedTransform.from_images(monomial_basis(2), [ONE, P([2])])
    with pytest.raises(SingularMatrixError, match="singular"):
        separated_compose(t)


def test_transform_projector_laguerre_dim2():
    t = family_transform(LAG, 2)
    p1 = transform_projector(t, base_projectors(t.source), 1)
    assert p1.matrix == ((0, -1), (0, 1))
    assert map_apply(p1, P([1, -1])) == P([1, -1])
    assert map_apply(p1, ONE) == P()


def test_completeness_laguerre_dim3():
    t = family_transform(LAG, 3)
    projs = transformed_projectors(t)
    total = projs[0] + projs[1] + projs[2]
    assert total == identity_map(t.target_frame)


def test_reversed_order_fails_on_laguerre():
    t = family_transform(LAG, 2)
    bad = rejected_projector(t, 1)
    # by hand: sum P_j O_j = diag(1, -1), its inverse times P_1 O_1 = E_11
    assert bad.matrix == ((0, 0), (0, 1))
    e1 = t.realized_images[1]
    assert map_apply(bad, e1) != e1
    assert map_apply(bad, e1) == P([0, -1])


# random separated transforms for the projector laws


def degree_preserving_ops(n):
    op = st.tuples(small_rationals.filter(bool), small_rationals, small_rationals).map(
        lambda c: add(add(Const(c[0]), scale(c[1], D)), scale(c[2], power(D, 2)))
    )
    return st.lists(op, min_size=n, max_size=n)


random_transforms = st.integers(1, 6).flatmap(
    lambda n: degree_preserving_ops(n).map(lambda ops: SeparatedTransform.from_ops(monomial_basis(n), ops))
)


@given(random_transforms)
def test_projector_laws_random(t):
    projs = transformed_projectors(t)  # also asserts the two forms agree
    n = t.dim
    total = projs[0]
    for p in projs[1:]:
        total = total + p
    assert total == identity_map(t.target_frame)
    for i in range(n):
        for j in range(n):
            prod = projs[i] @ projs[j]
            assert prod == (projs[i] if i == j else projs[i].scale(0))
            want = t.realized_images[j] if i == j else P()
            assert map_apply(projs[i], t.realized_images[j]) == want


@given(random_transforms, st.data())
def test_associativity_random(t, data):
    second = data.draw(degree_preserving_ops(t.dim))
    assert stacked_direct(t, second) == stacked_two_step(t, second)


# derived operators


def test_derive_laguerre_dims_2_and_3():
    for dim in (2, 3):
        t = family_transform(LAG, dim)
        form, m = derive_differential_form(t, base_projectors(t.source), LAG.eigenvalues(dim))
        assert form == DiffForm((P(), P([-1, 1]), P([0, -1])))


def test_derive_laguerre_dim2_matrix():
    t = family_transform(LAG, 2)
    m = derive_operator(t, base_projectors(t.source), EigenSpec((0, 1)))
    assert m.matrix == ((0, -1), (0, 1))
    # a 2x2 matrix alone only fixes the first-order part
    assert to_differential_form(m, 1) == DiffForm((P(), P([-1, 1])))


def test_derive_legendre_dim2():
    t = family_transform(LEG, 2)
    assert t.source.members == (ONE, P([-1, 0, 1]))
    form, m = derive_differential_form(t, base_projectors(t.source), EigenSpec((0, 2)))
    assert form == DiffForm((P(), P([0, 2]), P([-1, 0, 1])))
    inv = t.composite_inverse
    assert t.source.combine(inv.column(1)) == P([-1, 0, 1])


def test_two_point_lift_only_uses_first_two_members():
    full = family_transform(LAG, 6)
    lift_a = two_point_operator(full, LAG.eigenvalues(6))
    lift_b = two_point_operator(full.prefix(2), LAG.eigenvalues(2))
    assert lift_a == lift_b


def test_eigen_relation_all_families():
    for spec in (LAG, HER, LEG):
        t = family_transform(spec, 9)
        m = derive_operator(t, base_projectors(t.source), spec.eigenvalues(9))
        for n, img in enumerate(t.realized_images):
            assert map_apply(m, img) == img.scale(spec.eigenvalue(n))


def test_similarity_identity():
    d = xd(3)
    assert similarity_conjugate(identity_map(d.source), d) == d


def test_similarity_hermite():
    frame = monomial_basis(3)
    o = compile_operator(HER.transform_expr(0), frame)
    got = similarity_conjugate(o, xd(3))
    # xD - D^2 as a plain matrix: x^k -> k x^k - k(k-1) x^(k-2)
    oracle = [[0] * 3 for _ in range(3)]
    for k in range(3):
        oracle[k][k] = k
        if k >= 2:
            oracle[k - 2][k] = -k * (k - 1)
    assert raw(got) == oracle
    assert eigenvalues_triangular(got) == eigenvalues_triangular(xd(3))


# umbral composition


def test_umbral_examples():
    ident = SeparatedTransform.from_ops(monomial_basis(4), [Const(1)] * 4)
    assert umbral_apply(ident, P([1, 2, 3])) == P([1, 2, 3])
    t = family_transform(LAG, 4)
    assert umbral_apply(t, X ** 2) == P([2, -4, 1]) / 2
    assert umbral_apply(t, P([2, 3])) == P([5, -3])
    with pytest.raises(SpanError):
        umbral_apply(t, X ** 4)


@given(st.lists(small_rationals, min_size=6, max_size=6), st.lists(small_rationals, min_size=6, max_size=6), small_rationals, small_rationals)
def test_umbral_linear(a, b, alpha, beta):
    t = family_transform(HER, 6)
    p, q = P(a), P(b)
    assert umbral_apply(t, p.scale(alpha) + q.scale(beta)) == umbral_apply(t, p).scale(alpha) + umbral_apply(t, q).scale(beta)


# moment projectors


def test_moment_projector_examples():
    n = 9
    lag = BasisFamily("lag", tuple(laguerre(k) for k in range(n)))
    mf = LAG.moments(2 * n)
    assert moment_projector(mf, lag, 1, X) == P([-1, 1])
    leg = BasisFamily("leg", tuple(legendre(k) for k in range(n)))
    assert moment_projector(LEG.moments(2 * n), leg, 1, X ** 2) == P()


def test_moment_projector_agrees_with_coordinates():
    for spec, fn in ((LAG, laguerre), (HER, hermite_he), (LEG, legendre)):
        fam = BasisFamily(spec.name, tuple(fn(k) for k in range(9)))
        mf = spec.moments(17)
        for i in range(9):
            cp = coordinate_projector(fam, i)
            for member in fam.members:
                assert moment_projector(mf, fam, i, member, check=False) == map_apply(cp, member)


def test_moment_projector_preconditions():
    mono = monomial_basis(3)
    with pytest.raises(ValueError, match="not orthogonal"):
        moment_projector(LAG.moments(5), mono, 0, X)
    lag = BasisFamily("lag", tuple(laguerre(k) for k in range(3)))
    with pytest.raises(ValueError, match="moments"):
        moment_projector(LAG.moments(3), lag, 0, X)
    with pytest.raises(ValueError):
        MomentFunctional((0, 1))


# raising operators


def test_raising_laguerre():
    t = family_transform(LAG, 6)
    a = derive_raising(t, X)
    assert a.source.dim == 5
    assert map_apply(a, ONE) == P([1, -1])
    assert a == compile_operator(parse_operator("1 - Dinv"), monomial_basis(5), headroom=1)


def test_raising_hermite():
    t = family_transform(HER, 6)
    a = derive_raising(t, X)
    assert a == compile_operator(parse_operator("x - D"), monomial_basis(5), headroom=1)


def test_raising_identity_transform():
    t = SeparatedTransform.from_ops(monomial_basis(4), [Const(1)] * 4)
    assert derive_raising(t, X) == compile_operator(parse_operator("x"), monomial_basis(3), headroom=1)


def test_raising_chain_legendre():
    t = family_transform(LEG, 8)
    a = derive_raising(t, LEG.pearson.B)
    assert a.source.dim == 7
    p = ONE
    for n in range(8):
        assert p == legendre(n)
        if n < 7:
            p = map_apply(a, p)
