from fractions import Fraction
from math import factorial

import pytest

from oracles import CLASSICAL, hermite_he, laguerre, legendre
from sepbasis.core import ONE, X, Polynomial
from sepbasis.families import (
    FAMILIES,
    METHODS,
    PearsonPair,
    gen_classical,
    gen_sequence,
    get_family,
    pearson_eigenvalue,
    pearson_operator,
    rodrigues_general,
)
from sepbasis.opspace import DiffForm, compile_operator, map_apply, monomial_basis

P = Polynomial
F = Fraction


def test_gen_examples():
    for method in METHODS:
        assert gen_classical("laguerre", 2, method) == P([2, -4, 1]) / 2
    assert gen_classical("hermite", 3, "operator") == P([0, -3, 0, 1])
    assert gen_classical("legendre", 2, "rodrigues") == P([F(-1, 2), 0, F(3, 2)])


def test_gen_rejects_bad_input():
    with pytest.raises(ValueError):
        gen_classical("jacobi", 2, "operator")
    with pytest.raises(ValueError):
        gen_classical("laguerre", 2, "magic")
    with pytest.raises(ValueError):
        gen_classical("laguerre", -1, "operator")


def test_rodrigues_examples():
    assert rodrigues_general(PearsonPair(P([1, -1]), X), 2) == P([2, -4, 1])
    assert rodrigues_general(PearsonPair(P([0, -1]), ONE), 2) == P([-1, 0, 1])
    assert rodrigues_general(PearsonPair(P([0, 2]), P([-1, 0, 1])), 1) == P([0, 2])
    assert rodrigues_general(PearsonPair(P([0, 2]), P([-1, 0, 1])), 0) == ONE


def test_pearson_pair_constraints():
    with pytest.raises(ValueError, match="degree <= 1"):
        PearsonPair(X ** 2, ONE)
    with pytest.raises(ValueError):
        PearsonPair(X, X ** 3)
    with pytest.raises(ValueError):
        PearsonPair(X, P())


def test_pearson_operator_examples():
    assert pearson_operator(FAMILIES["laguerre"].pearson) == DiffForm((P(), P([1, -1]), X))
    assert pearson_operator(FAMILIES["hermite"].pearson) == DiffForm((P(), P([0, -1]), ONE))
    assert pearson_operator(FAMILIES["legendre"].pearson) == DiffForm((P(), P([0, 2]), P([-1, 0, 1])))
    assert str(pearson_operator(FAMILIES["legendre"].pearson)) == "(x^2 - 1)*D^2 + 2*x*D"


def test_pearson_eigenvalue_examples():
    leg = FAMILIES["legendre"].pearson
    assert [pearson_eigenvalue(leg, n) for n in range(6)] == [n * (n + 1) for n in range(6)]
    assert pearson_eigenvalue(FAMILIES["laguerre"].pearson, 2) == -2
    assert pearson_eigenvalue(PearsonPair(P([3, 7]), P([1, 2, 5])), 0) == 0


@pytest.mark.parametrize("name", list(FAMILIES))
def test_three_methods_and_oracle(name):
    seqs = [gen_sequence(name, 11, m) for m in METHODS]
    oracle = [CLASSICAL[name](n) for n in range(12)]
    assert seqs[0] == seqs[1] == seqs[2] == oracle
    assert all(p.degree == n for n, p in enumerate(oracle))
    gen_sequence(name, 11, "operator", check=True)


@pytest.mark.parametrize("name", list(FAMILIES))
def test_eigen_relation_of_pearson_operator(name):
    spec = FAMILIES[name]
    op = compile_operator(pearson_operator(spec.pearson).to_operator(), monomial_basis(12))
    for n in range(12):
        p = CLASSICAL[name](n)
        assert map_apply(op, p) == p.scale(pearson_eigenvalue(spec.pearson, n))


@pytest.mark.parametrize("name", list(FAMILIES))
def test_orthogonality_and_norms(name):
    spec = FAMILIES[name]
    mf = spec.moments(17)
    polys = [CLASSICAL[name](n) for n in range(9)]
    for m in range(9):
        for n in range(9):
            want = spec.norm(n) if m == n else 0
            assert mf.inner(polys[m], polys[n]) == want
    expected = {
        "laguerre": [F(1)] * 9,
        "hermite": [F(factorial(n)) for n in range(9)],
        "legendre": [F(2, 2 * n + 1) for n in range(9)],
    }[name]
    assert [spec.norm(n) for n in range(9)] == expected


def test_rodrigues_scale_laws():
    lag, her, leg = (FAMILIES[k].pearson for k in ("laguerre", "hermite", "legendre"))
    for n in range(13):
        assert rodrigues_general(lag, n) == laguerre(n).scale(factorial(n))
        assert rodrigues_general(her, n) == hermite_he(n).scale((-1) ** n)
        assert rodrigues_general(leg, n) == legendre(n).scale(2 ** n * factorial(n))


def test_get_family():
    assert get_family("hermite").name == "hermite"
    with pytest.raises(ValueError, match="laguerre"):
        get_family("Hermite")
