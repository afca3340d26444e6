from fractions import Fraction
from itertools import product

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from toralcent import IntMatrix, IntPoly, ParseError, PreconditionError
from toralcent.exact import (
    RatMatrix,
    char_poly,
    companion,
    det_exact,
    hnf_basis,
    hnf_with_transform,
    integer_kernel,
    lattice_coordinates,
    parse_matrix,
    parse_poly,
)

small = st.integers(min_value=-20, max_value=20)


def monic(max_deg=8):
    return st.lists(small, min_size=1, max_size=max_deg).map(lambda c: IntPoly(c + [1]))


def square(max_dim=5, bound=9):
    return st.integers(1, max_dim).flatmap(
        lambda d: st.lists(st.lists(st.integers(-bound, bound), min_size=d, max_size=d), min_size=d, max_size=d)
    ).map(IntMatrix)


def test_char_poly_examples(d4, cat):
    assert char_poly(d4) == IntPoly([1, -3, 3, -3, 1])
    assert char_poly(IntMatrix.identity(2)) == IntPoly([1, -2, 1])
    assert char_poly(cat) == IntPoly([1, -3, 1])


def test_det_examples(d4, cat):
    assert det_exact(IntMatrix.identity(4)) == 1
    assert det_exact(d4) == 1
    assert det_exact(cat) == 1


@given(monic())
def test_char_poly_of_companion_round_trips(p):
    assert char_poly(companion(p)) == p


@given(square())
def test_det_is_signed_constant_term(m):
    assert det_exact(m) == (-1) ** m.dim * char_poly(m)(0)


@given(square(max_dim=4))
def test_char_poly_matches_sympy(m):
    t = sympy.symbols("t")
    expected = sympy.Poly(sympy.Matrix(m.rows).charpoly(t).as_expr(), t).all_coeffs()[::-1]
    assert list(char_poly(m).coeffs) == [int(c) for c in expected]


def test_large_entries_stay_exact():
    big = 10**30
    m = IntMatrix([[big, 1], [1, big]])
    assert det_exact(m) == big * big - 1


def test_matrix_arithmetic(cat):
    assert cat @ cat.inverse() == IntMatrix.identity(2)
    assert cat ** -2 == (cat @ cat).inverse()
    assert cat * 3 == cat + cat + cat
    assert cat.T == cat and cat.trace() == 3


def test_inverse_of_non_unimodular_raises():
    with pytest.raises(PreconditionError):
        IntMatrix([[2, 0], [0, 1]]).inverse()


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_matrix([[1, 2], [3]])
    with pytest.raises(ParseError):
        parse_matrix([])
    with pytest.raises(ParseError):
        parse_matrix([[1.5]])
    with pytest.raises(ParseError):
        parse_poly("t^2")


def test_hnf_examples():
    assert hnf_basis([(2, 0), (0, 2), (1, 1)]) == [(1, 1), (0, 2)]
    assert hnf_basis([(1, 0), (0, 1)]) == [(1, 0), (0, 1)]
    assert hnf_basis([]) == []


def test_hnf_transform_certifies_rows():
    rows = [[2, 0], [0, 2], [1, 1]]
    H, U = hnf_with_transform(rows)
    assert [[sum(U[i][k] * rows[k][j] for k in range(3)) for j in range(2)] for i in range(3)] == H
    assert abs(sympy.Matrix(U).det()) == 1


def _index2_cosets():
    # the lattice generated by (2,0),(0,2),(1,1) is {(a,b): a = b mod 2}
    return {(a, b) for a, b in product(range(-3, 4), repeat=2) if (a - b) % 2 == 0}


def test_lattice_membership_matches_enumeration():
    basis = hnf_basis([(2, 0), (0, 2), (1, 1)])
    for v in product(range(-3, 4), repeat=2):
        assert (lattice_coordinates(basis, v) is not None) == (v in _index2_cosets())


@given(st.lists(st.lists(st.integers(-6, 6), min_size=3, max_size=3), min_size=1, max_size=5))
def test_hnf_spans_the_same_lattice(vectors):
    basis = hnf_basis(vectors)
    for v in vectors:
        coords = lattice_coordinates(basis, v)
        assert coords is not None
        assert tuple(sum(c * b[j] for c, b in zip(coords, basis)) for j in range(3)) == tuple(v)
    for b in basis:
        assert sympy.Matrix([list(v) for v in vectors]).T.rank() == sympy.Matrix(
            [list(v) for v in vectors] + [list(b)]).T.rank()


def test_integer_kernel_examples():
    assert integer_kernel([[1, -1]]) == [(1, 1)]
    assert integer_kernel([[0, 0], [0, 0]]) == [(1, 0), (0, 1)]
    assert integer_kernel([[2, -1], [0, 0]]) == [(1, 2)]
    assert integer_kernel(RatMatrix([[Fraction(1, 2), Fraction(-1, 3)]])) == [(2, 3)]


@given(st.lists(st.lists(st.integers(-4, 4), min_size=3, max_size=3), min_size=1, max_size=2))
def test_integer_kernel_is_saturated(rows):
    kernel = integer_kernel(rows)
    for v in kernel:
        assert all(sum(a * x for a, x in zip(r, v)) == 0 for r in rows)
    assert len(kernel) == 3 - sympy.Matrix(rows).rank()
    # every small kernel vector is an integer combination of the basis
    for v in product(range(-3, 4), repeat=3):
        if all(sum(a * x for a, x in zip(r, v)) == 0 for r in rows):
            assert lattice_coordinates(kernel, v) is not None


def test_poly_text_and_json():
    p = IntPoly([1, -3, 3, -3, 1])
    assert str(p) == "t^4 - 3*t^3 + 3*t^2 - 3*t + 1"
    assert p.to_json() == [1, -3, 3, -3, 1]
    assert p.reciprocal() == p
