from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import assume, given
from hypothesis import strategies as st

from toralcent import IntPoly, PreconditionError
from toralcent import polyalg as pa
from toralcent.exact import companion

D4 = IntPoly([1, -3, 3, -3, 1])


def _sympy_irreducible(p: IntPoly) -> bool:
    t = sympy.symbols("t")
    expr = sum(c * t**i for i, c in enumerate(p.coeffs))
    _, factors = sympy.factor_list(expr)
    return len(factors) == 1 and factors[0][1] == 1 and sympy.degree(factors[0][0], t) == p.degree


def test_sturm_examples():
    iso = pa.sturm_isolate(IntPoly([1, -3, 1]), (Fraction(-2), Fraction(2)))
    assert len(iso.real_intervals) == 1
    lo, hi = pa.refine_root(IntPoly([1, -3, 1]), *iso.real_intervals[0], Fraction(1, 10**12))
    assert lo <= Fraction(381966011250105, 10**15) <= hi
    assert len(pa.sturm_isolate(IntPoly([-1, -1, 1]), (Fraction(-2), Fraction(2))).real_intervals) == 2
    iso = pa.sturm_isolate(IntPoly([1, 0, 1]))
    assert iso.real_intervals == [] and iso.complex_pair_count == 1


def test_sturm_rejects_repeated_roots():
    with pytest.raises(PreconditionError):
        pa.sturm_isolate(IntPoly([1, 2, 1]))


@given(st.lists(st.integers(-10, 10), min_size=2, max_size=7).map(lambda c: IntPoly(c + [1])))
def test_isolation_counts_match_numeric_roots(p):
    assume(pa.squarefree_decomposition(p) == [(p, 1)] and p.coeffs[0] != 0)
    iso = pa.sturm_isolate(p)
    assert len(iso.real_intervals) + 2 * iso.complex_pair_count == p.degree
    for a, b in iso.real_intervals:
        assert p(a) != 0 and p(b) != 0
    for (a1, b1), (a2, b2) in zip(iso.real_intervals, iso.real_intervals[1:]):
        assert b1 <= a2
    mpmath.mp.dps = 50
    roots = mpmath.polyroots(list(reversed(p.coeffs)), maxsteps=400, extraprec=400)
    n_real = sum(1 for r in roots if abs(mpmath.im(r)) < mpmath.mpf(10) ** -30)
    assert n_real == len(iso.real_intervals)


@given(st.lists(st.integers(-10, 10), min_size=2, max_size=6).map(lambda c: IntPoly(c + [1])),
       st.fractions(-5, 5), st.fractions(-5, 5), st.fractions(-5, 5))
def test_sturm_counts_are_additive(p, a, m, b):
    assume(pa.squarefree_decomposition(p) == [(p, 1)])
    a, m, b = sorted((a, m, b))
    seq = pa.sturm_sequence(p)
    assert pa.count_roots(seq, a, b) == pa.count_roots(seq, a, m) + pa.count_roots(seq, m, b)


def test_irreducibility_examples():
    assert pa.is_irreducible_q(D4)
    assert not pa.is_irreducible_q(IntPoly([-1, 0, 1]))
    assert pa.is_irreducible_q(IntPoly([1, -3, 1]))


def test_irreducibility_of_product_of_quartics():
    # x^8 + 1 is irreducible but splits mod every prime; (x^4 + 1)(x^4 - 2) only has high-degree factors
    assert pa.is_irreducible_q(IntPoly([1, 0, 0, 0, 0, 0, 0, 0, 1]))
    assert not pa.is_irreducible_q(IntPoly([-2, 0, 0, 0, -1, 0, 0, 0, 1]))


@given(st.lists(st.integers(-10, 10), min_size=1, max_size=6).map(lambda c: IntPoly(c + [1])))
def test_irreducibility_matches_sympy(p):
    assert pa.is_irreducible_q(p) == _sympy_irreducible(p)


def test_self_reciprocal_and_trace_poly():
    assert pa.self_reciprocal_test(D4)
    assert pa.self_reciprocal_test(IntPoly([1, -3, 1]))
    assert not pa.self_reciprocal_test(IntPoly([-1, -1, 1]))
    assert pa.trace_poly_decompose(D4) == IntPoly([1, -3, 1])
    assert pa.trace_poly_decompose(IntPoly([1, -3, 1])) == IntPoly([-3, 1])
    assert pa.trace_poly_decompose(IntPoly([1, 2, 1])) == IntPoly([2, 1])


@given(st.lists(st.integers(-10, 10), min_size=1, max_size=5).map(lambda c: IntPoly(c + [1])))
def test_trace_poly_round_trip(P):
    q = pa.trace_poly_expand(P)
    assert pa.self_reciprocal_test(q)
    assert pa.trace_poly_decompose(q) == P


def test_unit_circle_pair_examples():
    assert pa.unit_circle_pairs(D4) == 1
    assert pa.unit_circle_pairs(IntPoly([1, -3, 1])) == 0
    assert pa.unit_circle_pairs(IntPoly([1, -1, 1])) == 1


@given(st.lists(st.integers(-6, 6), min_size=1, max_size=4).map(lambda c: IntPoly(c + [1])))
def test_unit_circle_pairs_match_eigenvalues(P):
    q = pa.trace_poly_expand(P)
    assume(pa.squarefree_decomposition(q) == [(q, 1)])
    eig = np.linalg.eigvals(companion(q).to_numpy())
    on_circle = sum(1 for z in eig if abs(abs(z) - 1) < 1e-9 and abs(z.imag) > 1e-9)
    assert 2 * pa.unit_circle_pairs(q) == on_circle


def test_poly_in_tn_examples():
    assert pa.poly_in_tn(D4).n == 1
    dec = pa.poly_in_tn(IntPoly([1, 0, 3, 0, 1]))
    assert dec.n == 2 and dec.witness == IntPoly([1, 3, 1])
    assert pa.poly_in_tn(IntPoly([-2, 0, 0, 0, 0, 0, 1])).n == 6


def test_root_of_unity_examples():
    assert pa.has_root_of_unity_factor(IntPoly([1, -1, 1]))
    assert not pa.has_root_of_unity_factor(D4)
    assert pa.has_root_of_unity_factor(IntPoly([-1, 1]))


def test_cyclotomic_matches_sympy():
    x = sympy.symbols("x")
    for m in range(1, 40):
        expected = sympy.Poly(sympy.cyclotomic_poly(m, x), x).all_coeffs()[::-1]
        assert list(pa.cyclotomic(m).coeffs) == [int(c) for c in expected]


def test_squarefree_decomposition():
    p = IntPoly([-1, 1]) ** 3 * IntPoly([1, 0, 1]) ** 2 * IntPoly([2, 1])
    parts = pa.squarefree_decomposition(p)
    assert parts == [(IntPoly([2, 1]), 1), (IntPoly([1, 0, 1]), 2), (IntPoly([-1, 1]), 3)]
