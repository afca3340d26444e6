import math

import mpmath
import numpy as np
import pytest

from conftest import CAT_EXPONENT, D4_EXPONENT, cat_map, cat_mode, d4_map, d4_mode
from toralcent import IntMatrix, ParseError, PreconditionError
from toralcent import dynamics as dy


@pytest.fixture(scope="module")
def f01(d4):
    return d4_map(d4, 0.01)


@pytest.fixture(scope="module")
def sol01(f01):
    return dy.solve_twisted_cocycle(f01, 0, per_axis=16)


def _fresh(d, n=2000, seed=99):
    return dy.wrap(np.random.default_rng(seed).random((n, d)))


# maps

def test_lift_linear_and_normalized(d4):
    f = dy.TorusMap(d4)
    x = _fresh(4, 10)
    assert np.array_equal(f.lift(x), x @ d4.to_numpy().T)
    assert np.array_equal(d4_map(d4, 0.01).lift(np.zeros(4)), np.zeros(4))
    g = dy.TorusMap(d4, [dy.Mode(np.array([1, 0, 0, 0]), np.array([0.1, 0, 0, 0]), np.zeros(4))], 0.01)
    assert np.array_equal(g.lift(np.zeros(4)), np.zeros(4))


def test_lift_matches_high_precision(cat):
    f = cat_map(cat, 0.01)
    mode = cat_mode()
    mpmath.mp.dps = 40
    x = [mpmath.mpf("0.25"), mpmath.mpf(0)]
    s = mpmath.sin(2 * mpmath.pi * (x[0] * int(mode.k[0]) + x[1] * int(mode.k[1])))
    exact = [2 * x[0] + x[1] + mpmath.mpf(0.01) * mpmath.mpf(float(mode.b[0])) * s,
             x[0] + x[1] + mpmath.mpf(0.01) * mpmath.mpf(float(mode.b[1])) * s]
    got = dy.lift_eval(f, [0.25, 0.0])
    assert np.max(np.abs(got - np.array([float(v) for v in exact]))) <= 1e-14


def test_lift_translation_law(d4, f01):
    x = _fresh(4, 50)
    n = np.array([3, -1, 2, 5])
    assert np.max(np.abs(f01.lift(x + n) - f01.lift(x) - d4.to_numpy() @ n)) <= 1e-12


def test_margin_and_parse_errors(cat):
    with pytest.raises(PreconditionError, match="perturbation too large for class"):
        cat_map(cat, 5.0)
    with pytest.raises(PreconditionError):
        dy.TorusMap(IntMatrix([[2, 0], [0, 1]]))
    with pytest.raises(ParseError):
        dy.TorusMap.from_json({"epsilon": 0.1})
    with pytest.raises(ParseError):
        dy.TorusMap.from_json({"linear": [[2, 1], [1, 1]], "modes": [{"k": [1]}]})
    with pytest.raises(ParseError):
        dy.TorusMap.from_json({"linear": [[2, 1], [1, 1]], "epsilon": "big"})


def test_config_round_trip(f01):
    g = dy.TorusMap.from_json(f01.to_json())
    x = _fresh(4, 20)
    assert np.array_equal(g.lift(x), f01.lift(x))


def test_inverse_and_iterates(f01):
    x = _fresh(4, 200)
    y = f01.lift(x)
    assert np.max(np.abs(f01.inverse_lift(y) - x)) <= 1e-13
    f2 = f01.power(2)
    assert np.max(np.abs(f2.lift(x) - f01.lift(f01.lift(x)))) <= 1e-13
    assert np.max(np.abs(f2.displacement(x) + x @ f2.Lf.T - f2.lift(x))) <= 1e-12
    assert np.max(np.abs(f01.power(-1).lift(y) - x)) <= 1e-13
    J = f2.jacobian(x[:5])
    Jc = f01.jacobian(f01.lift(x[:5])) @ f01.jacobian(x[:5])
    assert np.max(np.abs(J - Jc)) <= 1e-13


def test_volume_preserving_test_modes(d4, cat):
    # det DF = 1 + eps * s'(x) * k^T L^-1 b, so these modes preserve volume exactly
    for L, mode in ((d4, d4_mode()), (cat, cat_mode())):
        assert abs(mode.k @ np.linalg.inv(L.to_numpy()) @ mode.b) <= 1e-15


# twisted cocycle

def test_cocycle_zero_perturbation(d4):
    sol = dy.solve_twisted_cocycle(dy.TorusMap(d4), 0, per_axis=8)
    x = _fresh(4, 100)
    assert np.array_equal(sol.phi(x), np.zeros_like(x))
    assert sol.residual_sup == 0.0


@pytest.mark.parametrize("cls", [0, 2])
def test_cocycle_constant_mode_closed_form(d4, cls):
    c = np.array([0.02, -0.01, 0.005, 0.03])
    f = dy.TorusMap(d4, [dy.Mode(np.zeros(4, dtype=int), c, np.zeros(4))], 1.0, normalize=False)
    sol = dy.solve_twisted_cocycle(f, cls, tol=1e-15, per_axis=4)
    P = sol.projector
    expected = np.linalg.solve(d4.to_numpy() - np.eye(4), P @ c)
    x = _fresh(4, 20)
    assert np.max(np.abs(sol.phi(x) - expected)) <= 1e-13


def test_cocycle_residual_d4(f01, sol01):
    fresh = _fresh(4, 4096, seed=5)
    res = float(np.max(np.linalg.norm(sol01.residual(fresh), axis=-1)))
    assert res <= 1e-8 and res <= sol01.bound
    assert sol01.residual_sup <= sol01.bound
    assert sol01.direction == "expanding"


def test_cocycle_contracting_class(f01):
    sol = dy.solve_twisted_cocycle(f01, 2, per_axis=8)
    assert sol.direction == "contracting" and sol.residual_sup <= min(sol.bound, 1e-8)


def test_cocycle_phi_is_periodic_and_in_class(sol01):
    x = _fresh(4, 100)
    n = np.array([1, -2, 0, 3])
    assert np.max(np.abs(sol01.phi(x + n) - sol01.phi(x))) <= 1e-12
    phi = sol01.phi(x)
    assert np.max(np.abs(phi @ sol01.projector.T - phi)) <= 1e-12
    Phi = sol01.Phi(x + n) - sol01.Phi(x)
    assert np.max(np.abs(Phi - sol01.projector @ n)) <= 1e-12


def test_cocycle_rejects_center_class(f01):
    with pytest.raises(PreconditionError):
        dy.solve_twisted_cocycle(f01, 1)


def test_equivariance(d4, f01, sol01):
    assert dy.verify_equivariance(sol01, f01) <= 2 * sol01.residual_sup
    assert dy.verify_equivariance(sol01, f01.power(2)) <= 4 * sol01.residual_sup
    lin = dy.solve_twisted_cocycle(dy.TorusMap(d4), 0, per_axis=4)
    M = dy.TorusMap(d4 - IntMatrix.identity(4))
    assert dy.verify_equivariance(lin, M) <= 1e-12
    other = dy.TorusMap(d4, [dy.Mode(np.array([0, 1, 0, 0]), np.zeros(4), np.array([0.1, 0, 0, 0]))], 0.01)
    with pytest.raises(PreconditionError):
        dy.verify_equivariance(sol01, other)


# Lyapunov exponents

def test_lyapunov_linear(d4, cat):
    est = dy.lyapunov_spectrum(dy.TorusMap(d4), n_steps=2000, n_orbits=4, burn_in=100)
    assert est.exponents == pytest.approx([D4_EXPONENT, 0, 0, -D4_EXPONENT], abs=1e-9)
    est = dy.lyapunov_spectrum(dy.TorusMap(cat), n_steps=2000, n_orbits=4, burn_in=100)
    assert est.exponents == pytest.approx([CAT_EXPONENT, -CAT_EXPONENT], abs=1e-9)


def test_lyapunov_band_sum_and_additivity(d4):
    f = d4_map(d4, 0.05)
    est = dy.lyapunov_spectrum(f, n_steps=5000, n_orbits=8)
    base = [D4_EXPONENT, 0, 0, -D4_EXPONENT]
    for e, s, b in zip(est.exponents, est.stderr, base):
        if b:
            assert abs(e - b) <= 0.05 * abs(b) + 3 * s
    assert abs(sum(est.raw)) <= 1e-6
    est2 = dy.lyapunov_spectrum(f.power(2), n_steps=2500, n_orbits=8)
    for e, e2 in zip(est.exponents, est2.exponents):
        if abs(e) > 0.1:
            assert abs(e2 - 2 * e) <= 0.01 * abs(2 * e)
        else:
            assert abs(e2 - 2 * e) <= 1e-3


def test_lyapunov_is_reproducible(cat):
    f = cat_map(cat, 0.03)
    a = dy.lyapunov_spectrum(f, n_steps=300, n_orbits=3)
    b = dy.lyapunov_spectrum(f, n_steps=300, n_orbits=3)
    assert a.to_json() == b.to_json()


# fixed points

@pytest.mark.parametrize("eps", [0.0, 0.01])
def test_fixed_point_counts(d4, cat, eps):
    cases = [(cat_map(cat, eps), 1), (cat_map(cat @ cat, eps), 5), (d4_map(d4, eps), 1)]
    for f, expected in cases:
        fp = dy.fixed_point_count(f)
        assert fp.algebraic == expected == fp.numeric
        r = f.lift(fp.points) - fp.points
        assert np.max(np.abs(r - np.round(r))) <= 1e-12


def test_fixed_point_zero_is_fixed(cat):
    fp = dy.fixed_point_count(dy.TorusMap(cat))
    assert np.array_equal(fp.points, np.zeros((1, 2)))


def test_fixed_points_need_isolated_set():
    with pytest.raises(PreconditionError):
        dy.fixed_point_count(dy.TorusMap(IntMatrix.identity(2)))


def test_fixed_point_permutations(cat):
    f = dy.TorusMap(cat)
    assert dy.fixed_point_permutation(f, f).permutation == [0]
    g = cat_map(cat, 0.01)
    f2 = g.power(2)
    assert dy.fixed_point_permutation(f2, f2).permutation == list(range(5))
    assert dy.fixed_point_permutation(f2, g.power(-2)).permutation == list(range(5))
    perm = dy.fixed_point_permutation(f2, g)
    assert sorted(perm.permutation) == list(range(5)) and perm.homomorphism_ok
    lin = dy.fixed_point_permutation(dy.TorusMap(cat @ cat), dy.TorusMap(cat))
    assert lin.homomorphism_ok and lin.square_permutation == [lin.permutation[i] for i in lin.permutation]


def test_fixed_point_permutation_detects_non_commuting(cat):
    f = dy.TorusMap(cat @ cat)
    g = dy.TorusMap(cat, [dy.Mode(np.array([0, 1]), np.zeros(2), np.array([0.02, 0.0]))], 1.0)
    with pytest.raises(PreconditionError):
        dy.fixed_point_permutation(f, g)


# Franks-Manning

def test_franks_manning_zero_and_constant(cat):
    H = dy.franks_manning(dy.TorusMap(cat))
    assert H.series.forward == [] and H.series.backward == []
    assert np.array_equal(H.h(_fresh(2, 10)), np.zeros((10, 2)))
    c = np.array([0.01, -0.02])
    g = dy.TorusMap(cat, [dy.Mode(np.zeros(2, dtype=int), c, np.zeros(2))], 1.0, normalize=False)
    H = dy.franks_manning(g, tol=1e-15, per_axis=4)
    expected = np.linalg.solve(cat.to_numpy() - np.eye(2), c)
    assert np.max(np.abs(H.h(_fresh(2, 10)) - expected)) <= 1e-13


def test_franks_manning_perturbed_cat(cat):
    g = cat_map(cat, 0.03)
    H = dy.franks_manning(g)
    fresh = _fresh(2, 5000, seed=11)
    assert H.residual_sup <= 1e-6
    assert float(np.max(np.linalg.norm(H.defect(g, fresh), axis=-1))) <= 1e-6
    assert np.array_equal(H.h(np.zeros((1, 2))), np.zeros((1, 2)))
    assert dy.commuting_pair_check(g, g, H) <= H.residual_sup
    assert dy.commuting_pair_check(g.power(2), g, H) <= 3 * H.residual_sup
    other = dy.TorusMap(cat, [dy.Mode(np.array([0, 1]), np.zeros(2), np.array([0.03, 0.0]))], 1.0)
    assert dy.commuting_pair_check(other, g, H) > 1e3 * H.tol


def test_franks_manning_needs_hyperbolic(d4):
    with pytest.raises(PreconditionError, match="non-hyperbolic"):
        dy.franks_manning(dy.TorusMap(d4))


# center volume growth

def test_center_volume_growth_linear(d4):
    f = dy.TorusMap(d4)
    assert abs(dy.center_volume_growth(f, f, n=10).rate) <= 1e-12
    gamma = d4 + d4.inverse() - IntMatrix.identity(4) * 2
    vg = dy.center_volume_growth(f, dy.TorusMap(gamma), n=10)
    golden = (1 + math.sqrt(5)) / 2
    assert vg.rate == pytest.approx(2 * math.log(golden), abs=1e-9)
    assert vg.linear_logdet == pytest.approx(2 * math.log(golden), abs=1e-9)


def test_center_volume_growth_perturbed(d4):
    f = d4_map(d4, 0.02)
    vg = dy.center_volume_growth(f, f, n=30, n_orbits=3, c=0.5, bound_eps=0.1)
    assert abs(vg.rate) <= 0.05
    assert vg.lower_bound is not None and vg.lower_bound_holds == (vg.rate >= vg.lower_bound)


def test_center_volume_growth_needs_center(cat):
    with pytest.raises(PreconditionError):
        dy.center_volume_growth(dy.TorusMap(cat), dy.TorusMap(cat))
