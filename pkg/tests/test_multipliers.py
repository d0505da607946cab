import cmath
import math

import numpy as np
import pytest

from hlmax import multipliers
from hlmax.bodies import isotropic_position, make_ball, make_cube, make_qball
from hlmax.multipliers import (MULTIPLIER_CONSTANT, check_multiplier_bounds,
                               check_section_bounds, cube_multiplier_exact,
                               dirichlet_product, discrete_multiplier,
                               dyadic_symbol_sum, kappa_scale, multiplier,
                               multiplier_batch, poisson_symbol,
                               section_profile, torus_distance)

SEED = 40221


def test_cube_multiplier_product_formula():
    # sinc product, honoring numpy's normalized sinc convention
    xi = np.array([0.5, -1.5, 0.25])
    want = np.prod(np.sinc(xi))
    assert cube_multiplier_exact(xi) == pytest.approx(want, rel=1e-12)
    assert cube_multiplier_exact(np.zeros(4)) == pytest.approx(1.0, rel=1e-15)
    # one-dimensional interval at xi = 1: sin(pi)/pi = 0
    assert cube_multiplier_exact(np.array([1.0])) == pytest.approx(0.0, abs=1e-15)


def test_multiplier_batch_matches_cube_formula():
    iso = isotropic_position(make_cube(2))
    Xi = np.array([[0.3, 0.4], [1.2, -0.6], [0.05, 0.0]])
    m, se, rd, rd_se = multiplier_batch(iso, Xi, seed=SEED, n=400_000)
    exact = np.array([cube_multiplier_exact(x) for x in Xi])
    assert np.all(np.abs(m - exact) < 4.0 * se)
    # symbols of averaging operators never exceed 1
    assert np.all(np.abs(m) <= 1.0 + 4.0 * se)


def test_multiplier_zero_frequency_is_exactly_one():
    iso = isotropic_position(make_qball(3, 1.0))
    s = multiplier(iso, np.zeros(3), seed=SEED, n=5_000)
    assert s.value == pytest.approx(1.0, abs=1e-12)
    assert s.std_error == pytest.approx(0.0, abs=1e-12)


def test_multiplier_conjugate_symmetry_and_quadrature_agreement():
    iso = isotropic_position(make_ball(2))
    xi = np.array([0.8, 0.45])
    a = multiplier(iso, xi, seed=SEED, n=150_000)
    b = multiplier(iso, -xi, seed=SEED, n=150_000)
    # m(-xi) = conj m(xi); for symmetric bodies both are real-ish
    assert a.value == pytest.approx(np.conj(b.value), abs=6.0 * a.std_error)
    assert abs(a.value.imag) < 4.0 * a.std_error
    # the two estimator routes agree
    assert a.agreement_sigmas is not None and a.agreement_sigmas < 5.0
    assert not a.flagged


def test_radial_derivative_small_at_small_xi():
    # <xi, grad m> -> 0 as xi -> 0 (it is O(|xi|^2) for symmetric bodies)
    iso = isotropic_position(make_cube(2))
    s = multiplier(iso, np.array([1e-3, 1e-3]), seed=SEED, n=100_000)
    assert abs(s.radial_derivative) < 1e-3


def test_radial_derivative_interval_closed_form():
    # d=1 interval: m(xi) = sinc(xi), xi m'(xi) = cos(pi xi) - sinc(xi)
    iso = isotropic_position(make_cube(1))
    xi = 0.7
    s = multiplier(iso, np.array([xi]), seed=SEED, n=400_000)
    want = math.cos(math.pi * xi) - np.sinc(xi)
    assert s.radial_derivative.real == pytest.approx(want, abs=5.0 * s.rd_std_error)


def test_section_profile_cube_center():
    iso = isotropic_position(make_cube(4))
    prof = section_profile(iso, np.array([1.0, 0, 0, 0]), seed=SEED, n=80_000)
    assert prof.phi0 == pytest.approx(1.0, abs=5.0 * prof.phi0_std_error + 0.01)
    assert prof.support_radius < 0.5 + 1e-9


def test_section_profile_disc_center():
    # unit-volume disc: phi(0) = 2 r_2 = 2 / sqrt(pi)
    iso = isotropic_position(make_ball(2))
    prof = section_profile(iso, np.array([0.6, 0.8]), seed=SEED, n=120_000)
    want = 2.0 / math.sqrt(math.pi)
    assert prof.phi0 == pytest.approx(want, abs=5.0 * prof.phi0_std_error + 0.01)


def test_section_bounds_pass_on_easy_bodies():
    for body, d in ((make_cube(3), 3), (make_ball(3), 3)):
        iso = isotropic_position(body)
        rng = np.random.default_rng(SEED + d)
        zeta = rng.standard_normal(d)
        prof = section_profile(iso, zeta, seed=SEED, n=100_000)
        rep = check_section_bounds(prof, L=iso.L, L_std_error=0.0)
        assert rep.passed, [m.name for m in rep.margins if not m.passed]
        # center bracket value for the cube family: L * phi(0) ~ 12^-1/2
        prod = [m for m in rep.measurements if m.name == "L_phi0"]
        assert prod and 3.0 / 16.0 <= prod[0].value <= 3.0


def test_check_multiplier_bounds_structure():
    iso = isotropic_position(make_qball(2, 2.0))
    rep = check_multiplier_bounds(iso, seed=SEED, n_xi=150, n=4000)
    assert rep.passed
    names = {m.name for m in rep.margins}
    assert {"decay_worst", "proximity_worst", "derivative_worst"} <= names
    consts = {m.name: m.value for m in rep.measurements}
    assert consts["decay_empirical_const"] < MULTIPLIER_CONSTANT
    assert consts["proximity_empirical_const"] < MULTIPLIER_CONSTANT
    assert consts["derivative_empirical_const"] < MULTIPLIER_CONSTANT


def test_poisson_symbol_basics():
    assert poisson_symbol(0.0, 2.5, 0.3) == pytest.approx(1.0, rel=1e-15)
    v = poisson_symbol(1.0, 0.5, 0.3)
    assert 0.0 < v < 1.0
    # semigroup in t at fixed frequency
    assert poisson_symbol(1.3, 0.2, 0.4) * poisson_symbol(1.3, 0.5, 0.4) == \
        pytest.approx(poisson_symbol(1.3, 0.7, 0.4), rel=1e-12)


def test_dyadic_symbol_sum_closed_form():
    # oracle: with n* = floor(log2(1/a)), the two geometric tails add to
    # 2^(n*+1) a + 2^(-n*) / a
    for a in (0.1, 0.37, 1.0, 1.9, 5.0):
        nstar = math.floor(math.log2(1.0 / a))
        want = 2.0 ** (nstar + 1) * a + 2.0 ** (-nstar) / a
        got, err = dyadic_symbol_sum(a, 80)
        assert got == pytest.approx(want, rel=1e-12)
        assert err < 1e-15
    # exact sup at dyadic a, exact value 2 sqrt 2 halfway between
    assert dyadic_symbol_sum(1.0, 80)[0] == pytest.approx(3.0, rel=1e-12)
    assert dyadic_symbol_sum(0.25, 80)[0] == pytest.approx(3.0, rel=1e-12)
    assert dyadic_symbol_sum(math.sqrt(2.0), 80)[0] == pytest.approx(
        2.0 * math.sqrt(2.0), rel=1e-12)


def test_dyadic_symbol_sum_dilation_invariance():
    rng = np.random.default_rng(SEED)
    for a in np.exp(rng.uniform(-2, 2, size=20)):
        base, _ = dyadic_symbol_sum(a, 70)
        assert dyadic_symbol_sum(2.0 * a, 70)[0] == pytest.approx(base, abs=1e-10)
        assert dyadic_symbol_sum(0.5 * a, 70)[0] == pytest.approx(base, abs=1e-10)


def test_discrete_multiplier_cube_equals_dirichlet_product():
    body = make_qball(2, math.inf)
    rng = np.random.default_rng(SEED)
    for t in (1.0, 2.0, 3.7):
        for _ in range(25):
            xi = rng.uniform(-0.5, 0.5, size=2)
            val, count = discrete_multiplier(body, t, xi)
            want = dirichlet_product(t, xi)
            assert count == (2 * math.floor(t) + 1) ** 2
            assert cmath.isclose(val, want, abs_tol=1e-12)


def test_discrete_multiplier_integer_frequencies_trivial():
    body = make_qball(3, math.inf)
    val, _ = discrete_multiplier(body, 2.0, np.array([1.0, -2.0, 3.0]))
    assert val == pytest.approx(1.0, abs=1e-12)


def test_discrete_multiplier_euclidean_ball_small_case():
    # 13 points of the radius-2 disc; sum computed by hand over shells
    body = make_qball(2, 2.0)
    xi = np.array([0.25, 0.0])
    val, count = discrete_multiplier(body, 2.0, xi)
    assert count == 13
    pts = [(i, j) for i in range(-2, 3) for j in range(-2, 3) if i * i + j * j <= 4]
    want = sum(cmath.exp(2j * math.pi * (xi[0] * p[0])) for p in pts) / 13
    assert cmath.isclose(val, want, abs_tol=1e-12)


def test_torus_distance_and_kappa():
    assert torus_distance(np.array([0.9, 0.0])) == pytest.approx(0.1, rel=1e-9)
    assert torus_distance(np.array([1.0, 2.0])) == 0.0
    assert kappa_scale(4, 3.0, math.inf) == 3.0
    assert kappa_scale(4, 3.0, 2.0) == pytest.approx(1.5, rel=1e-12)
    assert kappa_scale(9, 2.0, 1.0) == pytest.approx(2.0 / 9.0, rel=1e-12)
