import math

import numpy as np
import pytest

from hlmax import bodies
from hlmax.bodies import (ball_isotropic_constant, ball_volume,
                          covariance_matrix, cube_isotropic_constant,
                          default_spectrum, isotropic_position, make_ball,
                          make_cube, make_custom, make_ellipsoid, make_qball,
                          max_cube_shadow, parse_body_spec, q_invariant_cube,
                          qball_isotropic_constant, qball_second_moment,
                          qball_volume, sample_uniform, scale_body,
                          sigma_invariant, unit_ball_radius, volume)

SEED = 99173


def test_qball_volume_closed_forms():
    # cross-polytope: 2^d / d!
    assert qball_volume(3, 1.0) == pytest.approx(8.0 / 6.0, rel=1e-12)
    assert qball_volume(5, 1.0) == pytest.approx(2.0 ** 5 / math.factorial(5), rel=1e-12)
    # cube: 2^d
    assert qball_volume(4, math.inf) == pytest.approx(16.0, rel=1e-12)
    # euclidean: pi^(d/2) / Gamma(1 + d/2)
    assert qball_volume(2, 2.0) == pytest.approx(math.pi, rel=1e-12)
    assert qball_volume(3, 2.0) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)
    assert ball_volume(2, 3.0) == pytest.approx(9.0 * math.pi, rel=1e-12)


def test_unit_ball_radius_normalizes_volume():
    for d in (1, 2, 3, 7, 12):
        r = unit_ball_radius(d)
        assert ball_volume(d, r) == pytest.approx(1.0, rel=1e-12)
    assert unit_ball_radius(2) == pytest.approx(math.pi ** -0.5, rel=1e-12)


def test_second_moment_formula_vs_known_cases():
    # unit euclidean ball: E x_1^2 = 1/(d+2)
    for d in (2, 5, 9):
        assert qball_second_moment(d, 2.0) == pytest.approx(1.0 / (d + 2), rel=1e-12)
    # unit cube [-1,1]^d: E x_1^2 = 1/3
    assert qball_second_moment(4, math.inf) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_isotropic_constants():
    assert cube_isotropic_constant() == pytest.approx(12.0 ** -0.5, rel=1e-14)
    # the ball constant via the generic q formula agrees with r_d/sqrt(d+2)
    for d in (2, 6, 10):
        assert qball_isotropic_constant(d, 2.0) == pytest.approx(
            unit_ball_radius(d) / math.sqrt(d + 2), rel=1e-12)
    # d=10 reference value used by the multiplier bracket discussions
    assert ball_isotropic_constant(10) == pytest.approx(0.2628770, abs=1e-6)
    # in d=2 the cross-polytope is a rotated square: same L as the cube
    assert qball_isotropic_constant(2, 1.0) == pytest.approx(
        cube_isotropic_constant(), rel=1e-12)
    # cube constant is the q=inf instance
    assert qball_isotropic_constant(7, math.inf) == pytest.approx(
        cube_isotropic_constant(), rel=1e-12)


def test_default_spectrum_range():
    lam = default_spectrum(12)
    assert lam.shape == (12,)
    assert np.all(np.diff(lam) > 0)
    assert lam[0] > 1.0 and lam[-1] < math.sqrt(2.0)


def test_make_cube_is_unit_volume_and_contains():
    cube = make_cube(3)
    assert cube.volume_exact == pytest.approx(1.0, rel=1e-12)
    assert cube.contains([0.49, -0.49, 0.0])
    assert not cube.contains([0.51, 0.0, 0.0])


def test_make_ball_is_unit_volume():
    ball = make_ball(4)
    r = unit_ball_radius(4)
    assert ball.volume_exact == pytest.approx(1.0, rel=1e-12)
    assert ball.contains(np.array([r - 1e-9, 0, 0, 0]))
    assert not ball.contains(np.array([r + 1e-9, 0, 0, 0]))


def test_scale_body_gauge_and_volume():
    b = scale_body(make_qball(2, 2.0), 3.0)
    assert b.volume_exact == pytest.approx(9.0 * math.pi, rel=1e-12)
    assert b.contains([2.9, 0.0]) and not b.contains([3.1, 0.0])


def test_sampler_reproducible_and_inside():
    for q in (1.0, 1.7, 2.0, math.inf):
        body = make_qball(3, q)
        X = sample_uniform(body, SEED, 4000)
        Y = sample_uniform(body, SEED, 4000)
        assert np.array_equal(X, Y)
        assert X.shape == (4000, 3)
        assert np.all(body.gauge(X) <= 1.0 + 1e-9)
        # symmetric body: mean near zero
        assert np.max(np.abs(X.mean(axis=0))) < 6.0 / math.sqrt(4000)


def test_sampler_sharding_is_bitwise_stable():
    body = make_ball(2)
    X = sample_uniform(body, SEED, 6000, shards=3)
    Y = sample_uniform(body, SEED, 6000, shards=3)
    assert np.array_equal(X, Y)
    Z = sample_uniform(body, SEED + 1, 6000, shards=3)
    assert not np.array_equal(X, Z)


def test_rejection_matches_direct_moments():
    body = make_qball(2, 4.0)
    Xd = sample_uniform(body, SEED, 30000, method="direct")
    Xr = sample_uniform(body, SEED + 1, 30000, method="rejection")
    # same distribution: compare second moments loosely
    md, mr = np.mean(Xd ** 2, axis=0), np.mean(Xr ** 2, axis=0)
    assert np.allclose(md, mr, atol=5e-3)


def test_mc_volume_against_closed_form():
    est = volume(make_qball(2, 1.0), seed=SEED, n=200_000, force_mc=True)
    assert not est.exact
    assert abs(est.value - 2.0) < 4.0 * est.std_error
    assert est.std_error < 0.02


def test_covariance_of_cube_is_identity_over_12():
    cov = covariance_matrix(make_cube(3), seed=SEED, n=100_000)
    assert np.all(np.abs(cov.matrix - np.eye(3) / 12.0) < 5.0 * cov.std_error + 1e-12)


def test_isotropic_exact_routes():
    # unit-volume cube is already isotropic: identity transform, L = 12^-1/2
    iso = isotropic_position(make_cube(4))
    assert iso.exact
    assert np.allclose(iso.transform, np.eye(4), atol=1e-12)
    assert iso.L == pytest.approx(cube_isotropic_constant(), rel=1e-12)
    # raw q-ball route
    iso1 = isotropic_position(make_qball(3, 1.0))
    assert iso1.exact
    s = qball_volume(3, 1.0) ** (-1.0 / 3.0)  # rescale to unit volume
    assert np.allclose(iso1.transform, s * np.eye(3), rtol=1e-12)
    assert iso1.L == pytest.approx(qball_isotropic_constant(3, 1.0), rel=1e-12)


def test_isotropic_ellipsoid_exact_is_spherical():
    iso = isotropic_position(make_ellipsoid([1.0, 2.0, 4.0]))
    assert iso.exact
    body = iso.body
    X = sample_uniform(body, SEED, 50_000)
    m2 = np.mean(X ** 2, axis=0)
    # whitened: isotropic second moments in every axis
    assert np.max(m2) / np.min(m2) < 1.03
    assert iso.L == pytest.approx(ball_isotropic_constant(3), rel=1e-12)


def test_isotropic_mc_matches_exact():
    iso_e = isotropic_position(make_ellipsoid([1.0, 2.0]))
    iso_m = isotropic_position(make_ellipsoid([1.0, 2.0]), seed=SEED,
                               n=150_000, method="mc")
    assert not iso_m.exact
    assert np.max(np.abs(iso_m.transform - iso_e.transform)) < 0.03
    assert abs(iso_m.L - iso_e.L) < 4.0 * iso_m.L_std_error + 1e-3
    assert iso_m.report is not None and iso_m.report.passed


def test_isotropic_mc_certificate_margin():
    iso = isotropic_position(make_qball(2, 1.5), seed=SEED, n=100_000,
                             method="mc")
    names = [m.name for m in iso.report.margins]
    assert "covariance_residual" in names
    assert iso.report.passed


def test_sigma_invariant_bracket_for_cube():
    iso = isotropic_position(make_cube(3))
    sig, rep = sigma_invariant(iso, seed=SEED, n=100_000)
    assert rep.passed
    assert iso.L / 8.0 <= sig.sigma <= 8.0 * iso.L
    # cube sections through the center are at least 1 in volume
    assert sig.max_section > 0.95


def test_sigma_invariant_interval_is_one():
    iso = isotropic_position(make_cube(1))
    sig, _ = sigma_invariant(iso, seed=SEED, n=50_000)
    assert sig.sigma == pytest.approx(1.0, abs=0.05)


def test_q_invariant_cube_values():
    assert q_invariant_cube(3, [1.0, 0.0, 0.0]) == pytest.approx(1.0, rel=1e-12)
    assert q_invariant_cube(2, [1.0, 1.0]) == pytest.approx(math.sqrt(2.0), rel=1e-12)
    with pytest.raises(ValueError):
        q_invariant_cube(2, [0.0, 0.0])


def test_max_cube_shadow_attains_sqrt_d():
    for d in (2, 3, 6):
        val, direction = max_cube_shadow(d, seed=SEED)
        assert val == pytest.approx(math.sqrt(d), rel=1e-9)
        assert np.linalg.norm(direction) == pytest.approx(1.0, rel=1e-9)


def test_parse_body_spec_variants(tmp_path):
    assert parse_body_spec("cube", 3).kind == "linear"
    assert parse_body_spec("ball", 2).volume_exact == pytest.approx(1.0)
    b = parse_body_spec("qball:1.5", 4)
    assert b.params["q"] == 1.5 and b.dim == 4
    e = parse_body_spec("ellipsoid:1,2,4")
    assert e.dim == 3 and e.kind == "ellipsoid"
    auto = parse_body_spec("ellipsoid:auto", 5)
    assert auto.dim == 5
    mat = tmp_path / "m.json"
    mat.write_text("[[2.0, 0.0], [0.0, 0.5]]")
    lin = parse_body_spec(f"linear:{mat}")
    assert lin.dim == 2
    assert lin.volume_exact == pytest.approx(math.pi, rel=1e-12)
    with pytest.raises(ValueError):
        parse_body_spec("qball:0.5", 2)
    with pytest.raises(ValueError):
        parse_body_spec("cube")  # needs a dimension


def test_custom_body_rejection_sampling():
    # diamond with a known gauge, no direct sampler
    gauge = lambda x: np.sum(np.abs(x), axis=-1)
    body = make_custom(2, gauge, bounding_radius=1.0, volume_exact=2.0)
    X = sample_uniform(body, SEED, 20_000)
    assert np.all(gauge(X) <= 1.0 + 1e-12)
    est = volume(body, seed=SEED, n=100_000, force_mc=True)
    assert abs(est.value - 2.0) < 4.0 * est.std_error


def test_linear_image_preserves_uniformity():
    A = np.array([[1.0, 0.7], [0.0, 1.0]])  # shear
    body = bodies.make_linear_image(make_qball(2, math.inf), A)
    assert body.volume_exact == pytest.approx(4.0, rel=1e-12)
    X = sample_uniform(body, SEED, 50_000)
    assert np.all(body.gauge(X) <= 1.0 + 1e-9)
    # shear maps should produce correlated coordinates
    c = np.corrcoef(X.T)[0, 1]
    assert c > 0.3
