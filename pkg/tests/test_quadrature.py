import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cyl.constants import sobolev_constants
from cyl.quadrature import (QuadratureSpec, QuadratureError, build_frozen_mesh,
                            integrate_axisym_sphere, integrate_ball4,
                            integrate_biradial, integrate_radial,
                            integrate_sphere3)

K = sobolev_constants()
SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13)


def bubble_sq(r, eps=1.0):
    return (K.c4 / eps) / (1.0 + r / eps ** 2)  # not used; keep simple helpers local


def test_radial_polynomial():
    res = integrate_radial(lambda r: r ** 3, (0.0, 1.0), SPEC).expect()
    assert_allclose(res.value, 0.25, rtol=1e-12)


def test_radial_beta_integral():
    res = integrate_radial(lambda r: r ** 3 / (1.0 + r * r) ** 4,
                           (0.0, math.inf), SPEC).expect()
    assert_allclose(res.value, 1.0 / 12.0, rtol=1e-10)


def test_radial_bubble_normalization():
    def f(r):
        return (K.c4 / (1.0 + r * r)) ** 4 * 2.0 * math.pi ** 2 * r ** 3

    res = integrate_radial(f, (0.0, math.inf), SPEC).expect()
    assert_allclose(res.value, 1.0, atol=1e-10)


def test_radial_nonconvergence_is_flagged():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=2)
    res = integrate_radial(lambda r: np.sin(40.0 * r) ** 2 / (1 + r * r),
                           (0.0, 50.0), spec)
    assert not res.converged
    with pytest.raises(QuadratureError):
        res.expect()


def test_biradial_cylinder_volume():
    res = integrate_biradial(lambda z, p: np.ones_like(z), SPEC,
                             zeta_domain=(0.0, 1.0), rho_domain=(0.0, 1.0)).expect()
    assert_allclose(res.value, 4.0 * math.pi / 3.0, rtol=1e-11)


def u_profile(r2, eps=1.0):
    return (K.c4 / eps) / (1.0 + r2 / eps ** 2)


def test_biradial_translated_bubble_norm():
    t = 2.0

    def F(z, p):
        return u_profile((z - t) ** 2 + p * p) ** 4

    spec = SPEC.with_grading(((t, 0.0), 1.0))
    res = integrate_biradial(F, spec).expect()
    assert_allclose(res.value, 1.0, atol=1e-9)


def test_biradial_interaction_far_field():
    # int U_+^3 U_- at t = 50 ~ (B/S4) * (eps/t)^2 = 0.75 / 2500
    t = 50.0

    def F(z, p):
        return u_profile((z - t) ** 2 + p * p) ** 3 * u_profile((z + t) ** 2 + p * p)

    spec = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-15,
                          grading=(((t, 0.0), 1.0), ((-t, 0.0), 1.0)))
    res = integrate_biradial(F, spec).expect()
    assert abs(res.value - 0.75 / t ** 2) < 0.02 * 0.75 / t ** 2


def test_error_contract_recompute_tighter():
    # converged => a 10x tighter recomputation moves the value by less than
    # the reported error estimate
    cases = []

    def f1(r):
        return np.exp(-r) * np.cos(3.0 * r)

    cases.append((lambda: integrate_radial(f1, (0.0, math.inf),
                                           QuadratureSpec(1e-6, 1e-9)),
                  lambda: integrate_radial(f1, (0.0, math.inf),
                                           QuadratureSpec(1e-7, 1e-10))))

    def F2(z, p):
        return np.exp(-(z * z + p * p)) * (1.0 + z * p)

    cases.append((lambda: integrate_biradial(F2, QuadratureSpec(1e-6, 1e-9)),
                  lambda: integrate_biradial(F2, QuadratureSpec(1e-7, 1e-10))))
    for loose, tight in cases:
        a = loose().expect()
        b = tight().expect()
        assert abs(a.value - b.value) <= a.error_estimate + b.error_estimate


def test_monotone_refinement_cauchy():
    def f(r):
        return r ** 3 / (1.0 + r * r) ** 4

    prev = None
    diffs = []
    for n in (8, 16, 32, 64):
        spec = QuadratureSpec(rel_tol=1e-15, abs_tol=1e-18, max_subdivisions=n)
        val = integrate_radial(f, (0.0, math.inf), spec).value
        if prev is not None:
            diffs.append(abs(val - prev))
        prev = val
    assert diffs[-1] <= diffs[0] + 1e-16


def test_ball4_volume_and_moment():
    res = integrate_ball4(lambda pts: np.ones(len(pts)), 1.0, SPEC).expect()
    assert_allclose(res.value, math.pi ** 2 / 2.0, rtol=1e-10)
    res2 = integrate_ball4(lambda pts: np.sum(pts * pts, axis=1), 1.0, SPEC).expect()
    assert_allclose(res2.value, math.pi ** 2 / 3.0, rtol=1e-10)


def test_ball4_bubble_tail():
    def f(pts):
        return u_profile(np.sum(pts * pts, axis=1)) ** 4

    res = integrate_ball4(f, 10.0, QuadratureSpec(1e-9, 1e-12)).expect()
    # exact tail: int_{r>R} U^4 = 12 * (1/(4u^2) - 1/(6u^3)), u = 1 + R^2
    u = 1.0 + 10.0 ** 2
    tail = 12.0 * (0.25 / u ** 2 - 1.0 / (6.0 * u ** 3))
    assert abs(res.value - (1.0 - tail)) < 1e-8
    # leading-order bound c4^4 pi^2/(2 R^4) captures the tail's magnitude
    assert tail == pytest.approx(K.c4 ** 4 * math.pi ** 2 / 2.0 * 1e-4, rel=0.05)


def test_sphere3_area_and_symmetry():
    res = integrate_sphere3(lambda pts: np.ones(len(pts)), 1.0, np.zeros(4), SPEC)
    assert res.converged
    assert_allclose(res.value, 2.0 * math.pi ** 2, rtol=1e-12)
    lin = integrate_sphere3(lambda pts: pts[:, 1], 0.7, np.zeros(4), SPEC)
    assert abs(lin.value) < 1e-12


def test_sphere3_bubble_flux():
    # (d_r U_eps) U_eps on a centered sphere of radius tau
    eps, tau = 0.5, 1.3

    def f(pts):
        r2 = np.sum(pts * pts, axis=1)
        u = (K.c4 / eps) / (1.0 + r2 / eps ** 2)
        du = -2.0 * K.c4 * np.sqrt(r2) / eps ** 3 / (1.0 + r2 / eps ** 2) ** 2
        return u * du

    res = integrate_sphere3(f, tau, np.zeros(4), SPEC)
    exact = 2.0 * math.pi ** 2 * tau ** 3 * \
        (-2.0 * K.c4 ** 2 * eps ** -4 * tau / (1.0 + tau ** 2 / eps ** 2) ** 3)
    assert_allclose(res.value, exact, rtol=1e-10)


def test_axisym_sphere_round_volume():
    # vol(S^4) = 8 pi^2 / 3
    res = integrate_axisym_sphere(lambda th, ps: np.ones_like(th), SPEC).expect()
    assert_allclose(res.value, 8.0 * math.pi ** 2 / 3.0, rtol=1e-11)


def test_symmetry_reduction_oracle():
    # biradial and ball4 agree on random axially-symmetric integrands
    rng = np.random.default_rng(42)
    spec = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-12)
    R = 8.0  # integrands below have decayed to ~1e-22 at r = R
    for _ in range(20):
        a = rng.uniform(0.8, 1.5)
        b = rng.uniform(-1.0, 1.0)
        c = rng.uniform(0.5, 2.0)

        def F(z, p):
            r2 = z * z + p * p
            return np.exp(-a * r2) * (1.0 + b * z) / (c + r2)

        def f4(pts):
            r2 = np.sum(pts * pts, axis=1)
            return np.exp(-a * r2) * (1.0 + b * pts[:, 0]) / (c + r2)

        r1 = integrate_biradial(F, spec, zeta_domain=(-R, R),
                                rho_domain=(0.0, R)).expect()
        r2_ = integrate_ball4(f4, R, spec).expect()
        tol = r1.error_estimate + r2_.error_estimate + 1e-9
        assert abs(r1.value - r2_.value) <= tol


def test_frozen_mesh_smooth_in_parameter():
    # frozen-mesh evaluation varies smoothly with the integrand parameter
    t0 = 2.0

    def F(t):
        def inner(z, p):
            return u_profile((z - t) ** 2 + p * p) ** 3 * \
                u_profile((z + t) ** 2 + p * p)

        return inner

    spec = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14,
                          grading=(((t0, 0.0), 1.0), ((-t0, 0.0), 1.0)))
    mesh = build_frozen_mesh(F(t0), spec)
    h = 1e-3
    vals = [mesh.evaluate(F(t0 + k * h)).value for k in (-2, -1, 0, 1, 2)]
    # second differences of a smooth function stay tiny at this h
    d2 = vals[0] - 2 * vals[2] + vals[4]
    d2h = vals[1] - 2 * vals[2] + vals[3]
    assert abs(d2h) < abs(d2) * 0.5 + 1e-9
