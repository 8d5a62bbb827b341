import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cyl.constants import sobolev_constants
from cyl.interaction import (asymptotic_slope, a_prime_quadrature,
                             c_prime_quadrature, curves, interaction_integral,
                             verify_b_prime_identity, verify_monotonicity)
from cyl.quadrature import QuadratureSpec

K = sobolev_constants()
SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14)


def test_limit_row_t_to_zero():
    cur = curves(1.0, [1e-3], SPEC)
    assert_allclose(cur.a[0], 24.0 * K.S4, rtol=1e-5)
    assert_allclose(cur.b[0], 4.0, rtol=1e-6)
    assert_allclose(cur.f[0], 6.0 * K.S4, rtol=1e-5)


def test_far_field_f_correction():
    t = 1e3
    cur = curves(1.0, [t], SPEC)
    upper = 6.0 * math.sqrt(2.0) * K.S4
    correction = upper - cur.f[0]
    predicted = 6.0 * math.sqrt(2.0) * K.B / t ** 2
    assert abs(correction - predicted) < 0.05 * predicted


def test_bracket_strict_at_unit_separation():
    cur = curves(1.0, [1.0], SPEC)
    lo, hi = cur.bracket_margins()
    assert lo[0] > 3.0 * cur.f_err[0]
    assert hi[0] > 3.0 * cur.f_err[0]


def test_bracket_across_grid_with_margin():
    grid = np.geomspace(0.1, 1e3, 8)
    cur = curves(1.0, grid, SPEC)
    assert cur.converged.all()
    lo, hi = cur.bracket_margins()
    assert np.all(lo > 3.0 * cur.f_err)
    assert np.all(hi > 3.0 * cur.f_err)
    assert np.all(cur.f == cur.a / cur.b)


def test_scale_invariance():
    c1 = curves(1.0, [2.0], SPEC)
    c2 = curves(2.0, [4.0], SPEC)
    for x, y, ex, ey in ((c1.a, c2.a, c1.a_err, c2.a_err),
                         (c1.c, c2.c, c1.c_err, c2.c_err),
                         (c1.f, c2.f, c1.f_err, c2.f_err),
                         (c1.b, c2.b, c1.b_err, c2.b_err)):
        assert abs(x[0] - y[0]) <= ex[0] + ey[0] + 1e-12


def test_u3v_symmetry():
    r1 = interaction_integral("U3V", 1.0, 1.7, SPEC).expect()
    r2 = interaction_integral("VU3", 1.0, 1.7, SPEC).expect()
    assert abs(r1.value - r2.value) <= r1.error_estimate + r2.error_estimate + 1e-13


def test_grad_equals_s4_u3v():
    for t in (0.5, 3.0, 40.0):
        g = interaction_integral("GRAD", 1.0, t, SPEC).expect()
        u = interaction_integral("U3V", 1.0, t, SPEC).expect()
        tol = g.error_estimate + K.S4 * u.error_estimate + 1e-12
        assert abs(g.value - K.S4 * u.value) <= tol


def test_far_field_values():
    g = interaction_integral("GRAD", 1.0, 100.0, SPEC).expect()
    assert abs(g.value - K.B * 1e-4) < 0.02 * K.B * 1e-4
    u = interaction_integral("U3V", 1.0, 100.0, SPEC).expect()
    assert abs(u.value - 0.75e-4) < 0.02 * 0.75e-4


def test_u2v2_log_decay():
    v100 = interaction_integral("U2V2", 1.0, 100.0, SPEC).expect().value
    v200 = interaction_integral("U2V2", 1.0, 200.0, SPEC).expect().value
    ratio = v100 / v200
    # t^-4 log t law: ratio = 16 * log(100)/log(200) ~ 13.90; the log factor
    # shifts the ratio below the bare 16
    assert 16.0 * 0.8 < ratio < 16.0 * 1.25
    predicted = 16.0 * math.log(100.0) / math.log(200.0)
    assert ratio == pytest.approx(predicted, rel=0.05)


def test_b_prime_identity_residual():
    for t in (0.5, 2.0):
        res = verify_b_prime_identity(1.0, t, 1e-3, SPEC)
        assert res < 1e-5


def test_b_prime_identity_second_order():
    r_h = verify_b_prime_identity(1.0, 2.0, 2e-3, SPEC)
    r_h2 = verify_b_prime_identity(1.0, 2.0, 1e-3, SPEC)
    assert r_h / r_h2 == pytest.approx(4.0, rel=0.6)


def test_a_der_bracket_nonnegative():
    rng = np.random.default_rng(2)
    from cyl.interaction import _profile
    for _ in range(40):
        z = rng.uniform(0.0, 5.0)
        p = rng.uniform(0.0, 5.0)
        t = rng.uniform(0.05, 4.0)
        near = _profile((z - 2 * t) ** 2 + p * p) ** 3
        far = _profile((z + 2 * t) ** 2 + p * p) ** 3
        assert near - far >= 0.0


def test_monotonicity_report():
    grid = np.array([0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
    rep = verify_monotonicity(1.0, grid, QuadratureSpec(rel_tol=1e-9, abs_tol=1e-13))
    assert rep.all_negative
    assert rep.cross_consistent
    assert rep.first_violation == -1


def test_derivative_quadratures_negative():
    for t in (0.3, 1.0, 5.0):
        assert a_prime_quadrature(1.0, t, SPEC).expect().value < 0.0
        assert c_prime_quadrature(1.0, t, SPEC).expect().value < 0.0


def test_slope_fits():
    spec = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-15)
    seq = [12.5, 25.0, 50.0, 100.0]
    fit = asymptotic_slope("GRAD", 1.0, seq, spec)
    assert abs(fit.coefficient - K.B) < 0.02 * K.B
    fit31 = asymptotic_slope("U3V", 1.0, seq, spec)
    assert abs(fit31.coefficient - 0.75) < 0.02 * 0.75
    fseq = [125.0, 250.0, 500.0, 1000.0]
    ffit = asymptotic_slope("f-curve", 1.0, fseq, spec)
    target = -6.0 * math.sqrt(2.0) * K.B
    assert abs(ffit.coefficient - target) < 0.05 * abs(target)


def test_slope_preconditions():
    with pytest.raises(ValueError):
        asymptotic_slope("GRAD", 1.0, [5.0, 10.0, 20.0], SPEC)  # smallest < 10
    with pytest.raises(ValueError):
        asymptotic_slope("GRAD", 1.0, [10.0, 15.0, 30.0], SPEC)  # ratio < 2


def test_invalid_inputs():
    with pytest.raises(ValueError):
        interaction_integral("XXX", 1.0, 1.0, SPEC)
    with pytest.raises(ValueError):
        interaction_integral("GRAD", -1.0, 1.0, SPEC)
    with pytest.raises(ValueError):
        verify_b_prime_identity(1.0, 1e-4, 1e-3, SPEC)
    with pytest.raises(ValueError):
        verify_monotonicity(1.0, [1.0, 0.5], SPEC)
