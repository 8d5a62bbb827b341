import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cyl.constants import sobolev_constants
from cyl.interaction import curves
from cyl.minmax import (D2, PathConfig, boundary_flux, build_path,
                        exponents_admissible, fit_expansion_A, glued_data,
                        nu_matching, quotient_double, quotient_glued,
                        quotient_interp)
from cyl.quadrature import QuadratureSpec

K = sobolev_constants()
SPEC = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-13)


def test_d2_chain_rules():
    x = np.array([0.3, 0.7])
    y = np.array([0.2, 0.5])
    X = D2.var_x(x)
    Y = D2.var_y(y)
    f = (X * Y).sin() + (X / Y) ** 2.0
    h = 1e-7
    fv = lambda a, b: np.sin(a * b) + (a / b) ** 2
    assert_allclose(f.v, fv(x, y), rtol=1e-14)
    assert_allclose(f.dx, (fv(x + h, y) - fv(x - h, y)) / (2 * h), rtol=1e-6)
    assert_allclose(f.dy, (fv(x, y + h) - fv(x, y - h)) / (2 * h), rtol=1e-6)
    g = (1.0 - X.cos()) / (X * X)
    assert np.all(np.isfinite(g.v))


def test_flat_double_matches_interaction_curves():
    # cross-module oracle: Q on the complete flat cone = f(t/eps)/sqrt(2)
    for eps, t in ((1.0, 2.0), (0.5, 0.8)):
        q, e = quotient_double(eps, t, None, SPEC, model="flat")
        cur = curves(eps, [t], QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14))
        target = cur.f[0] / math.sqrt(2.0)
        assert abs(q - target) <= 3.0 * (e + cur.f_err[0]) + 1e-10


def test_flat_double_dilation_invariance():
    q1, e1 = quotient_double(1.0, 2.0, None, SPEC, model="flat")
    q2, e2 = quotient_double(0.25, 0.5, None, SPEC, model="flat")
    assert abs(q1 - q2) <= e1 + e2 + 1e-10


def test_single_endpoint_band():
    eps = 1e-4
    q, e = quotient_double(eps, 0.0, 0.025, SPEC)
    assert K.Ys <= q <= K.Ys + 0.5
    assert e < 1e-6


def test_double_leg_expansion_value():
    eps = 1e-4
    q, e = quotient_double(eps, eps ** 0.6, 0.025, SPEC)
    gap = 6.0 * K.S4 - q
    # within 15% of the leading expansion at this finite eps
    assert gap == pytest.approx(K.A * eps ** 0.8, rel=0.15)


def test_glued_data_mass_identity():
    eps = 1e-4
    gd = glued_data(eps, eps ** 0.6, eps ** 0.7)
    # CNC kills the O(1) self part: A_q = 1/(4 sin^2 t) exactly
    assert gd.A_q == pytest.approx(gd.A_q_closed, rel=1e-6)
    assert gd.nu > 0.0
    assert float(gd.rho(gd.s_tau)) == pytest.approx(gd.tau, rel=1e-10)
    assert float(gd.rho(gd.s_2tau)) == pytest.approx(2.0 * gd.tau, rel=1e-10)
    with pytest.raises(ValueError):
        glued_data(1e-4, 0.5, 0.3)  # annulus reaches the partner


def test_nu_matching_formulas():
    # A_q = 0 closed form
    r = nu_matching(1e-3, 1e-1, 0.0)
    expect_nu = (1.0 + 1e4) / (K.c4 * 1e3 * 1e-2)
    assert r["nu"] == pytest.approx(expect_nu, rel=1e-12)
    # leading order of the reciprocal: c4 eps (1 - eps^2/tau^2), truncation
    # error (eps/tau)^4 = 1e-8
    assert r["inverse"] == pytest.approx(K.c4 * 1e-3 * (1.0 - 1e-4), rel=3e-8)
    # deep matching regime tau^2 A_q << 1: series accurate below 1%
    deep = nu_matching(1e-3, 0.0316227766, 25.0)
    assert deep["relative_gap"] < 0.01
    # at tau^2 A_q = 0.25 the first-order series is off by (tau^2 A_q)^2:
    # frozen oracle value of the gap
    shallow = nu_matching(1e-3, 1e-1, 25.0)
    assert shallow["relative_gap"] == pytest.approx(0.0625000094, rel=1e-6)
    with pytest.raises(ValueError):
        nu_matching(0.2, 0.1, 1.0)


def test_boundary_flux():
    out = boundary_flux(1e-2, 1e-1)
    assert out["closed_form"] < 0.0
    assert out["quadrature"] == pytest.approx(out["closed_form"], rel=1e-8)
    # leading behavior -4 pi^2 c4^2 eps^2/tau^2 as eps/tau -> 0
    out2 = boundary_flux(1e-4, 1e-1)
    assert out2["closed_form"] == pytest.approx(out2["leading_order"], rel=1e-4)
    with pytest.raises(ValueError):
        boundary_flux(-1.0, 0.1)


def test_glued_mid_leg_margin_matches_mass():
    # Q = 6 S4 - 4 A A_q eps^2 (1 + o(1)) with A_q = 1/(4 sin^2 t)
    eps = 1e-4
    cfg = PathConfig(epsilon=eps)
    for t in (0.9441, math.pi / 2.0):
        tau = cfg.tau_of_t(t)
        q, e = quotient_glued(eps, t, tau, SPEC, delta=cfg.delta)
        margin = 6.0 * K.S4 - q
        pred = 4.0 * K.A * (0.25 / math.sin(t) ** 2) * eps ** 2
        assert margin == pytest.approx(pred, rel=0.02)
        assert margin > 3.0 * e


def test_glued_pole_swap_symmetry():
    eps = 1e-4
    cfg = PathConfig(epsilon=eps)
    t = 0.7
    tau = cfg.tau_of_t(t)
    q1, e1 = quotient_glued(eps, t, tau, SPEC, delta=cfg.delta)
    q2, e2 = quotient_glued(eps, math.pi - t, tau, SPEC, delta=cfg.delta)
    assert abs(q1 - q2) <= e1 + e2 + 1e-12


def test_interp_endpoints_match_neighbor_legs():
    eps = 1e-4
    spec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12)
    qd, ed = quotient_double(eps, eps ** 0.6, 0.025, spec)
    q0, e0 = quotient_interp(eps, 0.0, spec)
    assert abs(q0 - qd) <= 10.0 * (e0 + ed)
    qg, eg = quotient_glued(eps, eps ** 0.6, eps ** 0.7, spec)
    q1, e1 = quotient_interp(eps, 1.0, spec)
    assert abs(q1 - qg) <= 10.0 * (e1 + eg)


def test_interp_lambda_continuity():
    eps = 1e-4
    spec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12)
    qs = [quotient_interp(eps, lam, spec)[0] for lam in (0.4, 0.5, 0.6)]
    d1 = abs(qs[1] - qs[0])
    d2 = abs(qs[2] - qs[1])
    # Q(psi_lambda) is continuous with O(dlam) modulus
    assert d1 < 0.01 and d2 < 0.01
    for q in qs:
        assert 6.0 * K.S4 - q == pytest.approx(K.A * eps ** 0.8, rel=0.15)


def test_path_config_validation():
    assert exponents_admissible(0.6, 0.7)
    assert not exponents_admissible(0.7, 0.6)
    with pytest.raises(ValueError):
        PathConfig(alpha=0.7, omega=0.6)
    with pytest.raises(ValueError):
        PathConfig(epsilon=0.1)  # eps^alpha >= delta/4
    with pytest.raises(ValueError):
        PathConfig(epsilon=5e-4, delta=0.2)  # glue annulus overlap


def test_build_path_coarse():
    cfg = PathConfig(epsilon=1e-4, mu_points=11, rel_tol=1e-8, abs_tol=1e-12)
    prof = build_path(cfg)
    # five-leg structure
    assert prof.legs[0] == "DOUBLE" and prof.legs[-1] == "DOUBLE"
    assert "GLUED" in prof.legs and "INTERP" in prof.legs
    margins = 6.0 * K.S4 - prof.Q
    assert np.all(margins > 0.0)
    assert np.all(margins > 3.0 * prof.Q_err)
    q0, q1 = prof.endpoint_values()
    assert abs(q0 - K.Ys) < 0.5 and abs(q1 - K.Ys) < 0.5
    # profile is symmetric under the pole swap mu -> 5 - mu
    assert_allclose(prof.Q, prof.Q[::-1], atol=5e-7)
    # transitions: the mu = 1, 2 junction descriptors evaluate consistently
    i1 = int(np.argmin(np.abs(prof.mu - 1.0)))
    i2 = int(np.argmin(np.abs(prof.mu - 2.0)))
    assert prof.Q[i1] == pytest.approx(prof.Q[i2], abs=0.01)


def test_fit_expansion_double():
    fit = fit_expansion_A([1.2e-4, 8.49e-5, 6e-5, 4.24e-5, 3e-5],
                          leg="DOUBLE",
                          spec=QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14))
    assert abs(fit.A_hat - K.A) / K.A < 0.10
    assert abs(fit.exponent_free - 0.8) / 0.8 < 0.10
    with pytest.raises(ValueError):
        fit_expansion_A([1e-4, 5e-5], leg="NOPE")


def test_single_bubble_band_wide_chart():
    # the single singular bubble approaches Y4/sqrt2 from above; at eps = 1e-2
    # a wide chart keeps cutoff effects inside the half-unit band
    q, e = quotient_double(1e-2, 0.0, 0.45, SPEC)
    assert K.Ys < q <= K.Ys + 0.5
