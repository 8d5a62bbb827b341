import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cyl.constants import sobolev_constants
from cyl.geometry.fields import (ConformalField, FlatField, WarpedRadialField,
                                 round_profile)
from cyl.green import (KAPPA, GreenProblem, RadialChart, assemble_equivariant,
                       chebyshev_u, cnc_radial_factor, conformal_wrap,
                       extract_mass, flat_ball_green, football_global_green,
                       mass_divergence_sweep, parametrix_residual,
                       parametrix_sweep, round_ball_green, solve_dirichlet_green,
                       solve_harmonic_extension, sphere_kernel, zonal_project)
from cyl.quadrature import QuadratureSpec, integrate_axisym_sphere

ROUND = WarpedRadialField(round_profile())


def _sample_points(rng, n, rmax, exclude=None, min_dist=0.05):
    pts = rng.normal(size=(n, 4))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= rng.uniform(0.05, rmax, size=(n, 1))
    if exclude is not None:
        keep = np.linalg.norm(pts - exclude, axis=1) > min_dist
        pts = pts[keep]
    return pts


def test_chebyshev_u_eigen_and_endpoint():
    c = np.linspace(-1, 1, 9)
    U = chebyshev_u(6, c)
    assert_allclose(U[0], np.ones_like(c))
    assert_allclose(U[1], 2 * c)
    for l in range(7):
        assert U[l][-1] == pytest.approx(l + 1.0, rel=1e-12)
    # orthogonality through the projector
    coeffs = zonal_project(lambda g: chebyshev_u(4, np.cos(g))[3], 6)
    expect = np.zeros(7)
    expect[3] = 1.0
    assert_allclose(coeffs, expect, atol=1e-12)


def test_flat_solver_matches_images():
    delta = 1.0
    pole = np.array([0.15, 0.1, 0.0, 0.0])
    ev = solve_dirichlet_green(GreenProblem(FlatField(), pole, delta))
    oracle = flat_ball_green(delta, pole)
    rng = np.random.default_rng(0)
    pts = _sample_points(rng, 40, 0.95, exclude=pole)
    assert np.max(np.abs(ev.value(pts) - oracle.value(pts))) < 1e-7
    assert ev.boundary_trace_defect() < 1e-11


def test_flat_centered_mass():
    ev = solve_dirichlet_green(GreenProblem(FlatField(), np.zeros(4), 1.0))
    exp = extract_mass(ev, np.zeros(4), eps0=0.05)
    assert abs(exp.A_q + 1.0) < 1e-6
    # closed-form scaling: A = -1/delta^2
    for delta in (0.5, 2.0):
        oracle = flat_ball_green(delta, np.zeros(4))
        exp = extract_mass(oracle, np.zeros(4), eps0=0.04 * delta)
        assert abs(exp.A_q + 1.0 / delta ** 2) < 1e-8 / delta ** 2


def test_round_solver_matches_stereographic_oracle():
    pole = np.array([0.1, 0.0, 0.0, 0.0])
    delta = 0.5
    ev = solve_dirichlet_green(GreenProblem(ROUND, pole, delta))
    oracle = round_ball_green(delta, pole)
    rng = np.random.default_rng(3)
    pts = _sample_points(rng, 40, 0.45, exclude=pole)
    rel = np.abs((ev.value(pts) - oracle.value(pts)) / oracle.value(pts))
    assert np.max(rel) < 1e-6


def test_sphere_kernel_is_l_harmonic():
    d = np.linspace(0.3, 2.8, 12)
    h = 1e-4
    u = sphere_kernel(d)
    upp = (sphere_kernel(d + h) - 2 * u + sphere_kernel(d - h)) / h ** 2
    up = (sphere_kernel(d + h) - sphere_kernel(d - h)) / (2 * h)
    L = -6.0 * (upp + 3.0 * np.cos(d) / np.sin(d) * up) + 12.0 * u
    scale = np.abs(6.0 * upp) + np.abs(12.0 * u)
    assert np.max(np.abs(L) / scale) < 1e-5


def test_green_relations_on_football():
    # global kernel = Dirichlet pair + harmonic extension of the global trace
    delta = 0.5
    t = 0.1
    pole = np.array([t, 0.0, 0.0, 0.0])
    glob = football_global_green(pole)
    gp = solve_dirichlet_green(GreenProblem(ROUND, pole, delta))
    gm = solve_dirichlet_green(GreenProblem(ROUND, -pole, delta))

    def datum(gamma):
        pts = np.stack([delta * np.cos(gamma), delta * np.sin(gamma),
                        np.zeros_like(gamma), np.zeros_like(gamma)], axis=1)
        return glob.value(pts)

    H = solve_harmonic_extension(ROUND, delta, datum)
    assembled = assemble_equivariant(gp, gm, H)
    rng = np.random.default_rng(5)
    pts = _sample_points(rng, 40, 0.45, exclude=pole)
    pts = pts[np.linalg.norm(pts + pole, axis=1) > 0.05]
    rel = np.abs((assembled.value(pts) - glob.value(pts)) / glob.value(pts))
    assert np.max(rel) < 1e-5
    # assembled function is equivariant
    assert assembled.symmetry_defect(pts) < 1e-7
    # harmonic extension of an even datum is even
    hv = H.value(pts)
    hm = H.value(-pts)
    assert np.max(np.abs(hv - hm)) < 1e-9


def test_solver_equivariance():
    pole = np.array([0.09, 0.0, 0.0, 0.0])
    gp = solve_dirichlet_green(GreenProblem(ROUND, pole, 0.5))
    gm = solve_dirichlet_green(GreenProblem(ROUND, -pole, 0.5))
    rng = np.random.default_rng(8)
    pts = _sample_points(rng, 25, 0.45, exclude=pole)
    assert np.max(np.abs(gp.value(pts) - gm.value(-pts))) < 1e-8


def test_positivity_inside_ball():
    pole = np.array([0.1, 0.05, 0.0, 0.0])
    ev = solve_dirichlet_green(GreenProblem(FlatField(), pole, 1.0))
    rng = np.random.default_rng(11)
    pts = _sample_points(rng, 200, 0.97, exclude=pole, min_dist=0.02)
    assert np.all(ev.value(pts) > 0.0)


def test_weak_form_delta_normalization():
    # int G L(psi) dmu = 24 pi^2 psi(pole) for random smooth zonal psi
    delta = 1.0
    pole = np.array([0.12, 0.0, 0.0, 0.0])
    ev = solve_dirichlet_green(GreenProblem(FlatField(), pole, delta))
    rng = np.random.default_rng(17)
    spec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-10,
                          grading=(((0.12, 0.0), 0.05),))
    for _ in range(30):
        amps = rng.normal(size=3)
        ls = rng.integers(0, 4, size=3)
        r0 = rng.uniform(0.5, 0.8)

        def bump(r):
            # C^2 radial profile supported in [0, r0]
            x = np.clip(r / r0, 0.0, 1.0)
            return (1.0 - x ** 2) ** 3

        def bump2(r):
            x = np.clip(r / r0, 0.0, 1.0)
            d1 = -6.0 * x * (1.0 - x ** 2) ** 2 / r0
            return d1

        def bump3(r):
            x = np.clip(r / r0, 0.0, 1.0)
            return (-6.0 * (1.0 - x ** 2) ** 2 + 24.0 * x ** 2 * (1.0 - x ** 2)) / r0 ** 2

        def psi(r, gamma):
            U = chebyshev_u(4, np.cos(gamma))
            out = 0.0
            for a, l in zip(amps, ls):
                out = out + a * bump(r) * U[l]
            return out

        def Lpsi(r, gamma):
            U = chebyshev_u(4, np.cos(gamma))
            out = 0.0
            for a, l in zip(amps, ls):
                lap = bump3(r) + 3.0 / r * bump2(r) - l * (l + 2) * bump(r) / r ** 2
                out = out + a * (-6.0) * lap * U[l]
            return out

        def integrand(r, gamma):
            pts = np.stack([r * np.cos(gamma), r * np.sin(gamma),
                            np.zeros_like(r), np.zeros_like(r)], axis=-1)
            return ev.value(pts.reshape(-1, 4)).reshape(r.shape) * Lpsi(r, gamma)

        res = integrate_axisym_sphere(integrand, spec, theta_domain=(1e-9, delta),
                                      radial_weight=lambda r: r ** 3)
        target = KAPPA * psi(np.linalg.norm(pole), 0.0)
        assert abs(res.value - target) < 5e-4 * (1.0 + abs(target))


def test_mode_truncation_convergence():
    pole = np.array([0.1, 0.0, 0.0, 0.0])
    masses = []
    for lmax in (16, 32):
        ev = solve_dirichlet_green(GreenProblem(ROUND, pole, 0.5, lmax=lmax))
        f_full, fr = cnc_radial_factor(ev.chart, pole, 0.5)
        exp = extract_mass(conformal_wrap(ev, f_full), pole,
                           chart=ev.chart, conformal_fr=fr)
        masses.append(exp)
    assert abs(masses[0].A_q - masses[1].A_q) <= \
        masses[0].error + masses[1].error + 1e-6


def test_glued_parametrix_agrees_with_fundamental():
    pole = np.array([0.12, 0.0, 0.0, 0.0])
    e1 = solve_dirichlet_green(GreenProblem(ROUND, pole, 0.5,
                                            parametrix="fundamental"))
    e2 = solve_dirichlet_green(GreenProblem(ROUND, pole, 0.5,
                                            parametrix="glued"))
    rng = np.random.default_rng(2)
    pts = _sample_points(rng, 40, 0.45, exclude=pole, min_dist=0.03)
    rel = np.abs((e1.value(pts) - e2.value(pts)) / e1.value(pts))
    assert np.max(rel) < 1e-4


def test_flat_cone_mass_sweep():
    rows = mass_divergence_sweep("flat-cone", [0.05, 0.03, 0.02], 1.0)
    prods = [r["product"] for r in rows]
    # analytic oracle of the assembled Dirichlet mass
    for r, t in zip(rows, (0.05, 0.03, 0.02)):
        aq = 1.0 / (4 * t * t) - 1.0 / (1 - t * t) ** 2 - 1.0 / (1 + t * t) ** 2
        assert r["A_q"] == pytest.approx(aq, rel=1e-4)
    assert 0.95 <= prods[-1] <= 1.05
    # approaches 1 monotonically in the recorded run
    assert prods[0] < prods[1] < prods[2] < 1.0


def test_football_mass_sweep():
    rows = mass_divergence_sweep("football", [0.04, 0.02], 0.8)
    assert 0.95 <= rows[-1]["product"] <= 1.05
    assert abs(rows[-1]["product"] - 1.0) < abs(rows[0]["product"] - 1.0)


def test_mass_boundary_effect_bounded():
    # delta enters only through the O(1) boundary correction
    out = {}
    for delta in (0.8, 0.5):
        rows = mass_divergence_sweep("flat-cone", [0.02, 0.01], delta)
        out[delta] = [r["A_q"] for r in rows]
    diffs = [abs(a - b) for a, b in zip(out[0.8], out[0.5])]
    assert diffs[1] < 10.0  # stays O(1) while A_q itself grows like 1/(4t^2)
    assert abs(diffs[1] - diffs[0]) < 1.0


def test_parametrix_residual_and_law():
    flat = parametrix_residual(RadialChart.flat(), 0.2)
    assert flat["sup"] == 0.0
    nocnc = parametrix_residual(RadialChart.round(), 0.2, with_cnc=False)
    # without the conformal change the curvature term alone is ~ 12/r^2,
    # unbounded in L^4 near the pole ...
    assert nocnc["sup_curvature_term_no_cnc"] > 1e6
    # ... though for the Einstein round metric the two terms cancel pointwise
    assert nocnc["sup"] < 5.0
    sweep = parametrix_sweep(RadialChart.round(), [0.1, 0.2, 0.4])
    assert -2.3 <= sweep["exponent"] <= -1.7


def test_problem_validation():
    with pytest.raises(ValueError):
        GreenProblem(FlatField(), np.array([0.5, 0, 0, 0]), 1.0)  # pole too far
    with pytest.raises(ValueError):
        GreenProblem(ROUND, np.zeros(4), 0.5)  # pole at the cone tip
    bad = ConformalField(FlatField(), lambda x: 0.3 * x[0],
                         lambda x: np.array([0.3, 0, 0, 0]),
                         lambda x: np.zeros((4, 4)))
    with pytest.raises(ValueError):
        GreenProblem(bad, np.array([0.1, 0, 0, 0]), 1.0)


def test_beta_samples_and_matching():
    from cyl.green import beta_samples
    pole = np.array([0.1, 0.0, 0.0, 0.0])
    ev = solve_dirichlet_green(GreenProblem(FlatField(), pole, 1.0))
    exp = extract_mass(ev, pole)
    # beta is small near the pole and vanishes at it
    samples = beta_samples(ev, pole, exp, radii=[0.02, 0.01, 0.005])
    mags = {}
    for p, b in samples:
        r = float(np.linalg.norm(p - pole))
        mags.setdefault(round(r, 6), []).append(abs(b))
    radii = sorted(mags)
    sups = [max(mags[r]) for r in radii]
    assert sups[0] < 0.1  # C^1 remainder at beta(0) = 0 scale
    assert sups[0] <= sups[-1] * 4.0 + 1e-9
    # matching constant attaches through the continuity condition
    m = exp.with_matching(1e-3, 5e-3)
    k = sobolev_constants()
    lhs = (k.c4 / 1e-3) / (1.0 + (5e-3) ** 2 / (1e-3) ** 2)
    rhs = (1.0 / (5e-3) ** 2 + exp.A_q) / m.nu
    assert lhs == pytest.approx(rhs, rel=1e-12)
