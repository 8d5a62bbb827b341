"""The acceptance suite: every quantitative target of the laboratory as one
pass/fail check with pinned tolerances.

Each check returns a CheckResult; ``run_acceptance`` executes a selection in
order and reports one line per criterion.  The same definitions back the
``cyl accept`` subcommand and the pytest acceptance module, so the gate is a
single source of truth.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from cyl.config import RunConfig
from cyl.constants import energy_level, sobolev_constants
from cyl.quadrature import QuadratureSpec, integrate_radial

__all__ = ["CheckResult", "ALL_CHECKS", "run_acceptance"]


@dataclass
class CheckResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{self.index:2d}] {tag}  {self.name}: {self.detail} " \
               f"({self.seconds:.1f}s)"


def _spec(cfg: RunConfig, scale: float = 1.0) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=cfg.rel_tol * scale,
                          abs_tol=cfg.abs_tol * scale)


# ----------------------------------------------------------------------- 1

def check_constants(cfg: RunConfig) -> CheckResult:
    t0 = time.perf_counter()
    k = sobolev_constants()
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16)
    norm = integrate_radial(
        lambda r: 2.0 * math.pi ** 2 * r ** 3 / (1.0 + r * r) ** 4,
        (0.0, math.inf), spec).expect("bubble normalization")
    c4_num = norm.value ** -0.25
    s4_num = 8.0 / c4_num ** 2
    a_num = 6.0 * math.pi ** 2 * c4_num ** 2
    b_num = math.pi ** 2 * c4_num ** 2
    errs = {
        "c4": abs(c4_num - (6.0 / math.pi ** 2) ** 0.25) / k.c4,
        "S4": abs(s4_num - 8.0 * math.pi / math.sqrt(6.0)) / k.S4,
        "A": abs(a_num - 6.0 * math.pi * math.sqrt(6.0)) / k.A,
        "B": abs(b_num - math.pi * math.sqrt(6.0)) / k.B,
    }
    twelve = all(v < 1e-12 for v in errs.values())
    ratio_exact = abs(k.B / k.S4 - 0.75) < 5e-16
    dt = time.perf_counter() - t0
    ok = twelve and ratio_exact and dt < 1.0
    detail = (f"max rel err {max(errs.values()):.2e}, B/S4-3/4 = "
              f"{k.B / k.S4 - 0.75:.1e}, runtime {dt:.3f}s")
    return CheckResult(1, "closed-form constants from the normalization "
                          "integral", ok, detail, dt)


# ----------------------------------------------------------------------- 2

def check_bracket(cfg: RunConfig) -> CheckResult:
    from cyl.interaction import curves
    t0 = time.perf_counter()
    k = sobolev_constants()
    grid = np.asarray(cfg.t_grid, dtype=float)
    cur = curves(1.0, grid, _spec(cfg))
    lo, hi = cur.bracket_margins()
    ok = bool(cur.converged.all()
              and np.all(lo > 3.0 * cur.f_err)
              and np.all(hi > 3.0 * cur.f_err))
    detail = (f"{len(grid)} points in [{grid.min():g}, {grid.max():g}], "
              f"min lower margin {np.min(lo):.3e}, min upper margin "
              f"{np.min(hi):.3e}, max 3*err {np.max(3 * cur.f_err):.1e}")
    return CheckResult(2, "double-bubble quotient bracket "
                          "(6*S4, 6*sqrt(2)*S4)", ok, detail,
                       time.perf_counter() - t0)


# ----------------------------------------------------------------------- 3

def check_slopes(cfg: RunConfig) -> CheckResult:
    from cyl.interaction import asymptotic_slope
    t0 = time.perf_counter()
    k = sobolev_constants()
    spec = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-15)
    fit_g = asymptotic_slope("GRAD", 1.0, [12.5, 25.0, 50.0, 100.0], spec)
    fit_u = asymptotic_slope("U3V", 1.0, [12.5, 25.0, 50.0, 100.0], spec)
    fit_f = asymptotic_slope("f-curve", 1.0, [125.0, 250.0, 500.0, 1000.0], spec)
    target_f = -6.0 * math.sqrt(2.0) * k.B
    rel_g = abs(fit_g.coefficient - k.B) / k.B
    rel_u = abs(fit_u.coefficient - 0.75) / 0.75
    rel_f = abs(fit_f.coefficient - target_f) / abs(target_f)
    ok = rel_g < 0.02 and rel_u < 0.02 and rel_f < 0.05
    detail = (f"grad {fit_g.coefficient:.5f} vs {k.B:.5f} ({rel_g:.2%}), "
              f"u3v {fit_u.coefficient:.5f} vs 0.75 ({rel_u:.2%}), "
              f"f-curve {fit_f.coefficient:.3f} vs {target_f:.3f} ({rel_f:.2%})")
    return CheckResult(3, "interaction slope coefficients", ok, detail,
                       time.perf_counter() - t0)


# ----------------------------------------------------------------------- 4

def check_b_prime(cfg: RunConfig) -> CheckResult:
    from cyl.interaction import verify_b_prime_identity
    t0 = time.perf_counter()
    spec = _spec(cfg)
    res = {t: verify_b_prime_identity(1.0, t, 1e-3, spec) for t in (0.5, 2.0)}
    half = verify_b_prime_identity(1.0, 2.0, 5e-4, spec)
    shrink = res[2.0] / half if half > 0 else math.inf
    ok = all(v < 1e-5 for v in res.values()) and shrink > 2.5
    detail = (f"residuals t=0.5: {res[0.5]:.2e}, t=2: {res[2.0]:.2e}; "
              f"halving shrink x{shrink:.1f}")
    return CheckResult(4, "b' identity residual", ok, detail,
                       time.perf_counter() - t0)


# ----------------------------------------------------------------------- 5

def check_monotonicity(cfg: RunConfig) -> CheckResult:
    from cyl.interaction import verify_monotonicity
    t0 = time.perf_counter()
    rep = verify_monotonicity(1.0, [0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
                              _spec(cfg, 10.0))
    ok = rep.all_negative and rep.cross_consistent and rep.first_violation < 0
    detail = (f"a' in [{rep.a_prime_quad.min():.3f}, {rep.a_prime_quad.max():.3f}], "
              f"c' in [{rep.c_prime_quad.min():.3f}, {rep.c_prime_quad.max():.3f}], "
              f"first violation index {rep.first_violation}")
    return CheckResult(5, "a' < 0 and c' < 0 by both estimators", ok, detail,
                       time.perf_counter() - t0)


# ----------------------------------------------------------------------- 6

def check_cnc(cfg: RunConfig) -> CheckResult:
    from cyl.geometry.cnc import verify_cnc
    from cyl.geometry.fields import WarpedRadialField, round_profile
    t0 = time.perf_counter()
    fld = WarpedRadialField(round_profile())
    res = verify_cnc(fld, t_cutoff=0.4, h_fd=1e-3)
    res2 = verify_cnc(fld, t_cutoff=0.4, h_fd=5e-4)
    keys = ("R", "Ric", "dR", "sym_dRic")
    below = all(res[kk] < 1e-3 for kk in keys)
    ratio = res["R"] / max(res2["R"], 1e-30)
    decays = ratio > 2.5 or res2["R"] < 1e-10
    ok = below and decays
    detail = (f"|R| {res['R']:.2e}, |Ric| {res['Ric']:.2e}, |dR| {res['dR']:.2e}, "
              f"|sym dRic| {res['sym_dRic']:.2e}; halving ratio {ratio:.1f}")
    return CheckResult(6, "conformal normal coordinates exact on the round "
                          "chart", ok, detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------- 7

def check_gauge(cfg: RunConfig) -> CheckResult:
    from cyl.geometry.links import (LinkFunction, LinkTensorFamily,
                                    sphere_points, verify_first_order_identity)
    t0 = time.perf_counter()
    f = LinkFunction.quadratic(np.diag([0.3, -0.1, -0.1, -0.1]))
    fam = LinkTensorFamily.linear_perturbation(
        lambda z: np.diag([0.1, -0.2, 0.05, 0.0]))
    pts = sphere_points(8, 2)
    r_h = verify_first_order_identity(f, fam, 2e-3, points=pts)
    r_h2 = verify_first_order_identity(f, fam, 1e-3, points=pts)
    gauge = LinkTensorFamily.gauge_killing(f)
    r_post = verify_first_order_identity(f, gauge, 1e-3, points=pts)
    ratio = r_h / max(r_h2, 1e-30)
    ok = 2.0 < ratio < 8.0 and r_post < 1e-3 and f.is_even()
    detail = (f"residual {r_h2:.2e} at h=1e-3, halving ratio {ratio:.1f}, "
              f"post-gauge h'(0) norm {r_post:.2e}")
    return CheckResult(7, "first-order gauge identity and orbifold gauge",
                       ok, detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------- 8

def check_green_masses(cfg: RunConfig) -> CheckResult:
    from cyl.geometry.fields import FlatField
    from cyl.green import (GreenProblem, extract_mass, mass_divergence_sweep,
                           solve_dirichlet_green)
    t0 = time.perf_counter()
    ev = solve_dirichlet_green(GreenProblem(FlatField(), np.zeros(4),
                                            cfg.green_delta))
    exp = extract_mass(ev, np.zeros(4), eps0=0.05 * cfg.green_delta)
    centered_err = abs(exp.A_q + 1.0 / cfg.green_delta ** 2)
    tmax = 0.05 * cfg.green_delta
    grid = [t for t in cfg.green_t_grid if t <= tmax + 1e-12] or [tmax, tmax / 2]
    flat_rows = mass_divergence_sweep("flat-cone", grid, cfg.green_delta)
    foot_rows = mass_divergence_sweep("football", grid, min(cfg.green_delta, 0.8))
    pf = flat_rows[-1]["product"]
    pb = foot_rows[-1]["product"]
    ok = centered_err < 1e-6 and 0.95 <= pf <= 1.05 and 0.95 <= pb <= 1.05
    detail = (f"centered mass err {centered_err:.1e}; A_q*4t^2 at t={grid[-1]:g}: "
              f"flat cone {pf:.4f}, football {pb:.4f}")
    return CheckResult(8, "Green masses: centered ball and 1/(4t^2) "
                          "divergence", ok, detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------- 9

def check_parametrix(cfg: RunConfig) -> CheckResult:
    from cyl.green import RadialChart, parametrix_sweep
    t0 = time.perf_counter()
    sweep = parametrix_sweep(RadialChart.round(), [0.1, 0.2, 0.4])
    ok = -2.3 <= sweep["exponent"] <= -1.7
    detail = (f"fitted exponent {sweep['exponent']:.3f}, sups "
              + ", ".join(f"{s:.3e}" for s in sweep["sup"]))
    return CheckResult(9, "parametrix residual law sup ~ C t^-2", ok, detail,
                       time.perf_counter() - t0)


# ----------------------------------------------------------------------- 10

def check_path(cfg: RunConfig) -> CheckResult:
    from cyl.minmax import PathConfig, build_path
    t0 = time.perf_counter()
    k = sobolev_constants()
    pcfg = PathConfig(epsilon=cfg.epsilon, alpha=cfg.alpha, omega=cfg.omega,
                      delta=cfg.delta, mu_points=cfg.mu_points,
                      rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    prof = build_path(pcfg)
    margins = 6.0 * k.S4 - prof.Q
    min_margin = float(np.min(margins))
    worst = float(np.min(margins - 3.0 * prof.Q_err))
    q0, q1 = prof.endpoint_values()
    endpoints_ok = abs(q0 - k.Ys) < 0.5 and abs(q1 - k.Ys) < 0.5
    ok = bool(min_margin > 0.0 and worst > 0.0 and endpoints_ok)
    detail = (f"max Q {prof.max_Q:.9f} < 6*S4 {6 * k.S4:.9f}, min margin "
              f"{min_margin:.2e} (>= 3*err: {worst:.2e} slack), endpoints "
              f"{q0:.4f}/{q1:.4f} vs Y4/sqrt2 {k.Ys:.4f}")
    return CheckResult(10, "competitor path stays strictly below 6*S4",
                       ok, detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------- 11

def check_expansion_fit(cfg: RunConfig) -> CheckResult:
    from cyl.minmax import fit_expansion_A
    t0 = time.perf_counter()
    k = sobolev_constants()
    fd = fit_expansion_A(cfg.epsilon_list_double, leg="DOUBLE",
                         alpha=cfg.alpha, omega=cfg.omega, delta=cfg.delta,
                         spec=QuadratureSpec(rel_tol=1e-10, abs_tol=1e-14))
    fi = fit_expansion_A(cfg.epsilon_list, leg="INTERP", lam=0.5,
                         alpha=cfg.alpha, omega=cfg.omega, delta=cfg.delta,
                         spec=_spec(cfg))
    target_exp = 2.0 * (1.0 - cfg.alpha)
    rel_d = abs(fd.A_hat - k.A) / k.A
    rel_i = abs(fi.A_hat - k.A) / k.A
    rel_e = max(abs(fd.exponent_free - target_exp),
                abs(fi.exponent_free - target_exp)) / target_exp
    ok = rel_d < 0.10 and rel_i < 0.10 and rel_e < 0.10
    detail = (f"A_hat double {fd.A_hat:.3f} ({rel_d:.1%}), interp "
              f"{fi.A_hat:.3f} ({rel_i:.1%}) vs A {k.A:.3f}; free exponents "
              f"{fd.exponent_free:.3f}/{fi.exponent_free:.3f} vs {target_exp}")
    return CheckResult(11, "expansion constant A on the DOUBLE and INTERP "
                           "legs", ok, detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------- 12

def check_energy_levels(cfg: RunConfig) -> CheckResult:
    t0 = time.perf_counter()
    k = sobolev_constants()
    e10 = energy_level(1, 0)
    e01 = energy_level(0, 1)
    e20 = energy_level(2, 0)
    ok = (e10 < e01 and abs(e20 - e01) < 1e-12
          and abs(e10 - k.Ys) < 1e-12 and abs(e01 - k.Y4) < 1e-12)
    detail = (f"E(1,0) {e10:.6f} < E(0,1) {e01:.6f}; "
              f"E(2,0) - E(0,1) = {e20 - e01:.1e}")
    return CheckResult(12, "energy quantization: two singular bubbles cost "
                           "one regular bubble", ok, detail,
                       time.perf_counter() - t0)


ALL_CHECKS = [
    check_constants,
    check_bracket,
    check_slopes,
    check_b_prime,
    check_monotonicity,
    check_cnc,
    check_gauge,
    check_green_masses,
    check_parametrix,
    check_path,
    check_expansion_fit,
    check_energy_levels,
]


def run_acceptance(cfg: RunConfig, indices=None, printer=print) -> list:
    """Run the selected criteria in order, print one line each, and return
    the CheckResult list."""
    results = []
    for i, fn in enumerate(ALL_CHECKS, start=1):
        if indices is not None and i not in indices:
            continue
        res = fn(cfg)
        results.append(res)
        printer(res.line())
    return results
