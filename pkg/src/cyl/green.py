"""Dirichlet Green functions of the conformal Laplacian on lifted balls,
equivariant assembly on the Z2-quotient, and mass extraction.

Normalization: L g = -6 Delta_g + R_g and  L G_x = 24 pi^2 delta_x  (the
4-dimensional fundamental constant: -Delta |y|^-2 = 4 pi^2 delta in R^4).

The suite's lifted metrics (flat cone, football lift) are radially symmetric
about the chart origin, so the regular remainder of a parametrix split
decouples into zonal S^3 modes: with G = zeta + phi and phi expanded in
Chebyshev-U zonal harmonics U_l(cos gamma) about the pole axis, each mode
solves the two-point BVP

    -6 [u'' + 3 (w'/w) u' - l(l+2) u / w^2] + R(r) u = rho_l(r)

on (0, delta] with u ~ r^l at the origin and a Dirichlet value at delta.
The singular carrier zeta is the exact fundamental kernel of the chart
(|y - x|^-2 flat, 1/(4 sin^2(d/2)) round), so rho = 0 and the solve is purely
boundary-driven; the classical glued parametrix is also available and feeds
the same mode solver through a nonzero rho.

Conformal normal coordinates enter as an exact transformation: for
gbar = e^f gtilde with f(pole) = 0, the Green functions obey
Gbar_x = e^{-f/2} Gtilde_x, which preserves the radial decoupling.

Closed forms (images for the flat ball, stereographic conformal images for
the round ball, the global football kernel) are kept as independent oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from cyl.constants import sobolev_constants
from cyl.geometry.cnc import cutoff_profile
from cyl.geometry.fields import ChartMetricField, FlatField

KAPPA = 24.0 * math.pi ** 2  # 4 a pi^2 with a = 6

__all__ = [
    "KAPPA",
    "RadialChart",
    "GreenProblem",
    "GreenEvaluator",
    "GreenExpansion",
    "beta_samples",
    "solve_dirichlet_green",
    "solve_harmonic_extension",
    "assemble_equivariant",
    "extract_mass",
    "mass_divergence_sweep",
    "parametrix_residual",
    "parametrix_sweep",
    "flat_ball_green",
    "round_ball_green",
    "football_global_green",
    "sphere_kernel",
    "chebyshev_u",
    "cnc_radial_factor",
]


# ----------------------------------------------------------------------------
# radial charts
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialChart:
    """Warped chart dr^2 + w(r)^2 h0 about the origin with scalar curvature
    R(r); the geometry the mode solver understands."""

    kind: str            # 'flat' or 'round' or 'sampled'
    w: object            # r -> warp
    wp: object           # r -> w'
    scal: object         # r -> scalar curvature
    dist: object         # (r1, r2, cos gamma) -> distance between chart points

    @staticmethod
    def flat() -> "RadialChart":
        def dist(r1, r2, c):
            return np.sqrt(np.maximum(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * c, 0.0))

        return RadialChart("flat", lambda r: r, lambda r: np.ones_like(r),
                           lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                           dist)

    @staticmethod
    def round() -> "RadialChart":
        def dist(r1, r2, c):
            arg = np.cos(r1) * np.cos(r2) + np.sin(r1) * np.sin(r2) * c
            return np.arccos(np.clip(arg, -1.0, 1.0))

        return RadialChart("round", np.sin, np.cos,
                           lambda r: np.full_like(np.asarray(r, dtype=float), 12.0),
                           dist)

    def mode_coupling_defect(self, field: ChartMetricField, delta: float,
                             n: int = 8, seed: int = 0) -> float:
        """Sup defect between the field and this chart's warped form; the
        guard against silently feeding a non-radial field to the solver."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            x = rng.normal(size=4)
            x *= rng.uniform(0.05, 0.95) * delta / np.linalg.norm(x)
            r = np.linalg.norm(x)
            c = float(self.w(np.array([r]))[0] if np.ndim(self.w(np.array([r]))) else self.w(r)) ** 2 / r ** 2
            P = np.outer(x, x) / r ** 2
            model = P + c * (np.eye(4) - P)
            worst = max(worst, float(np.max(np.abs(field.value(x) - model))))
        return worst


def chart_for_field(field: ChartMetricField) -> RadialChart:
    from cyl.geometry.fields import WarpedRadialField
    if isinstance(field, FlatField):
        return RadialChart.flat()
    if isinstance(field, WarpedRadialField):
        # identify the round chart by its angular coefficient
        u = np.array([0.09])
        if abs(float(field.profile.c(u)[0]) - math.sin(0.3) ** 2 / 0.09) < 1e-12:
            return RadialChart.round()
        if abs(float(field.profile.c(u)[0]) - 1.0) < 1e-15:
            return RadialChart.flat()
    raise ValueError("no radial chart available for this field; the mode "
                     "solver requires a radially symmetric suite metric")


# ----------------------------------------------------------------------------
# zonal harmonics
# ----------------------------------------------------------------------------

def chebyshev_u(lmax: int, c) -> np.ndarray:
    """U_l(c) for l = 0..lmax, shape (lmax+1, len(c)); the S^3 zonal
    harmonics with eigenvalue l(l+2) and U_l(1) = l + 1."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    out = np.empty((lmax + 1, len(c)))
    out[0] = 1.0
    if lmax >= 1:
        out[1] = 2.0 * c
    for l in range(2, lmax + 1):
        out[l] = 2.0 * c * out[l - 1] - out[l - 2]
    return out


def zonal_project(fn, lmax: int, n_nodes: int = None) -> np.ndarray:
    """Coefficients f_l = (2/pi) int_0^pi fn(gamma) U_l(cos gamma) sin^2 dgamma."""
    if n_nodes is None:
        n_nodes = 2 * lmax + 32
    x, wq = np.polynomial.legendre.leggauss(n_nodes)
    gamma = 0.5 * math.pi * (x + 1.0)
    wq = 0.5 * math.pi * wq
    vals = np.asarray(fn(gamma), dtype=float)
    U = chebyshev_u(lmax, np.cos(gamma))
    s2 = np.sin(gamma) ** 2
    return (2.0 / math.pi) * (U * (vals * s2)[None, :]) @ wq


# ----------------------------------------------------------------------------
# closed-form kernels (oracles)
# ----------------------------------------------------------------------------

def sphere_kernel(d):
    """Global Green kernel of L on the round S^4: 1/(4 sin^2(d/2))."""
    return 0.25 / np.sin(0.5 * np.asarray(d, dtype=float)) ** 2


class flat_ball_green:
    """Dirichlet Green function on a flat 4-ball by the image method:
    G_x(y) = |y-x|^-2 - delta^2 / (|x|^2 |y - x*|^2), x* = delta^2 x/|x|^2."""

    def __init__(self, delta: float, pole):
        self.delta = delta
        self.pole = np.asarray(pole, dtype=float)

    def value(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d2 = np.sum((pts - self.pole) ** 2, axis=1)
        t2 = float(self.pole @ self.pole)
        if t2 == 0.0:
            return 1.0 / d2 - 1.0 / self.delta ** 2
        star = self.delta ** 2 * self.pole / t2
        dstar2 = np.sum((pts - star) ** 2, axis=1)
        return 1.0 / d2 - self.delta ** 2 / (t2 * dstar2)

    def mass(self) -> float:
        t2 = float(self.pole @ self.pole)
        return -self.delta ** 2 / (self.delta ** 2 - t2) ** 2


class round_ball_green:
    """Dirichlet Green function on a geodesic ball of the round S^4 through
    stereographic conformal images:

        G_x(y) = wc(xi_x)^-1 wc(xi_y)^-1 [ |xi_y - xi_x|^-2
                  - R_s^2 / (|xi_x|^2 |xi_y - xi_x*|^2) ],
        wc(xi) = 2/(1+|xi|^2),  R_s = tan(delta/2),

    with xi = tan(|z|/2) z/|z| the stereographic image of the normal-
    coordinate chart point z.
    """

    def __init__(self, delta: float, pole):
        self.delta = delta
        self.pole = np.asarray(pole, dtype=float)
        self.Rs = math.tan(0.5 * delta)
        self.xi_pole = self._xi(self.pole[None, :])[0]

    @staticmethod
    def _xi(pts):
        r = np.linalg.norm(pts, axis=1)
        out = np.zeros_like(pts)
        safe = r > 0.0
        out[safe] = (np.tan(0.5 * r[safe]) / r[safe])[:, None] * pts[safe]
        return out

    @staticmethod
    def _wc(xi):
        return 2.0 / (1.0 + np.sum(xi * xi, axis=1))

    def value(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xi = self._xi(pts)
        wy = self._wc(xi)
        wx = float(self._wc(self.xi_pole[None, :])[0])
        d2 = np.sum((xi - self.xi_pole) ** 2, axis=1)
        t2 = float(self.xi_pole @ self.xi_pole)
        if t2 == 0.0:
            flat = 1.0 / d2 - 1.0 / self.Rs ** 2
        else:
            star = self.Rs ** 2 * self.xi_pole / t2
            flat = 1.0 / d2 - self.Rs ** 2 / (t2 * np.sum((xi - star) ** 2, axis=1))
        return flat / (wx * wy)


class football_global_green:
    """Equivariant lift of the global football Green function: the sum of the
    round-sphere kernels at the two chart preimages of the pole."""

    def __init__(self, pole):
        self.pole = np.asarray(pole, dtype=float)
        self.chart = RadialChart.round()

    def value(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        from cyl.geometry.football import chart_to_sphere
        P = chart_to_sphere(pts)
        a = chart_to_sphere(self.pole)
        b = chart_to_sphere(-self.pole)
        da = np.arccos(np.clip(P @ a, -1.0, 1.0))
        db = np.arccos(np.clip(P @ b, -1.0, 1.0))
        return sphere_kernel(da) + sphere_kernel(db)


# ----------------------------------------------------------------------------
# mode solver
# ----------------------------------------------------------------------------

def _solve_mode(chart: RadialChart, l: int, delta: float, bval: float,
                rho_spline, mesh: np.ndarray) -> np.ndarray:
    """Solve the mode BVP on the given mesh; returns u at the mesh nodes."""
    n = len(mesh)
    r = mesh
    w = np.asarray(chart.w(r), dtype=float)
    wp = np.asarray(chart.wp(r), dtype=float)
    R = np.asarray(chart.scal(r), dtype=float)
    lam = float(l * (l + 2))
    # interior rows: -6[u'' + 3(w'/w)u' - lam u/w^2] + R u = rho
    ab = np.zeros((3, n))
    rhs = np.zeros(n)
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    c_m = 2.0 / (hm * (hm + hp))
    c_0 = -2.0 / (hm * hp)
    c_p = 2.0 / (hp * (hm + hp))
    d_m = -hp / (hm * (hm + hp))
    d_0 = (hp - hm) / (hm * hp)
    d_p = hm / (hp * (hm + hp))
    p1 = 3.0 * wp[1:-1] / w[1:-1]
    diag = -6.0 * (c_0 + p1 * d_0) + 6.0 * lam / w[1:-1] ** 2 + R[1:-1]
    lower = -6.0 * (c_m + p1 * d_m)
    upper = -6.0 * (c_p + p1 * d_p)
    ab[1, 1:-1] = diag
    ab[0, 2:] = upper
    ab[2, 0:-2] = lower
    rhs[1:-1] = rho_spline(r[1:-1]) if rho_spline is not None else 0.0
    # origin regularity: u(r0) = (r0/r1)^l u(r1)
    ab[1, 0] = 1.0
    ab[0, 1] = -(r[0] / r[1]) ** l
    rhs[0] = 0.0
    # Dirichlet at delta
    ab[1, -1] = 1.0
    rhs[-1] = bval
    return solve_banded((1, 1), ab, rhs)


def _default_mesh(delta: float, t: float, n_base: int = 420) -> np.ndarray:
    pieces = [
        np.geomspace(delta * 1e-8, delta, n_base // 2),
        np.linspace(0.0, delta, n_base + 1)[1:],
    ]
    if 0.0 < t < delta:
        local = t * np.geomspace(1e-3, 0.6, n_base // 4)
        pieces.append(np.clip(t + local, 0.0, delta))
        pieces.append(np.clip(t - local, delta * 1e-8, delta))
        pieces.append(np.array([t]))
    mesh = np.unique(np.concatenate(pieces))
    return mesh[mesh > 0.0]


@dataclass
class GreenProblem:
    """A Dirichlet problem L G = 24 pi^2 delta_x on the lifted ball."""

    field: ChartMetricField
    pole: np.ndarray
    delta: float
    lmax: int = 28
    mesh_size: int = 420
    parametrix: str = "fundamental"  # or 'glued'
    coupling_tol: float = 1e-9

    def __post_init__(self):
        self.pole = np.asarray(self.pole, dtype=float)
        t = float(np.linalg.norm(self.pole))
        self.chart = chart_for_field(self.field)
        # the pole must avoid the cone tip; a centered pole is only meaningful
        # for the flat ball, where there is no tip
        t_lo = 0.0 if self.chart.kind == "flat" else 1e-300
        if not t_lo <= t < self.delta / 4.0 + 1e-12:
            raise ValueError("pole must satisfy 0 < |x| < delta/4")
        if t == 0.0 and self.chart.kind != "flat":
            raise ValueError("pole must be distinct from the cone tip")
        defect = self.chart.mode_coupling_defect(self.field, self.delta)
        if defect > self.coupling_tol:
            raise ValueError(
                f"field is not radially symmetric to tolerance: defect={defect:g}")


class GreenEvaluator:
    """Callable Green function zeta + mode sum, immutable after assembly."""

    def __init__(self, chart: RadialChart, pole, delta: float, zeta,
                 mode_splines, lmax: int, error_estimate: float,
                 conformal_half=None):
        self.chart = chart
        self.pole = np.asarray(pole, dtype=float)
        self.t = float(np.linalg.norm(self.pole))
        self.axis = self.pole / self.t if self.t > 0.0 \
            else np.array([1.0, 0.0, 0.0, 0.0])
        self.delta = delta
        self.zeta = zeta
        self.mode_splines = mode_splines
        self.lmax = lmax
        self.error_estimate = error_estimate
        self.conformal_half = conformal_half  # y -> f(y)/2 for gbar = e^f g

    def _polar(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        c = np.zeros_like(r)
        safe = r > 0.0
        c[safe] = (pts[safe] @ self.axis) / r[safe]
        return pts, r, np.clip(c, -1.0, 1.0)

    def boundary_trace_defect(self, n: int = 64) -> float:
        gam = np.linspace(0.0, math.pi, n)
        pts = np.stack([self.delta * np.cos(gam), self.delta * np.sin(gam),
                        np.zeros(n), np.zeros(n)], axis=1)
        return float(np.max(np.abs(self.value(pts))))

    def regular_part(self, pts) -> np.ndarray:
        pts, r, c = self._polar(pts)
        U = chebyshev_u(self.lmax, c)
        out = np.zeros(len(pts))
        for l, spl in enumerate(self.mode_splines):
            out += spl(r) * U[l]
        return out

    def value(self, pts) -> np.ndarray:
        pts, r, c = self._polar(pts)
        d = self.chart.dist(r, self.t, c)
        vals = self.zeta(d) + self.regular_part(pts)
        if self.conformal_half is not None:
            vals = vals * np.exp(-self.conformal_half(pts))
        return vals



def _fundamental_zeta(chart: RadialChart):
    if chart.kind == "flat":
        return lambda d: 1.0 / np.asarray(d, dtype=float) ** 2
    if chart.kind == "round":
        return sphere_kernel
    raise ValueError("no fundamental kernel for this chart")


def _glued_zeta(chart: RadialChart, t: float):
    """The classical glued carrier: chart kernel in the near zone, the plain
    distance kernel outside, glued across [t/8, t/4] of the pole distance."""
    chi = cutoff_profile(t, inner=0.125, outer=0.25)
    fund = _fundamental_zeta(chart)

    def zeta(d):
        d = np.asarray(d, dtype=float)
        lo = chi.value(d)
        return lo * fund(d) + (1.0 - lo) / d ** 2

    return zeta


def _glued_source(chart: RadialChart, t: float):
    """rho(d) = -L zeta for the glued carrier, closed form.

    Both suite charts are rotationally symmetric about the pole (warp sin(d)
    for the round chart, d for the flat one), so for any radial profile
    u(d):  L u = -6 [u'' + 3 (W'/W) u'] + R u.  The chart kernel is
    L-harmonic, so the source is supported where the glue is active.
    """
    chi = cutoff_profile(t, inner=0.125, outer=0.25)

    def parts(d):
        d = np.asarray(d, dtype=float)
        if chart.kind == "round":
            u = 0.5 * d
            K = 0.25 / np.sin(u) ** 2
            K1 = -0.25 * np.cos(u) / np.sin(u) ** 3
            K2 = 0.125 * (1.0 / np.sin(u) ** 2 + 3.0 * np.cos(u) ** 2 / np.sin(u) ** 4)
            W, Wp, R = np.sin(d), np.cos(d), 12.0
        else:
            K = 1.0 / d ** 2
            K1 = -2.0 / d ** 3
            K2 = 6.0 / d ** 4
            W, Wp, R = d, np.ones_like(d), 0.0
        P = 1.0 / d ** 2
        P1 = -2.0 / d ** 3
        P2 = 6.0 / d ** 4
        lo = chi.value(d)
        lo1 = chi.deriv(d)
        lo2 = chi.deriv2(d)
        z = lo * K + (1.0 - lo) * P
        z1 = lo1 * (K - P) + lo * K1 + (1.0 - lo) * P1
        z2 = lo2 * (K - P) + 2.0 * lo1 * (K1 - P1) + lo * K2 + (1.0 - lo) * P2
        return -6.0 * (z2 + 3.0 * (Wp / W) * z1) + R * z

    def rho(d):
        return -parts(d)

    return rho


def solve_dirichlet_green(problem: GreenProblem) -> GreenEvaluator:
    """Solve L G = 24 pi^2 delta_x, G = 0 on the chart sphere of radius delta.

    Splits G = zeta + phi and solves the remainder mode-by-mode; with the
    fundamental carrier the remainder is the L-harmonic extension of -zeta
    from the boundary.
    """
    t = float(np.linalg.norm(problem.pole))
    chart = problem.chart
    delta = problem.delta
    if problem.parametrix == "fundamental":
        zeta = _fundamental_zeta(chart)
        rho_modes = None
    elif problem.parametrix == "glued":
        zeta = _glued_zeta(chart, t)
        rho_modes = "radial"
    else:
        raise ValueError("parametrix must be 'fundamental' or 'glued'")

    bmodes = zonal_project(
        lambda gamma: -zeta(chart.dist(np.full_like(gamma, delta), t,
                                       np.cos(gamma))),
        problem.lmax)
    mesh = _default_mesh(delta, t, problem.mesh_size)
    rho_splines = [None] * (problem.lmax + 1)
    if rho_modes == "radial":
        rho_of_d = _glued_source(chart, t)
        ng = 4 * problem.lmax + 64
        x, wq = np.polynomial.legendre.leggauss(ng)
        gam = 0.5 * math.pi * (x + 1.0)
        wq = 0.5 * math.pi * wq
        cg = np.cos(gam)
        rs = mesh[(mesh > 2.0 * mesh[0]) & (mesh < delta * (1 - 1e-9))]
        U = chebyshev_u(problem.lmax, cg)
        s2 = np.sin(gam) ** 2
        vals = np.empty((len(rs), ng))
        for i, rr in enumerate(rs):
            vals[i] = rho_of_d(chart.dist(np.full(ng, rr), t, cg))
        coeffs = (2.0 / math.pi) * (vals * s2[None, :]) @ (U * wq[None, :]).T
        for l in range(problem.lmax + 1):
            rho_splines[l] = CubicSpline(rs, coeffs[:, l], extrapolate=True)

    splines = []
    err = 0.0
    coarse = mesh[::2] if mesh[-1] == mesh[::2][-1] else np.append(mesh[::2], mesh[-1])
    for l in range(problem.lmax + 1):
        u_fine = _solve_mode(chart, l, delta, float(bmodes[l]), rho_splines[l], mesh)
        u_coarse = _solve_mode(chart, l, delta, float(bmodes[l]), rho_splines[l], coarse)
        interp = np.interp(coarse, mesh, u_fine)
        err += float(np.max(np.abs(interp - u_coarse))) * (l + 1)
        splines.append(CubicSpline(mesh, u_fine, extrapolate=True))
    # truncation part of the error: magnitude of the last boundary mode
    err += abs(float(bmodes[-1])) * (problem.lmax + 1)
    return GreenEvaluator(chart, problem.pole, delta, zeta, splines,
                          problem.lmax, err)


def solve_harmonic_extension(field: ChartMetricField, delta: float, datum,
                             lmax: int = 28, mesh_size: int = 420,
                             require_even: bool = True):
    """Solve L H = 0 in the ball with zonal Dirichlet datum(gamma) on the
    boundary; equivariant data must carry even modes only."""
    chart = chart_for_field(field)
    bmodes = zonal_project(lambda g: np.asarray(datum(g), dtype=float), lmax)
    odd_power = float(np.sum(np.abs(bmodes[1::2])))
    if require_even and odd_power > 1e-8 * (1.0 + float(np.sum(np.abs(bmodes)))):
        raise ValueError("equivariant boundary datum must be antipodally even")
    mesh = _default_mesh(delta, 0.0, mesh_size)
    splines = []
    for l in range(lmax + 1):
        splines.append(CubicSpline(
            mesh, _solve_mode(chart, l, delta, float(bmodes[l]), None, mesh),
            extrapolate=True))

    class _Harmonic:
        def __init__(self, axis):
            self.axis = axis

        def value(self, pts):
            pts = np.atleast_2d(np.asarray(pts, dtype=float))
            r = np.linalg.norm(pts, axis=1)
            c = np.zeros_like(r)
            safe = r > 0.0
            c[safe] = (pts[safe] @ self.axis) / r[safe]
            U = chebyshev_u(lmax, np.clip(c, -1.0, 1.0))
            out = np.zeros(len(pts))
            for l, spl in enumerate(splines):
                out += spl(r) * U[l]
            return out

    return _Harmonic(np.array([1.0, 0.0, 0.0, 0.0]))


# ----------------------------------------------------------------------------
# CNC wrap and assembly
# ----------------------------------------------------------------------------

def cnc_radial_factor(chart: RadialChart, pole, delta: float):
    """The equivariant CNC conformal exponent f(y) for the suite charts.

    Flat chart: identically zero.  Round chart: phi_t(d) d^2/2 around the pole
    plus the mirror branch around -pole (the factor is antipodally
    symmetrized so gbar projects to the quotient).  Returns (f, f_half) with
    f_half(pts) = f(pts)/2, plus the radial profile callable fr(d).
    """
    pole = np.asarray(pole, dtype=float)
    t = float(np.linalg.norm(pole))
    if chart.kind == "flat":
        zero = lambda pts: np.zeros(len(np.atleast_2d(pts)))
        return zero, lambda d: np.zeros_like(np.asarray(d, dtype=float))
    phi = cutoff_profile(t)

    def fr(d):
        d = np.asarray(d, dtype=float)
        return phi.value(d) * 0.5 * d * d

    def f(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        c = np.zeros_like(r)
        safe = r > 0.0
        axis = pole / t
        c[safe] = (pts[safe] @ axis) / r[safe]
        dplus = chart.dist(r, t, np.clip(c, -1.0, 1.0))
        dminus = chart.dist(r, t, -np.clip(c, -1.0, 1.0))
        return fr(dplus) + fr(dminus)

    return f, fr


def conformal_wrap(ev: GreenEvaluator, f_callable) -> GreenEvaluator:
    """Gbar = e^{-f/2} G for gbar = e^f g; exact since f(pole) = 0."""
    out = GreenEvaluator(ev.chart, ev.pole, ev.delta, ev.zeta, ev.mode_splines,
                         ev.lmax, ev.error_estimate,
                         conformal_half=lambda pts: 0.5 * f_callable(pts))
    return out


class AssembledGreen:
    """Equivariant quotient Green function through the double cover:
    G_q o sigma_P = G_x + G_{-x} + H_x."""

    def __init__(self, g_plus, g_minus, harmonic=None):
        self.g_plus = g_plus
        self.g_minus = g_minus
        self.harmonic = harmonic

    def value(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = self.g_plus.value(pts) + self.g_minus.value(pts)
        if self.harmonic is not None:
            out = out + self.harmonic.value(pts)
        return out

    def symmetry_defect(self, pts) -> float:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return float(np.max(np.abs(self.value(pts) - self.value(-pts))))


def assemble_equivariant(g_plus: GreenEvaluator, g_minus, harmonic=None) -> AssembledGreen:
    return AssembledGreen(g_plus, g_minus, harmonic)


# ----------------------------------------------------------------------------
# mass extraction
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GreenExpansion:
    t: float
    A_q: float
    error: float
    nu: float
    means: np.ndarray
    radii: np.ndarray

    def with_matching(self, epsilon: float, tau: float) -> "GreenExpansion":
        """Attach the gluing constant from the U/Green continuity condition
        c4/eps / (1 + tau^2/eps^2) = (tau^-2 + A_q)/nu."""
        k = sobolev_constants()
        nu = (1.0 / tau ** 2 + self.A_q) * (1.0 + tau ** 2 / epsilon ** 2) \
            / (k.c4 / epsilon)
        return GreenExpansion(self.t, self.A_q, self.error, nu,
                              self.means, self.radii)


def beta_samples(evaluator, pole, expansion: GreenExpansion, radii,
                 n_dirs: int = 8, chart: RadialChart = None,
                 conformal_fr=None) -> list:
    """Samples (point, beta) of the C^1 remainder beta(z) = G - |z|^-2 - A_q
    on gbar-geodesic spheres around the pole; beta(0) = 0 by construction."""
    pole = np.asarray(pole, dtype=float)
    t = float(np.linalg.norm(pole))
    if chart is None:
        chart = getattr(evaluator, "chart", RadialChart.flat())
    if conformal_fr is None:
        s_of_rho = lambda rho: rho
    else:
        sgrid = np.linspace(0.0, 0.49 * t if t > 0 else float(np.max(radii)) * 2,
                            400)
        integ = _cumulative_gl(lambda s: np.exp(0.5 * conformal_fr(s)), sgrid)
        s_of_rho = CubicSpline(integ, sgrid)
    axis = pole / t if t > 0.0 else np.array([1.0, 0.0, 0.0, 0.0])
    basis = _frame_with_axis(axis)
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(n_dirs, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    out = []
    for eps in np.asarray(radii, dtype=float):
        s = float(s_of_rho(eps))
        pts = _exp_sphere(chart, pole, s, dirs @ basis.T)
        vals = evaluator.value(pts)
        for p, v in zip(pts, vals):
            out.append((p, float(v - 1.0 / eps ** 2 - expansion.A_q)))
    return out


def _cumulative_gl(f, sgrid: np.ndarray, order: int = 8) -> np.ndarray:
    """Cumulative integral of f from sgrid[0] along sgrid, per-interval
    Gauss-Legendre; keeps delicate cancellations intact for smooth f."""
    x, w = np.polynomial.legendre.leggauss(order)
    a = sgrid[:-1]
    b = sgrid[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    increments = half * (vals @ w)
    return np.concatenate([[0.0], np.cumsum(increments)])


def _sym_directions(n: int = 6) -> np.ndarray:
    from cyl.quadrature import _sphere3_nodes
    nodes, w = _sphere3_nodes(n, n, 2 * n)
    dirs = np.concatenate([nodes, -nodes])
    weights = np.concatenate([w, w])
    return dirs, weights / np.sum(weights)


def extract_mass(evaluator, pole, eps0: float = None, levels: int = 4,
                 chart: RadialChart = None, conformal_fr=None) -> GreenExpansion:
    """Mass by Richardson extrapolation of spherical means of G - |z|^-2.

    Sample spheres are gbar-geodesic spheres of radius eps_k = eps0 * 2^-k
    around the pole; with the radial CNC profile conformal_fr the gbar-radius
    rho(s) = int_0^s e^{f/2} is inverted exactly on the radial geodesics.
    Antipodal direction pairs kill the odd terms of the C^1 remainder.
    """
    pole = np.asarray(pole, dtype=float)
    t = float(np.linalg.norm(pole))
    if chart is None:
        chart = getattr(evaluator, "chart", RadialChart.flat())
    if eps0 is None:
        eps0 = t / 8.0
    dirs, weights = _sym_directions()
    radii = eps0 * 0.5 ** np.arange(levels)
    # rho(s) map along radial geodesics
    if conformal_fr is None:
        s_of_rho = lambda rho: rho
    else:
        sgrid = np.linspace(0.0, min(2.0 * eps0, 0.49 * t) if t > 0 else 2.0 * eps0,
                            400)
        integ = _cumulative_gl(lambda s: np.exp(0.5 * conformal_fr(s)), sgrid)
        s_of_rho = CubicSpline(integ, sgrid)
    means = np.empty(levels)
    axis = pole / t if t > 0.0 else np.array([1.0, 0.0, 0.0, 0.0])
    # orthonormal tangent completion: rotate e1 onto axis
    basis = _frame_with_axis(axis)
    for k, eps in enumerate(radii):
        s = float(s_of_rho(eps))
        pts = _exp_sphere(chart, pole, s, dirs @ basis.T)
        vals = evaluator.value(pts)
        means[k] = float(np.sum(weights * (vals - 1.0 / eps ** 2)))
    design = np.stack([np.ones(levels), radii, radii ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(design, means, rcond=None)
    fitted = design @ coef
    err = float(np.max(np.abs(means - fitted))) + abs(means[-1] - coef[0]) * 0.5
    return GreenExpansion(t=t, A_q=float(coef[0]), error=err, nu=math.nan,
                          means=means, radii=radii)


def _frame_with_axis(axis: np.ndarray) -> np.ndarray:
    vecs = [axis]
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        v = e.copy()
        for b in vecs:
            v -= (v @ b) * b
        n = np.linalg.norm(v)
        if n > 1e-8:
            vecs.append(v / n)
        if len(vecs) == 4:
            break
    return np.array(vecs)


def _exp_sphere(chart: RadialChart, pole, s: float, dirs: np.ndarray) -> np.ndarray:
    """Chart points at geodesic distance s from the pole along unit dirs."""
    t = float(np.linalg.norm(pole))
    if chart.kind == "flat":
        return pole[None, :] + s * dirs
    # round: ambient S^4 geodesics from the lifted pole
    from cyl.geometry.football import chart_to_sphere
    p = chart_to_sphere(pole)
    # tangent lift of a chart direction v at the chart point:
    # d/du chart_to_sphere(pole + u v) normalized
    out = np.empty((len(dirs), 4))
    h = 1e-6
    for i, v in enumerate(dirs):
        dp = (chart_to_sphere(pole + h * v) - chart_to_sphere(pole - h * v)) / (2 * h)
        dp -= (dp @ p) * p
        dp /= np.linalg.norm(dp)
        q = math.cos(s) * p + math.sin(s) * dp
        # back to chart coordinates: polar angle about the north pole
        theta = math.acos(np.clip(q[4], -1.0, 1.0))
        head = q[:4]
        nh = np.linalg.norm(head)
        out[i] = (theta / nh) * head if nh > 0 else np.zeros(4)
    return out


# ----------------------------------------------------------------------------
# sweeps and the parametrix law
# ----------------------------------------------------------------------------

def mass_divergence_sweep(model: str, t_grid, delta: float, lmax: int = 28,
                          mesh_size: int = 420, boundary_datum=None) -> list:
    """Full pipeline per t: CNC factor, Dirichlet solve at both poles,
    equivariant assembly, mass extraction.  Returns rows of dicts with the
    A_q * 4 t^2 column."""
    if model == "flat-cone":
        field = FlatField()
    elif model == "football":
        from cyl.geometry.fields import WarpedRadialField, round_profile
        field = WarpedRadialField(round_profile())
    else:
        raise ValueError("model must be 'flat-cone' or 'football'")
    rows = []
    for t in np.asarray(t_grid, dtype=float):
        pole = np.array([t, 0.0, 0.0, 0.0])
        problem = GreenProblem(field, pole, delta, lmax=lmax, mesh_size=mesh_size)
        g_plus = solve_dirichlet_green(problem)
        f_full, fr = cnc_radial_factor(problem.chart, pole, delta)
        gbar_plus = conformal_wrap(g_plus, f_full)
        gbar_minus_vals = _MirrorEval(gbar_plus)
        harmonic = None
        if boundary_datum is not None:
            harmonic = solve_harmonic_extension(field, delta, boundary_datum,
                                                lmax=lmax, mesh_size=mesh_size)
        assembled = assemble_equivariant(gbar_plus, gbar_minus_vals, harmonic)
        exp = extract_mass(assembled, pole, chart=problem.chart, conformal_fr=fr)
        rows.append({
            "t": float(t),
            "A_q": exp.A_q,
            "product": exp.A_q * 4.0 * t ** 2,
            "error": exp.error,
            "solver_error": g_plus.error_estimate,
        })
    return rows


class _MirrorEval:
    """G_{-x}(y) = G_x(-y) by the equivariance of the suite metrics."""

    def __init__(self, base):
        self.base = base

    def value(self, pts):
        return self.base.value(-np.atleast_2d(np.asarray(pts, dtype=float)))


def parametrix_residual(chart: RadialChart, t: float, n_samples: int = 200,
                        with_cnc: bool = True) -> dict:
    """Samples of L_gbar(rho^-2) on the punctured ball rho < rho(t/2).

    Uses the exact radial reduction about the pole: within distance t/2 the
    (CNC-modified) suite metric is rotationally symmetric about the pole, so
    with m(rho) = e^{f/2} w and the conformal scalar curvature the residual

        L(rho^-2) = (12/rho^3) * 3 (m'/m - 1/rho) + R_gbar/rho^2

    is a closed-form radial function.  Returns samples, the sup, and the two
    terms separately.
    """
    phi = cutoff_profile(t)
    svals = np.linspace(t * 1e-3, 0.5 * t * (1 - 1e-9), n_samples)
    if chart.kind == "flat":
        # m(rho) = rho and R = 0 identically: the residual vanishes
        zeros = np.zeros_like(svals)
        return {"rho": svals, "volume_term": zeros, "curvature_term": zeros,
                "total": zeros, "sup": 0.0,
                "sup_curvature_term_no_cnc": 0.0}

    def fprof(s):
        if chart.kind == "flat" or not with_cnc:
            return np.zeros_like(s)
        return phi.value(s) * 0.5 * s * s

    def fprof_p(s):
        if chart.kind == "flat" or not with_cnc:
            return np.zeros_like(s)
        return phi.deriv(s) * 0.5 * s * s + phi.value(s) * s

    def fprof_pp(s):
        if chart.kind == "flat" or not with_cnc:
            return np.zeros_like(s)
        return phi.deriv2(s) * 0.5 * s * s + 2.0 * phi.deriv(s) * s + phi.value(s)

    w = np.asarray(chart.w(svals), dtype=float)
    wp = np.asarray(chart.wp(svals), dtype=float)
    R0 = np.asarray(chart.scal(svals), dtype=float)
    f = fprof(svals)
    fp = fprof_p(svals)
    fpp = fprof_pp(svals)
    # rho(s) to machine accuracy: the volume term lives on the cancellation
    # m(rho) = rho + O(rho^5), so rho itself must be exact
    grid = np.concatenate([[0.0], svals])
    rho = _cumulative_gl(lambda s: np.exp(0.5 * fprof(s)), grid)[1:]
    m = np.exp(0.5 * f) * w
    dm_ds = np.exp(0.5 * f) * (0.5 * fp * w + wp)
    dm_drho = dm_ds * np.exp(-0.5 * f)
    lap_f = fpp + 3.0 * (wp / w) * fp
    R_bar = np.exp(-f) * (R0 - 3.0 * lap_f - 1.5 * fp * fp)
    term_vol = (12.0 / rho ** 3) * 3.0 * (dm_drho / m - 1.0 / rho)
    term_scal = R_bar / rho ** 2
    total = term_vol + term_scal
    return {
        "rho": rho,
        "volume_term": term_vol,
        "curvature_term": term_scal,
        "total": total,
        "sup": float(np.max(np.abs(total))),
        "sup_curvature_term_no_cnc": float(np.max(np.abs(R0 / rho ** 2))),
    }


def parametrix_sweep(chart: RadialChart, t_list) -> dict:
    """Fitted exponent of sup |L_gbar(rho^-2)| against t."""
    t_list = np.asarray(t_list, dtype=float)
    sups = np.array([parametrix_residual(chart, float(t))["sup"]
                     for t in t_list])
    slope, intercept = np.polyfit(np.log(t_list), np.log(sups), 1)
    return {"t": t_list, "sup": sups, "exponent": float(slope),
            "constant": float(math.exp(intercept))}
