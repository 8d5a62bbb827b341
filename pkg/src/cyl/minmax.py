"""Test functions and the five-leg competitor path on the RP^3-football,
with Yamabe-quotient profiles and expansion-constant fits.

All competitor integrals reduce, by the axial symmetry of every leg, to 2-d
quadratures over angle rectangles on the lifted round sphere.  Quotient
values carry the exact 1/sqrt(2) lift factor: for equivariant test functions
Q on the football equals the lifted quotient divided by sqrt(2).

Legs and their lifted coordinates:

* DOUBLE  -- the cut-off symmetric bubble pair in chart polar (theta, psi),
  theta the chart radius (= distance from the lifted pole), psi the zonal
  angle against the center axis.
* GLUED   -- the bubble glued to the Green function in pole-centered polar
  (xi, eta) about the bubble center x = t*nu: every case boundary (the
  U/Green match at |z| = tau, the beta cutoff at 2 tau) is a coordinate
  circle xi = const, and the mirror copy contributes a factor 2 by
  equivariance.  Outside the glue balls the Green function is L-harmonic, so
  the far Dirichlet integral collapses to exact boundary fluxes.
* INTERP  -- the convex combination, same (xi, eta) reduction; only the far
  region of its fourth power and of the cross-free gradient term needs the
  banded rectangles excluding the mirror ball.

The Green data comes from the closed-form global football kernel (the
equivariant sum of round-sphere kernels) conformally corrected by the CNC
factor; its mass is A_q(t) = 1/(4 sin^2 t) exactly, which the code recomputes
numerically as a guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from cyl.constants import sobolev_constants
from cyl.geometry.cnc import CutoffProfile, cutoff_profile
from cyl.green import _cumulative_gl, sphere_kernel
from cyl.quadrature import (IntegralResult, QuadratureSpec, integrate_radial,
                            integrate_rect2d, integrate_sphere3)

__all__ = [
    "D2",
    "TestFunctionDescriptor",
    "PathConfig",
    "PathProfile",
    "GluedData",
    "glued_data",
    "nu_matching",
    "boundary_flux",
    "evaluate_quotient",
    "quotient_double",
    "quotient_glued",
    "quotient_interp",
    "build_path",
    "fit_expansion_A",
    "exponents_admissible",
]


# ----------------------------------------------------------------------------
# forward-mode scalars in two variables
# ----------------------------------------------------------------------------

class D2:
    """Vectorized value with partials against the two quadrature variables."""

    __slots__ = ("v", "dx", "dy")

    def __init__(self, v, dx=0.0, dy=0.0):
        self.v = np.asarray(v, dtype=float)
        self.dx = np.broadcast_to(np.asarray(dx, dtype=float), self.v.shape)
        self.dy = np.broadcast_to(np.asarray(dy, dtype=float), self.v.shape)

    @staticmethod
    def var_x(v):
        v = np.asarray(v, dtype=float)
        return D2(v, np.ones_like(v), np.zeros_like(v))

    @staticmethod
    def var_y(v):
        v = np.asarray(v, dtype=float)
        return D2(v, np.zeros_like(v), np.ones_like(v))

    @staticmethod
    def const(v):
        v = np.asarray(v, dtype=float)
        return D2(v, np.zeros_like(v), np.zeros_like(v))

    def _coerce(self, other):
        return other if isinstance(other, D2) else D2.const(other)

    def __add__(self, o):
        o = self._coerce(o)
        return D2(self.v + o.v, self.dx + o.dx, self.dy + o.dy)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._coerce(o)
        return D2(self.v - o.v, self.dx - o.dx, self.dy - o.dy)

    def __rsub__(self, o):
        return self._coerce(o).__sub__(self)

    def __mul__(self, o):
        o = self._coerce(o)
        return D2(self.v * o.v, self.dx * o.v + self.v * o.dx,
                  self.dy * o.v + self.v * o.dy)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._coerce(o)
        inv = 1.0 / o.v
        q = self.v * inv
        return D2(q, (self.dx - q * o.dx) * inv, (self.dy - q * o.dy) * inv)

    def __rtruediv__(self, o):
        return self._coerce(o).__truediv__(self)

    def __neg__(self):
        return D2(-self.v, -self.dx, -self.dy)

    def __pow__(self, p):
        w = self.v ** (p - 1)
        return D2(self.v * w, p * w * self.dx, p * w * self.dy)

    def apply(self, f, fp):
        """Chain an elementwise function with known derivative."""
        d = fp(self.v)
        return D2(f(self.v), d * self.dx, d * self.dy)

    def sin(self):
        return self.apply(np.sin, np.cos)

    def cos(self):
        return self.apply(np.cos, lambda v: -np.sin(v))

    def exp(self):
        return self.apply(np.exp, np.exp)

    def sqrt(self):
        return self.apply(np.sqrt, lambda v: 0.5 / np.sqrt(v))

    def arccos_clipped(self):
        v = np.clip(self.v, -1.0, 1.0 - 1e-15)
        d = -1.0 / np.sqrt(np.maximum(1.0 - v * v, 1e-30))
        return D2(np.arccos(v), d * self.dx, d * self.dy)


def _cutoff_d2(profile: CutoffProfile, s: D2) -> D2:
    return D2(profile.value(s.v), profile.deriv(s.v) * s.dx,
              profile.deriv(s.v) * s.dy)


def _theta_over_sin(theta: D2) -> D2:
    """theta/sin(theta) with a series branch near zero."""
    v = theta.v
    small = np.abs(v) < 1e-4
    ratio = np.where(small, 1.0 + v * v / 6.0, v / np.sin(np.where(small, 1.0, v)))
    dratio = np.where(small, v / 3.0,
                      (np.sin(np.where(small, 1.0, v))
                       - v * np.cos(np.where(small, 1.0, v)))
                      / np.sin(np.where(small, 1.0, v)) ** 2)
    return D2(ratio, dratio * theta.dx, dratio * theta.dy)


# ----------------------------------------------------------------------------
# configuration and descriptors
# ----------------------------------------------------------------------------

def exponents_admissible(alpha: float, omega: float) -> bool:
    return 1.0 > omega > alpha > 0.5 and 2.0 + 2.0 * alpha - 4.0 * omega > 0.0


@dataclass(frozen=True)
class PathConfig:
    """Geometry and exponents of the competitor path on the football.

    delta must be small enough that the beta-cutoff annulus B_{2 tau} never
    reaches the partner bubble anywhere on the middle leg: with
    tau(t) = min(t^{omega/alpha}, ..., (delta/2)^{omega/alpha}) the binding
    point is t = delta/2, where 2 tau / t = 2 (delta/2)^{omega/alpha - 1}.
    """

    epsilon: float = 1e-4
    alpha: float = 0.6
    omega: float = 0.7
    delta: float = 0.025
    pole_distance: float = math.pi
    mu_points: int = 51
    rel_tol: float = 1e-9
    abs_tol: float = 1e-13

    def __post_init__(self):
        if not exponents_admissible(self.alpha, self.omega):
            raise ValueError("exponents must satisfy 1 > omega > alpha > 1/2 "
                             "and 2 + 2 alpha - 4 omega > 0")
        if self.epsilon ** self.alpha >= self.delta / 4.0:
            raise ValueError("epsilon too large: need eps^alpha < delta/4")
        # the two glue balls must stay disjoint along the whole leg
        e = self.omega / self.alpha
        worst = max(2.0 * self.epsilon ** (self.omega - self.alpha),
                    2.0 * (self.delta / 2.0) ** (e - 1.0))
        if worst >= 0.98:
            raise ValueError(
                "glue radius 2 tau reaches the partner bubble somewhere on "
                f"the middle leg (worst 2 tau/t = {worst:.3f}); shrink delta "
                "or epsilon")

    def spec(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    def t_of_mu(self, mu: float) -> float:
        """Center distance along the geodesic for the middle leg mu in [2,3]."""
        te = self.epsilon ** self.alpha
        return te + (mu - 2.0) * (self.pole_distance - 2.0 * te)

    def tau_of_t(self, t: float) -> float:
        e = self.omega / self.alpha
        return min(t ** e, (self.pole_distance - t) ** e,
                   (self.delta / 2.0) ** e)


@dataclass(frozen=True)
class TestFunctionDescriptor:
    variant: str                 # SINGLE, DOUBLE, GLUED, INTERP
    epsilon: float
    t: float = 0.0
    tau: float = 0.0
    lam: float = 0.0
    pole: int = 1                # which conical point carries the chart
    nu_match: float = math.nan
    A_q: float = math.nan


@dataclass
class PathProfile:
    config: PathConfig
    mu: np.ndarray
    Q: np.ndarray
    Q_err: np.ndarray
    legs: list
    descriptors: list

    @property
    def max_Q(self) -> float:
        return float(np.max(self.Q))

    @property
    def argmax_mu(self) -> float:
        return float(self.mu[int(np.argmax(self.Q))])

    def endpoint_values(self):
        return float(self.Q[0]), float(self.Q[-1])


# ----------------------------------------------------------------------------
# bubble profiles in lifted coordinates
# ----------------------------------------------------------------------------

def _chart_pair_sq(theta: D2, psi: D2, t: float):
    """|z -+ t e1|^2 for the chart point with polar data (theta, psi)."""
    p = theta * psi.cos()
    d2m = theta * theta + t * t - 2.0 * t * p
    d2p = theta * theta + t * t + 2.0 * t * p
    return d2m, d2p


def _bubble(eps: float, r2: D2) -> D2:
    c4 = sobolev_constants().c4
    return (c4 / eps) / (1.0 + r2 * (1.0 / eps ** 2))


def _double_bubble_chart(eps: float, t: float, theta: D2, psi: D2,
                         chi: CutoffProfile | None) -> D2:
    d2m, d2p = _chart_pair_sq(theta, psi, t)
    u = _bubble(eps, d2m) + _bubble(eps, d2p)
    if chi is not None:
        u = u * _cutoff_d2(chi, theta)
    return u


# ----------------------------------------------------------------------------
# DOUBLE leg
# ----------------------------------------------------------------------------

def quotient_double(eps: float, t: float, delta: float | None,
                    spec: QuadratureSpec, model: str = "football"):
    """Q of the (cut-off) double bubble: football chart or exact flat cone.

    Returns (Q, err) on the quotient, lift factor included.  ``delta = None``
    drops the cutoff (complete flat cone)."""
    if model == "football":
        weight = lambda th: np.sin(th) ** 3
        scal = 12.0
        theta_max = 2.0 * delta if delta is not None else math.pi
    elif model == "flat":
        weight = lambda th: th ** 3
        scal = 0.0
        theta_max = 2.0 * delta if delta is not None else math.inf
    else:
        raise ValueError("model must be 'football' or 'flat'")
    chi = cutoff_profile(1.0, inner=delta, outer=2.0 * delta) if delta is not None else None

    def num(theta_v, psi_v):
        theta = D2.var_x(theta_v)
        psi = D2.var_y(psi_v)
        u = _double_bubble_chart(eps, t, theta, psi, chi)
        sin_th = np.sin(theta_v) if model == "football" else theta_v
        grad2 = u.dx ** 2 + (u.dy / sin_th) ** 2
        return (6.0 * grad2 + scal * u.v ** 2) * weight(theta_v) \
            * 4.0 * math.pi * np.sin(psi_v) ** 2

    def den(theta_v, psi_v):
        theta = D2.var_x(theta_v)
        psi = D2.var_y(psi_v)
        u = _double_bubble_chart(eps, t, theta, psi, chi)
        return u.v ** 4 * weight(theta_v) * 4.0 * math.pi * np.sin(psi_v) ** 2

    grading = (((t, 0.0), eps), ((t, math.pi), eps))
    gspec = spec.with_grading(*grading)
    if math.isinf(theta_max):
        # map theta = tan(s) for the complete flat cone
        def wrap(F):
            def g(s, psi):
                th = np.tan(s)
                return F(th, psi) * (1.0 + th * th)

            return g

        smax = 0.5 * math.pi * (1.0 - 1e-12)
        tgr = (((math.atan(t), 0.0), eps / (1 + t * t)),
               ((math.atan(t), math.pi), eps / (1 + t * t)))
        nres = integrate_rect2d(wrap(num), spec.with_grading(*tgr),
                                (1e-12, smax), (0.0, math.pi))
        dres = integrate_rect2d(wrap(den), spec.with_grading(*tgr),
                                (1e-12, smax), (0.0, math.pi))
    else:
        nres = integrate_rect2d(num, gspec, (1e-12, theta_max), (0.0, math.pi))
        dres = integrate_rect2d(den, gspec, (1e-12, theta_max), (0.0, math.pi))
    return _quotient_from(nres, dres)


def _quotient_from(nres: IntegralResult, dres: IntegralResult):
    q_lift = nres.value / math.sqrt(dres.value)
    q = q_lift / math.sqrt(2.0)
    err = q * (nres.error_estimate / abs(nres.value)
               + 0.5 * dres.error_estimate / dres.value)
    return q, err


# ----------------------------------------------------------------------------
# glued data: the CNC-corrected global Green function at pole distance t
# ----------------------------------------------------------------------------

@dataclass
class GluedData:
    eps: float
    t: float
    tau: float
    A_q: float
    A_q_closed: float
    nu: float
    s_tau: float          # chart radius with rho(s_tau) = tau
    s_2tau: float
    rho: object           # s -> gbar radial distance (spline)
    s_of_rho: object
    f1: object            # CNC exponent branch profile f1(s), with derivative
    f1p: object
    chi_tau: CutoffProfile

    def rho_d2(self, xi: D2) -> D2:
        v = self.rho(xi.v)
        d = np.exp(0.5 * self.f1(xi.v))
        return D2(v, d * xi.dx, d * xi.dy)


def _cnc_profile(t: float):
    phi = cutoff_profile(t)

    def f1(s):
        s = np.asarray(s, dtype=float)
        return phi.value(s) * 0.5 * s * s

    def f1p(s):
        s = np.asarray(s, dtype=float)
        return phi.deriv(s) * 0.5 * s * s + phi.value(s) * s

    def f1pp(s):
        s = np.asarray(s, dtype=float)
        return phi.deriv2(s) * 0.5 * s * s + 2.0 * phi.deriv(s) * s + phi.value(s)

    return f1, f1p, f1pp


def glued_data(eps: float, t: float, tau: float) -> GluedData:
    """Matching data for the glued test function at pole distance t."""
    if not 0.0 < eps < tau < t:
        raise ValueError("need 0 < eps < tau < t")
    f1, f1p, _ = _cnc_profile(t)
    smax = min(2.0 * t * 0.98, 0.5 * (t + math.pi) )
    sgrid = np.linspace(0.0, smax, 800)
    rho_vals = _cumulative_gl(lambda s: np.exp(0.5 * f1(s)), sgrid)
    rho = CubicSpline(sgrid, rho_vals)
    s_of_rho = CubicSpline(rho_vals, sgrid)
    s_tau = float(s_of_rho(tau))
    s_2tau = float(s_of_rho(2.0 * tau))
    if 2.0 * s_2tau >= 2.0 * t * 0.98:
        raise ValueError("glue annulus reaches the partner bubble")
    # numeric mass: limit of e^{-f/2}(Gs(s) + Gs(d2)) - rho^-2 along the axis
    svals = t * np.array([1e-2, 5e-3, 2.5e-3])
    vals = []
    for s in svals:
        d2 = 2.0 * t - s  # along the geodesic toward the partner
        G = math.exp(-0.5 * float(f1(s))) * (float(sphere_kernel(s))
                                             + float(sphere_kernel(d2)))
        vals.append(G - 1.0 / float(rho(s)) ** 2)
    # quadratic Richardson in s
    design = np.stack([np.ones(3), svals, svals ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(design, np.array(vals), rcond=None)
    A_num = float(coef[0])
    A_closed = float(0.25 / math.sin(t) ** 2)
    k = sobolev_constants()
    nu = (1.0 / tau ** 2 + A_num) * (1.0 + tau ** 2 / eps ** 2) / (k.c4 / eps)
    return GluedData(eps=eps, t=t, tau=tau, A_q=A_num, A_q_closed=A_closed,
                     nu=nu, s_tau=s_tau, s_2tau=s_2tau, rho=rho,
                     s_of_rho=s_of_rho, f1=f1, f1p=f1p,
                     chi_tau=CutoffProfile(tau, 2.0 * tau))


def nu_matching(epsilon: float, tau: float, A_q: float) -> dict:
    """Exact matching constant of the U/Green continuity condition and its
    leading expansion 1/nu = c4 eps (1 - tau^2 A_q - eps^2/tau^2 + ...)."""
    if not 0.0 < epsilon < tau:
        raise ValueError("need 0 < epsilon < tau")
    k = sobolev_constants()
    nu = (1.0 / tau ** 2 + A_q) * (1.0 + tau ** 2 / epsilon ** 2) / (k.c4 / epsilon)
    inv_exact = 1.0 / nu
    inv_series = k.c4 * epsilon * (1.0 - tau ** 2 * A_q - epsilon ** 2 / tau ** 2
                                   + epsilon ** 2 * A_q)
    gap = abs(inv_exact - inv_series) / abs(inv_exact)
    return {"nu": nu, "inverse": inv_exact, "series": inv_series,
            "relative_gap": gap}


def boundary_flux(epsilon: float, tau: float,
                  spec: QuadratureSpec | None = None) -> dict:
    """Flux int_{|z|=tau} (d_nu U_eps) U_eps: closed form and quadrature."""
    if tau <= 0.0 or epsilon <= 0.0:
        raise ValueError("epsilon and tau must be positive")
    k = sobolev_constants()
    closed = 2.0 * math.pi ** 2 * tau ** 3 * \
        (-2.0 * k.c4 ** 2 * epsilon ** -4 * tau
         / (1.0 + tau ** 2 / epsilon ** 2) ** 3)
    if spec is None:
        spec = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-15)

    def f(pts):
        r2 = np.sum(pts * pts, axis=1)
        u = (k.c4 / epsilon) / (1.0 + r2 / epsilon ** 2)
        du = -2.0 * k.c4 * np.sqrt(r2) / epsilon ** 3 / (1.0 + r2 / epsilon ** 2) ** 2
        return u * du

    quad = integrate_sphere3(f, tau, np.zeros(4), spec)
    leading = -4.0 * math.pi ** 2 * k.c4 ** 2 * epsilon ** 2 / tau ** 2
    return {"closed_form": closed, "quadrature": quad.value,
            "quadrature_error": quad.error_estimate, "leading_order": leading}


# ----------------------------------------------------------------------------
# GLUED and INTERP legs in (xi, eta) coordinates about the bubble center
# ----------------------------------------------------------------------------

class _LegGeometry:
    """Closed-form geometric scalars in (xi, eta) about the center at
    distance t from the lifted pole N."""

    def __init__(self, t: float, data: GluedData):
        self.t = t
        self.data = data

    def d2_partner(self, xi: D2, eta: D2) -> D2:
        t = self.t
        carg = xi.cos() * math.cos(2.0 * t) + xi.sin() * eta.cos() * math.sin(2.0 * t)
        return carg.arccos_clipped()

    def theta_chart(self, xi: D2, eta: D2) -> D2:
        t = self.t
        carg = xi.cos() * math.cos(t) + xi.sin() * eta.cos() * math.sin(t)
        return carg.arccos_clipped()

    def chart_pair_sq(self, xi: D2, eta: D2):
        """|z - t e1|^2 and |z + t e1|^2 of the chart point."""
        t = self.t
        theta = self.theta_chart(xi, eta)
        ratio = _theta_over_sin(theta)  # theta / sin(theta)
        # cos(xi) = cos(theta) cos(t) + sin(theta) sin(t) cos(psi)
        # => sin(theta) cos(psi) = (cos(xi) - cos(theta) cos(t)) / sin(t)
        sincos_psi = (xi.cos() - theta.cos() * math.cos(t)) * (1.0 / math.sin(t))
        z_par = ratio * sincos_psi
        theta2 = theta * theta
        d2m = theta2 + t * t - 2.0 * t * z_par
        d2p = theta2 + t * t + 2.0 * t * z_par
        return d2m, d2p, theta

    def conf_exponent(self, xi: D2, eta: D2) -> D2:
        """f = f1(xi) + f1(d2) with derivative chain."""
        d = self.data
        d2 = self.d2_partner(xi, eta)
        f_self = D2(d.f1(xi.v), d.f1p(xi.v) * xi.dx, d.f1p(xi.v) * xi.dy)
        f_mirr = D2(d.f1(d2.v), d.f1p(d2.v) * d2.dx, d.f1p(d2.v) * d2.dy)
        return f_self + f_mirr

    def green_lift(self, xi: D2, eta: D2) -> D2:
        """Gbar = e^{-f/2} (Gs(xi) + Gs(d2)), the CNC-corrected global kernel."""
        d2 = self.d2_partner(xi, eta)
        gs = lambda s: 0.25 / np.sin(0.5 * s) ** 2
        gsp = lambda s: -0.25 * np.cos(0.5 * s) / np.sin(0.5 * s) ** 3
        G = xi.apply(gs, gsp) + d2.apply(gs, gsp)
        f = self.conf_exponent(xi, eta)
        return (f * (-0.5)).exp() * G

    def scal_gbar(self, xi: D2, eta: D2) -> np.ndarray:
        """R of gbar = e^f g_round: exact conformal formula, n = 4."""
        d = self.data
        _, f1p, f1pp = _cnc_profile(self.t)
        d2 = self.d2_partner(xi, eta)
        lap = np.zeros_like(xi.v)
        grad2 = np.zeros_like(xi.v)
        for s in (xi.v, d2.v):
            fp = f1p(s)
            fpp = f1pp(s)
            lap = lap + fpp + 3.0 * np.cos(s) / np.sin(s) * fp
            grad2 = grad2 + fp * fp
        f = d.f1(xi.v) + d.f1(d2.v)
        return np.exp(-f) * (12.0 - 3.0 * lap - 1.5 * grad2)

    def measure(self, xi_v, eta_v, f_v) -> np.ndarray:
        return np.exp(2.0 * f_v) * np.sin(xi_v) ** 3 \
            * 4.0 * math.pi * np.sin(eta_v) ** 2

    def grad2_gbar(self, u: D2, xi_v, f_v) -> np.ndarray:
        return np.exp(-f_v) * (u.dx ** 2 + (u.dy / np.sin(xi_v)) ** 2)


def _w_glued(geom: _LegGeometry, xi: D2, eta: D2) -> D2:
    """The glued profile in its own zone structure (primary cases only:
    valid where d1 <= d2, which is all the code ever evaluates)."""
    d = geom.data
    rho = d.rho_d2(xi)
    zone_ball = xi.v <= d.s_tau
    zone_ann = (xi.v > d.s_tau) & (xi.v <= d.s_2tau)
    u_ball = _bubble(d.eps, rho * rho)
    G = geom.green_lift(xi, eta)
    chi = _cutoff_d2(d.chi_tau, rho)
    core = (rho ** -2.0) + d.A_q
    u_ann = (chi * core + (1.0 - chi) * G) * (1.0 / d.nu)
    u_far = G * (1.0 / d.nu)
    v = np.where(zone_ball, u_ball.v, np.where(zone_ann, u_ann.v, u_far.v))
    dx = np.where(zone_ball, u_ball.dx, np.where(zone_ann, u_ann.dx, u_far.dx))
    dy = np.where(zone_ball, u_ball.dy, np.where(zone_ann, u_ann.dy, u_far.dy))
    return D2(v, dx, dy)


def _e_tilde(geom: _LegGeometry, xi: D2, eta: D2,
             chi_delta: CutoffProfile) -> D2:
    """e^{-f/2} u_bar: the conformally weighted chart double bubble."""
    d2m, d2p, theta = geom.chart_pair_sq(xi, eta)
    u = _bubble(geom.data.eps, d2m) + _bubble(geom.data.eps, d2p)
    u = u * _cutoff_d2(chi_delta, theta)
    f = geom.conf_exponent(xi, eta)
    return (f * (-0.5)).exp() * u


def _psi_lambda(geom, xi, eta, lam: float, chi_delta) -> D2:
    if lam == 1.0:
        return _w_glued(geom, xi, eta)
    if lam == 0.0:
        return _e_tilde(geom, xi, eta, chi_delta)
    return _w_glued(geom, xi, eta) * lam + \
        _e_tilde(geom, xi, eta, chi_delta) * (1.0 - lam)


def _near_zone_integrals(geom: _LegGeometry, lam: float, chi_delta,
                         spec: QuadratureSpec):
    """Numerator and fourth-power integrals over the primary glue ball and
    annulus {xi <= s_2tau} (factor 2 for the mirror copy applied here)."""
    d = geom.data

    def num(xi_v, eta_v):
        xi = D2.var_x(xi_v)
        eta = D2.var_y(eta_v)
        u = _psi_lambda(geom, xi, eta, lam, chi_delta)
        f_v = geom.conf_exponent(xi, eta).v
        R = geom.scal_gbar(xi, eta)
        return (6.0 * geom.grad2_gbar(u, xi_v, f_v) + R * u.v ** 2) \
            * geom.measure(xi_v, eta_v, f_v)

    def den(xi_v, eta_v):
        xi = D2.var_x(xi_v)
        eta = D2.var_y(eta_v)
        u = _psi_lambda(geom, xi, eta, lam, chi_delta)
        f_v = geom.conf_exponent(xi, eta).v
        return u.v ** 4 * geom.measure(xi_v, eta_v, f_v)

    gspec = spec.with_grading(((0.0, 0.0), d.eps),
                              ((d.s_tau, 0.0), d.tau * 0.25),
                              ((d.s_2tau, 0.0), d.tau * 0.25))
    lo = 1e-14
    n = integrate_rect2d(num, gspec, (lo, d.s_2tau), (0.0, math.pi))
    dd = integrate_rect2d(den, gspec, (lo, d.s_2tau), (0.0, math.pi))
    return (IntegralResult(2.0 * n.value, 2.0 * n.error_estimate,
                           n.evaluations, n.converged),
            IntegralResult(2.0 * dd.value, 2.0 * dd.error_estimate,
                           dd.evaluations, dd.converged))


def _flux_integrals(geom: _LegGeometry, lam: float, chi_delta,
                    spec: QuadratureSpec):
    """Exact boundary-flux part of the far numerator:

        N_far(psi, psi) = lam^2 N(G/nu) + 2 lam (1-lam) N(G/nu, e~) + ...,

    where the G-parts collapse to fluxes over the glue sphere xi = s_2tau
    (both copies) because L Gbar = 0 outside the poles.
    """
    d = geom.data
    s = d.s_2tau
    f1s = float(d.f1(s))

    def flux_GG(eta_v):
        xi = D2.var_x(np.full_like(eta_v, s))
        eta = D2.var_y(eta_v)
        G = geom.green_lift(xi, eta)
        dG_drho = G.dx * math.exp(-0.5 * f1s)
        return G.v * dG_drho * 4.0 * math.pi * np.sin(eta_v) ** 2

    def flux_Ge(eta_v):
        xi = D2.var_x(np.full_like(eta_v, s))
        eta = D2.var_y(eta_v)
        G = geom.green_lift(xi, eta)
        e = _e_tilde(geom, xi, eta, chi_delta)
        dG_drho = G.dx * math.exp(-0.5 * f1s)
        return e.v * dG_drho * 4.0 * math.pi * np.sin(eta_v) ** 2

    area_scale = math.exp(1.5 * f1s) * math.sin(s) ** 3
    out = []
    for fn in (flux_GG, flux_Ge):
        res = integrate_radial(fn, (0.0, math.pi), spec)
        out.append(IntegralResult(res.value * area_scale,
                                  res.error_estimate * area_scale,
                                  res.evaluations, res.converged))
    gg, ge = out
    # lam^2 N(G,G)/nu^2 and 2 lam(1-lam) N(G,e)/nu, each N collapsing to
    # -6 * (2 spheres) * flux
    coeff_gg = -12.0 * lam ** 2 / d.nu ** 2
    coeff_ge = -24.0 * lam * (1.0 - lam) / d.nu
    value = coeff_gg * gg.value + coeff_ge * ge.value
    err = abs(coeff_gg) * gg.error_estimate + abs(coeff_ge) * ge.error_estimate
    return IntegralResult(value, err, gg.evaluations + ge.evaluations,
                          gg.converged and ge.converged)


def _far_bands(geom: _LegGeometry):
    """The far region {d1 > s, d2 > s} as aligned bands in (xi, eta):
    a plain band before the partner ball, the band around xi = 2t with the
    mirror ball excluded through an eta-remapping, and a plain band beyond.

    Only t <= pi/2 reaches this code (larger t is mirrored through the exact
    pole-swap isometry), so the partner core sits at (2t, eta = 0); at
    t = pi/2 the partner ball degenerates to the polar cap xi >= pi - s.
    """
    d = geom.data
    t = geom.t
    s = d.s_2tau
    if math.sin(2.0 * t) < 1e-9:
        return [("plain", (s, math.pi - s), None)]
    bands = []
    lo, hi = 2.0 * t - s, min(2.0 * t + s, math.pi)

    def eta_excl(xi_v):
        # the exclusion {d2 <= s} is {eta <= eta_excl(xi)} for sin(2t) > 0
        num = math.cos(s) - np.cos(xi_v) * math.cos(2.0 * t)
        den = np.sin(xi_v) * math.sin(2.0 * t)
        return np.arccos(np.clip(num / np.maximum(den, 1e-300), -1.0, 1.0))

    bands.append(("plain", (s, lo), None))
    bands.append(("mapped", (lo, hi), eta_excl))
    if hi < math.pi:
        bands.append(("plain", (hi, math.pi), None))
    return bands


def _far_direct_integrals(geom: _LegGeometry, lam: float, chi_delta,
                          spec: QuadratureSpec):
    """Fourth power over the far region, plus the (1-lam)^2 gradient part
    that has no flux shortcut.  Uses the aligned far bands."""
    d = geom.data

    def psi_far(xi, eta):
        G = geom.green_lift(xi, eta)
        val = G * (lam / d.nu)
        if lam != 1.0:
            val = val + _e_tilde(geom, xi, eta, chi_delta) * (1.0 - lam)
        return val

    def den_integrand(xi_v, eta_v):
        xi = D2.var_x(xi_v)
        eta = D2.var_y(eta_v)
        u = psi_far(xi, eta)
        f_v = geom.conf_exponent(xi, eta).v
        return u.v ** 4 * geom.measure(xi_v, eta_v, f_v)

    def num_ee_integrand(xi_v, eta_v):
        xi = D2.var_x(xi_v)
        eta = D2.var_y(eta_v)
        e = _e_tilde(geom, xi, eta, chi_delta)
        f_v = geom.conf_exponent(xi, eta).v
        R = geom.scal_gbar(xi, eta)
        return (6.0 * geom.grad2_gbar(e, xi_v, f_v) + R * e.v ** 2) \
            * geom.measure(xi_v, eta_v, f_v)

    t = geom.t
    den_total = IntegralResult(0.0, 0.0, 0, True)
    num_ee = IntegralResult(0.0, 0.0, 0, True)
    for kind, (a, b), eta_excl in _far_bands(geom):
        if kind == "plain":
            gr = spec.with_grading(((a, 0.0), d.tau * 0.5),
                                   ((b, 0.0), d.tau * 0.5),
                                   ((t, 0.0), 0.2 * t))
            den_total = den_total + integrate_rect2d(
                den_integrand, gr, (a, b), (0.0, math.pi))
            if lam != 1.0:
                num_ee = num_ee + integrate_rect2d(
                    num_ee_integrand, gr, (a, b), (0.0, math.pi))
        else:
            def mapped(F):
                def g(xi_v, v_v):
                    e0 = eta_excl(xi_v)
                    span = math.pi - e0
                    return F(xi_v, e0 + span * v_v) * span

                return g

            gr = spec.with_grading(((a, 0.0), 0.05 * (b - a)),
                                   ((b, 0.0), 0.05 * (b - a)))
            den_total = den_total + integrate_rect2d(
                mapped(den_integrand), gr, (a, b), (0.0, 1.0))
            if lam != 1.0:
                num_ee = num_ee + integrate_rect2d(
                    mapped(num_ee_integrand), gr, (a, b), (0.0, 1.0))
    return den_total, num_ee


def quotient_glued(eps: float, t: float, tau: float, spec: QuadratureSpec,
                   delta: float = 0.025):
    """Q of the glued bubble/Green competitor at pole distance t."""
    return quotient_interp(eps, 1.0, spec, t=t, tau=tau, delta=delta)


def quotient_interp(eps: float, lam: float, spec: QuadratureSpec,
                    t: float | None = None, tau: float | None = None,
                    delta: float = 0.025, alpha: float = 0.6,
                    omega: float = 0.7, data: GluedData | None = None):
    """Q of psi_lambda = lam w + (1 - lam) e^{-f/2} u at pole distance t.

    Defaults follow the interpolation leg: t = eps^alpha, tau = eps^omega.
    Returns (Q, err) with the quotient lift factor included.
    """
    if t is None:
        t = eps ** alpha
    if tau is None:
        tau = eps ** omega
    if t > math.pi / 2.0:
        # swapping the two conical points is an exact isometry of the model
        t = math.pi - t
    if data is None:
        data = glued_data(eps, t, tau)
    geom = _LegGeometry(t, data)
    chi_delta = cutoff_profile(1.0, inner=delta, outer=2.0 * delta)
    near_num, near_den = _near_zone_integrals(geom, lam, chi_delta, spec)
    flux_num = _flux_integrals(geom, lam, chi_delta, spec)
    far_den, far_num_ee = _far_direct_integrals(geom, lam, chi_delta, spec)
    num = near_num + flux_num
    if lam != 1.0:
        num = num + IntegralResult((1.0 - lam) ** 2 * far_num_ee.value,
                                   (1.0 - lam) ** 2 * far_num_ee.error_estimate,
                                   far_num_ee.evaluations, far_num_ee.converged)
    den = near_den + far_den
    return _quotient_from(num, den)


# ----------------------------------------------------------------------------
# the path
# ----------------------------------------------------------------------------

def evaluate_quotient(config: PathConfig, desc: TestFunctionDescriptor,
                      spec: QuadratureSpec | None = None):
    """Quotient of one descriptor on the football (or its flat-cone variant)."""
    if spec is None:
        spec = config.spec()
    if desc.variant in ("DOUBLE", "SINGLE"):
        t = 0.0 if desc.variant == "SINGLE" else desc.t
        return quotient_double(desc.epsilon, t, config.delta, spec)
    if desc.variant == "GLUED":
        return quotient_glued(desc.epsilon, desc.t, desc.tau, spec,
                              delta=config.delta)
    if desc.variant == "INTERP":
        return quotient_interp(desc.epsilon, desc.lam, spec,
                               t=desc.t, tau=desc.tau, delta=config.delta,
                               alpha=config.alpha, omega=config.omega)
    raise ValueError(f"unknown variant {desc.variant!r}")


def _leg_descriptor(config: PathConfig, mu: float) -> TestFunctionDescriptor:
    eps = config.epsilon
    te = eps ** config.alpha
    taue = eps ** config.omega
    if mu <= 1.0:
        return TestFunctionDescriptor("DOUBLE", eps, t=mu * te, pole=1)
    if mu <= 2.0:
        return TestFunctionDescriptor("INTERP", eps, t=te, tau=taue,
                                      lam=mu - 1.0, pole=1)
    if mu < 3.0:
        t = config.t_of_mu(mu)
        return TestFunctionDescriptor("GLUED", eps, t=t,
                                      tau=config.tau_of_t(t), pole=1)
    if mu <= 4.0:
        return TestFunctionDescriptor("INTERP", eps, t=te, tau=taue,
                                      lam=4.0 - mu, pole=2)
    return TestFunctionDescriptor("DOUBLE", eps, t=(5.0 - mu) * te, pole=2)


def build_path(config: PathConfig, mu_grid=None) -> PathProfile:
    """Assemble the five legs and evaluate Q on the mu grid in [0, 5]."""
    if mu_grid is None:
        mu_grid = np.linspace(0.0, 5.0, config.mu_points)
    mu_grid = np.asarray(mu_grid, dtype=float)
    spec = config.spec()
    # the bubble legs sit far below the critical level, so their quadrature
    # budget can be much looser than the middle leg's, whose margin is the
    # path's smallest
    loose = spec.scaled(30.0)
    Q = np.empty(len(mu_grid))
    E = np.empty(len(mu_grid))
    legs = []
    descs = []
    for i, mu in enumerate(mu_grid):
        desc = _leg_descriptor(config, float(mu))
        d_eval = desc
        if desc.pole == 2:
            # the two charts are isometric; evaluate in the first chart with
            # the mirrored parameter
            d_eval = TestFunctionDescriptor(desc.variant, desc.epsilon,
                                            t=desc.t, tau=desc.tau,
                                            lam=desc.lam, pole=1)
        if d_eval.variant == "GLUED" and d_eval.t > config.pole_distance / 2.0:
            d_eval = TestFunctionDescriptor(
                "GLUED", d_eval.epsilon, t=config.pole_distance - d_eval.t,
                tau=d_eval.tau, pole=1)
        try:
            use = spec if d_eval.variant == "GLUED" else loose
            q, e = evaluate_quotient(config, d_eval, use)
        except Exception as exc:
            raise RuntimeError(f"leg evaluation failed at mu={mu}: {exc}") from exc
        Q[i] = q
        E[i] = e
        legs.append(d_eval.variant)
        descs.append(desc)
    return PathProfile(config=config, mu=mu_grid, Q=Q, Q_err=E, legs=legs,
                       descriptors=descs)


# ----------------------------------------------------------------------------
# expansion-constant fits
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionFit:
    leg: str
    A_hat: float
    correction: float
    exponent_free: float
    residual: float
    eps_sequence: np.ndarray
    Q_values: np.ndarray


def fit_expansion_A(eps_sequence, leg: str = "DOUBLE", lam: float = 0.5,
                    alpha: float = 0.6, omega: float = 0.7,
                    delta: float = 0.025, spec: QuadratureSpec | None = None) -> ExpansionFit:
    """Fit Q = 6 S4 - A_hat eps^{2(1-alpha)} - C eps^{2 alpha ...} on a leg.

    The two-term model absorbs the next allowed order eps^{4-4 omega}; the
    free exponent is refit separately from the leading behavior.
    """
    if spec is None:
        spec = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-13)
    k = sobolev_constants()
    eps_sequence = np.asarray(sorted(eps_sequence, reverse=True), dtype=float)
    Q = np.empty(len(eps_sequence))
    for i, eps in enumerate(eps_sequence):
        t = eps ** alpha
        tau = eps ** omega
        if leg == "DOUBLE":
            q, _ = quotient_double(eps, t, delta, spec)
        elif leg == "GLUED":
            q, _ = quotient_glued(eps, t, tau, spec, delta=delta)
        elif leg == "INTERP":
            q, _ = quotient_interp(eps, lam, spec, t=t, tau=tau, delta=delta,
                                   alpha=alpha, omega=omega)
        else:
            raise ValueError(f"unknown leg {leg!r}")
        Q[i] = q
    gap = 6.0 * k.S4 - Q
    # subleading orders the expansions themselves produce: the cutoff tail /
    # metric terms at eps^{2 alpha} (coinciding with eps^{4 - 4 omega} for the
    # default exponents) and the second bracket order eps^{4(1 - alpha)}
    powers = [2.0 * (1.0 - alpha)]
    for p in (min(2.0 * alpha, 4.0 - 4.0 * omega), 4.0 * (1.0 - alpha)):
        if all(abs(p - q) > 1e-12 for q in powers):
            powers.append(p)
    design = np.stack([eps_sequence ** p for p in powers], axis=1)
    coef, *_ = np.linalg.lstsq(design, gap, rcond=None)
    resid = float(np.sqrt(np.mean((gap - design @ coef) ** 2)))
    # free-exponent probe on the leading behavior
    slope, _ = np.polyfit(np.log(eps_sequence), np.log(gap), 1)
    return ExpansionFit(leg=leg, A_hat=float(coef[0]), correction=float(coef[1]),
                        exponent_free=float(slope), residual=resid,
                        eps_sequence=eps_sequence, Q_values=Q)
