"""Adaptive quadrature primitives specialized to the symmetry reductions the
bubble and Green-function integrals admit.

All engines are driven by nested Gauss-Kronrod (G7, K15) rule pairs: the
15-point Kronrod value is the estimate, |K15 - G7| the local error, and
subdivision always attacks the largest local errors first.  Improper axial and
radial integrals are compactified through ``x = tan(theta)`` so no truncation
radius ever has to be tuned.  Integrands concentrated at a known "bubble core"
declare it through grading entries ``(center, scale)``; the engine then seeds
the partition with dyadic annuli down to ``scale/4`` around each center.

Engines:

* ``integrate_radial``      -- 1-d integrals on [a, R] or [a, oo)
* ``integrate_biradial``    -- the (zeta, rho) slab reduction of axially
  symmetric R^4 integrals, weight 4*pi*rho^2
* ``integrate_axisym_sphere`` -- the (theta, psi) reduction of axisymmetric
  integrals on round-sphere charts, weight 4*pi*sin(psi)^2 * w(theta)
* ``integrate_ball4``       -- tensor radial x S^3 rule on a Euclidean 4-ball
* ``integrate_sphere3``     -- surface integrals on round 3-spheres

Results are deterministic for a fixed (spec, integrand): boxes are split in a
fixed order and final sums run over boxes sorted by coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "QuadratureError",
    "integrate_radial",
    "integrate_biradial",
    "integrate_axisym_sphere",
    "integrate_ball4",
    "integrate_sphere3",
    "integrate_rect2d",
    "FrozenMesh2D",
    "build_frozen_mesh",
]

# 15-point Kronrod extension of 7-point Gauss on [-1, 1] (QUADPACK values).
_XGK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
# Gauss-7 nodes are the odd-indexed Kronrod nodes.
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])

_HALF_PI = 0.5 * math.pi


class QuadratureError(RuntimeError):
    """Raised when a caller demands a converged result and did not get one."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances, budget and grading hints for one integral.

    ``grading`` holds ``(center, scale)`` pairs; ``center`` is a float for 1-d
    engines or a 2-vector for the 2-d engines.  The partition is seeded with
    dyadic breakpoints at ``center +- scale/4 * 2^k``.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 4000
    grading: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def with_grading(self, *grading) -> "QuadratureSpec":
        return replace(self, grading=tuple(grading))

    def scaled(self, factor: float) -> "QuadratureSpec":
        return replace(self, rel_tol=self.rel_tol * factor,
                       abs_tol=self.abs_tol * factor)

    def tolerance_for(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def expect(self, what: str = "integral") -> "IntegralResult":
        """Return self, raising if the error contract was not met."""
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge: value={self.value!r} "
                f"error={self.error_estimate!r} after {self.evaluations} evaluations")
        return self

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(self.value + other.value,
                              self.error_estimate + other.error_estimate,
                              self.evaluations + other.evaluations,
                              self.converged and other.converged)


# ----------------------------------------------------------------------------
# breakpoint seeding
# ----------------------------------------------------------------------------

def _dyadic_breaks(center: float, scale: float, lo: float, hi: float) -> list:
    """Dyadic annulus breakpoints around ``center`` clipped to (lo, hi)."""
    if not lo < hi:
        return []
    span = hi - lo
    breaks = []
    if lo < center < hi:
        breaks.append(center)
    h = max(scale, 1e-300) / 4.0
    while h < 2.0 * span:
        for b in (center - h, center + h):
            if lo < b < hi:
                breaks.append(b)
        h *= 2.0
    return breaks


def _seed_breaks(lo, hi, centers_scales, transform=None):
    """Sorted unique breakpoints of [lo, hi] including graded seeds.

    ``transform`` maps original coordinates to the working (compactified)
    variable; seeds are generated in original coordinates.
    """
    pts = []
    for c, s in centers_scales:
        pts.extend(_dyadic_breaks(c, s, lo, hi))
    if transform is not None:
        pts = [transform(p) for p in pts]
        lo, hi = transform(lo), transform(hi)
    pts.extend([lo, hi])
    arr = np.unique(np.asarray(pts, dtype=float))
    arr = arr[(arr >= lo) & (arr <= hi)]
    if arr[0] != lo:
        arr = np.concatenate([[lo], arr])
    if arr[-1] != hi:
        arr = np.concatenate([arr, [hi]])
    return arr


# ----------------------------------------------------------------------------
# 1-d engine
# ----------------------------------------------------------------------------

def _panels_1d(g, a, b):
    """Vectorized K15/G7 panel evaluation on intervals a[i], b[i]."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * _XGK[None, :]
    fx = g(x.ravel()).reshape(x.shape)
    k = half * (fx @ _WGK)
    gg = half * (fx[:, _GAUSS_IDX] @ _WG)
    return k, np.abs(k - gg), fx.size


def _adapt_1d(g, breaks, spec: QuadratureSpec) -> IntegralResult:
    a = breaks[:-1].copy()
    b = breaks[1:].copy()
    vals, errs, n = _panels_1d(g, a, b)
    evals = n
    splits = 0
    converged = False
    for _ in range(10_000):
        total = _stable_sum(vals, a)
        toterr = float(np.sum(errs))
        if toterr <= spec.tolerance_for(total):
            converged = True
            break
        if splits >= spec.max_subdivisions:
            break
        # split the boxes carrying the top half of the total error
        order = np.argsort(errs)[::-1]
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, 0.5 * toterr)) + 1
        k = min(k, spec.max_subdivisions - splits)
        idx = order[:k]
        splits += k
        mids = 0.5 * (a[idx] + b[idx])
        tiny = mids == a[idx]  # interval at machine resolution
        if np.all(tiny):
            break
        keep = np.ones(len(a), bool)
        keep[idx[~tiny]] = False
        na = np.concatenate([a[idx[~tiny]], mids[~tiny]])
        nb = np.concatenate([mids[~tiny], b[idx[~tiny]]])
        nv, ne, n = _panels_1d(g, na, nb)
        evals += n
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
    total = _stable_sum(vals, a)
    return IntegralResult(total, float(np.sum(errs)), evals, converged)


def _stable_sum(vals, keys):
    order = np.argsort(keys, kind="stable")
    return float(np.sum(vals[order]))


def integrate_radial(f, interval, spec: QuadratureSpec) -> IntegralResult:
    """Adaptive integral of ``f`` over [a, R] or [a, oo).

    Unbounded intervals are compactified by ``r = tan(theta)`` before the
    adaptive pass, so tails are resolved without a truncation radius.
    ``f`` must accept numpy arrays.
    """
    a, b = interval
    centers = [(c, s) for c, s in spec.grading]
    if math.isinf(b):
        lo = math.atan(a)

        def g(theta):
            t = np.tan(theta)
            return f(t) * (1.0 + t * t)

        breaks = _seed_breaks(a, 1e18, centers, transform=math.atan)
        breaks = np.clip(breaks, lo, _HALF_PI * (1.0 - 1e-14))
        breaks = np.unique(np.concatenate([[lo], breaks, [_HALF_PI * (1.0 - 1e-14)]]))
        return _adapt_1d(g, breaks, spec)
    breaks = _seed_breaks(a, b, centers)
    return _adapt_1d(lambda x: np.asarray(f(x), dtype=float), breaks, spec)


# ----------------------------------------------------------------------------
# 2-d engine
# ----------------------------------------------------------------------------

class _Boxes:
    """Flat arrays describing the current rectangle partition."""

    __slots__ = ("ax", "bx", "ay", "by", "val", "err")

    def __init__(self, ax, bx, ay, by, val, err):
        self.ax, self.bx, self.ay, self.by = ax, bx, ay, by
        self.val, self.err = val, err

    def total(self):
        order = np.lexsort((self.ay, self.ax))
        return float(np.sum(self.val[order])), float(np.sum(self.err))


def _panels_2d(g, ax, bx, ay, by):
    midx = 0.5 * (ax + bx)
    hx = 0.5 * (bx - ax)
    midy = 0.5 * (ay + by)
    hy = 0.5 * (by - ay)
    # nodes: (nbox, 15) each direction -> (nbox, 15, 15) tensor grid
    X = midx[:, None, None] + hx[:, None, None] * _XGK[None, :, None]
    Y = midy[:, None, None] + hy[:, None, None] * _XGK[None, None, :]
    Xf = np.broadcast_to(X, (len(ax), 15, 15))
    Yf = np.broadcast_to(Y, (len(ax), 15, 15))
    F = g(Xf.ravel(), Yf.ravel()).reshape(len(ax), 15, 15)
    area = hx * hy
    k = area * np.einsum("i,nij,j->n", _WGK, F, _WGK)
    sub = F[:, _GAUSS_IDX][:, :, _GAUSS_IDX]
    gg = area * np.einsum("i,nij,j->n", _WG, sub, _WG)
    return k, np.abs(k - gg), F.size


def _adapt_2d(g, xbreaks, ybreaks, spec: QuadratureSpec):
    ax, ay = np.meshgrid(xbreaks[:-1], ybreaks[:-1], indexing="ij")
    bx, by = np.meshgrid(xbreaks[1:], ybreaks[1:], indexing="ij")
    ax, bx, ay, by = (v.ravel().copy() for v in (ax, bx, ay, by))
    vals, errs, n = _panels_2d(g, ax, bx, ay, by)
    evals = n
    splits = 0
    converged = False
    for _ in range(10_000):
        boxes = _Boxes(ax, bx, ay, by, vals, errs)
        total, toterr = boxes.total()
        if toterr <= spec.tolerance_for(total):
            converged = True
            break
        if splits >= spec.max_subdivisions:
            break
        order = np.argsort(errs)[::-1]
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, 0.5 * toterr)) + 1
        k = min(k, spec.max_subdivisions - splits, max(1, len(errs)))
        idx = order[:k]
        splits += k
        wx = bx[idx] - ax[idx]
        wy = by[idx] - ay[idx]
        splitx = wx >= wy
        fine = np.minimum(wx, wy) < 1e-15 * (np.abs(ax[idx]) + np.abs(ay[idx]) + 1.0)
        if np.all(fine):
            break
        idx = idx[~fine]
        splitx = splitx[~fine]
        keep = np.ones(len(ax), bool)
        keep[idx] = False
        midx = 0.5 * (ax[idx] + bx[idx])
        midy = 0.5 * (ay[idx] + by[idx])
        # children: split along the longer edge of each box
        na = np.concatenate([ax[idx], np.where(splitx, midx, ax[idx])])
        nb = np.concatenate([np.where(splitx, midx, bx[idx]), bx[idx]])
        nc = np.concatenate([ay[idx], np.where(splitx, ay[idx], midy)])
        nd = np.concatenate([np.where(splitx, by[idx], midy), by[idx]])
        nv, ne, n = _panels_2d(g, na, nb, nc, nd)
        evals += n
        ax = np.concatenate([ax[keep], na])
        bx = np.concatenate([bx[keep], nb])
        ay = np.concatenate([ay[keep], nc])
        by = np.concatenate([by[keep], nd])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
    total, toterr = _Boxes(ax, bx, ay, by, vals, errs).total()
    mesh = FrozenMesh2D(ax.copy(), bx.copy(), ay.copy(), by.copy())
    return IntegralResult(total, toterr, evals, converged), mesh


@dataclass
class FrozenMesh2D:
    """A frozen rectangle partition in the engine's working coordinates.

    Re-evaluating nearby integrands on one frozen mesh makes their quadrature
    errors vary smoothly with parameters, so finite differences of integrals
    stay clean.
    """

    ax: np.ndarray
    bx: np.ndarray
    ay: np.ndarray
    by: np.ndarray
    weight: object = None  # working-coordinate integrand wrapper factory

    def evaluate(self, F) -> IntegralResult:
        g = self.weight(F)
        vals, errs, n = _panels_2d(g, self.ax, self.bx, self.ay, self.by)
        total, toterr = _Boxes(self.ax, self.bx, self.ay, self.by, vals, errs).total()
        return IntegralResult(total, toterr, n, True)


def _biradial_wrapper(F):
    """Map F(zeta, rho) to the compactified working coordinates."""

    def g(u, v):
        zeta = np.tan(u)
        rho = np.tan(v)
        w = (1.0 + zeta * zeta) * (1.0 + rho * rho)
        return F(zeta, rho) * (4.0 * math.pi) * rho * rho * w

    return g


def integrate_biradial(F, spec: QuadratureSpec,
                       zeta_domain=(-math.inf, math.inf),
                       rho_domain=(0.0, math.inf)) -> IntegralResult:
    """Integral of an axially symmetric function over R^4.

    ``F(zeta, rho)`` is the profile in the axial coordinate ``zeta`` and the
    transverse radius ``rho``; the engine supplies the exact reduction weight
    ``4*pi*rho^2`` and compactifies unbounded directions by ``tan``.  Grading
    centers are (zeta, rho) pairs in original coordinates.
    """
    res, _ = _biradial_with_mesh(F, spec, zeta_domain, rho_domain)
    return res


def _biradial_with_mesh(F, spec, zeta_domain=(-math.inf, math.inf),
                        rho_domain=(0.0, math.inf)):
    zlo, zhi = zeta_domain
    rlo, rhi = rho_domain
    zcenters = [(c[0], s) for c, s in spec.grading]
    rcenters = [(c[1], s) for c, s in spec.grading]

    def tr(x):
        return math.atan(x)

    zb = _seed_breaks(max(zlo, -1e18), min(zhi, 1e18), zcenters, transform=tr)
    rb = _seed_breaks(max(rlo, 0.0), min(rhi, 1e18), rcenters, transform=tr)
    cap = _HALF_PI * (1.0 - 1e-14)
    zb = np.unique(np.clip(zb, -cap, cap))
    rb = np.unique(np.clip(rb, 0.0, cap))
    res, mesh = _adapt_2d(_biradial_wrapper(F), zb, rb, spec)
    mesh.weight = _biradial_wrapper
    return res, mesh


def build_frozen_mesh(F, spec, zeta_domain=(-math.inf, math.inf),
                      rho_domain=(0.0, math.inf)) -> FrozenMesh2D:
    """Adapt a bi-radial mesh to ``F`` and freeze it for re-evaluation."""
    res, mesh = _biradial_with_mesh(F, spec, zeta_domain, rho_domain)
    res.expect("frozen-mesh adaptation")
    return mesh


def integrate_rect2d(F, spec: QuadratureSpec, x_domain, y_domain) -> IntegralResult:
    """Plain adaptive 2-d integral of F(x, y) over a rectangle.

    All weights and coordinate mappings are the caller's business; grading
    centers are (x, y) pairs in the rectangle's own coordinates.
    """
    xcenters = [(c[0], s) for c, s in spec.grading]
    ycenters = [(c[1], s) for c, s in spec.grading]
    xb = _seed_breaks(x_domain[0], x_domain[1], xcenters)
    yb = _seed_breaks(y_domain[0], y_domain[1], ycenters)
    res, _ = _adapt_2d(lambda x, y: np.asarray(F(x, y), dtype=float), xb, yb, spec)
    return res


def _axisym_sphere_wrapper(radial_weight):
    def wrap(F):
        def g(theta, psi):
            s = np.sin(psi)
            return F(theta, psi) * (4.0 * math.pi) * s * s * radial_weight(theta)

        return g

    return wrap


def integrate_axisym_sphere(F, spec: QuadratureSpec,
                            theta_domain=(0.0, math.pi),
                            radial_weight=None,
                            psi_domain=(0.0, math.pi)) -> IntegralResult:
    """Integral over a round-sphere chart of an axisymmetric integrand.

    Computes ``int F(theta, psi) * w(theta) * 4*pi*sin(psi)^2 dtheta dpsi``
    where ``theta`` is the radial chart coordinate, ``psi`` the zonal angle of
    the S^3 factor, and ``w`` defaults to ``sin(theta)^3`` (the round-S^4
    volume factor).  Grading centers are (theta, psi) pairs.
    """
    if radial_weight is None:
        radial_weight = lambda th: np.sin(th) ** 3
    tcenters = [(c[0], s) for c, s in spec.grading]
    pcenters = [(c[1], s) for c, s in spec.grading]
    tb = _seed_breaks(theta_domain[0], theta_domain[1], tcenters)
    pb = _seed_breaks(psi_domain[0], psi_domain[1], pcenters)
    res, _ = _adapt_2d(_axisym_sphere_wrapper(radial_weight)(F), tb, pb, spec)
    return res


# ----------------------------------------------------------------------------
# 4-ball and 3-sphere rules
# ----------------------------------------------------------------------------

def _sphere3_nodes(n1: int, n2: int, n3: int):
    """Product rule on the unit S^3: nodes (m, 4) and weights summing to 2*pi^2."""
    t1, w1 = np.polynomial.legendre.leggauss(n1)  # phi1 in [0, pi], weight sin^2
    phi1 = 0.5 * math.pi * (t1 + 1.0)
    w1 = 0.5 * math.pi * w1 * np.sin(phi1) ** 2
    t2, w2 = np.polynomial.legendre.leggauss(n2)  # cos(phi2) in [-1, 1]
    phi2 = np.arccos(t2)
    phi3 = 2.0 * math.pi * (np.arange(n3) + 0.5) / n3  # periodic: midpoint rule
    w3 = np.full(n3, 2.0 * math.pi / n3)
    P1, P2, P3 = np.meshgrid(phi1, phi2, phi3, indexing="ij")
    W = (w1[:, None, None] * w2[None, :, None] * w3[None, None, :]).ravel()
    s1, c1 = np.sin(P1).ravel(), np.cos(P1).ravel()
    s2, c2 = np.sin(P2).ravel(), np.cos(P2).ravel()
    s3, c3 = np.sin(P3).ravel(), np.cos(P3).ravel()
    nodes = np.stack([c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3], axis=1)
    return nodes, W


def integrate_sphere3(f, radius: float, center, spec: QuadratureSpec) -> IntegralResult:
    """Surface integral of ``f`` over the round 3-sphere of given radius.

    ``f`` takes an (m, 4) array of points.  The rule order doubles until two
    consecutive estimates agree within tolerance; exact for constants
    (area 2*pi^2*radius^3).
    """
    if radius <= 0.0:
        raise ValueError("sphere radius must be positive")
    center = np.asarray(center, dtype=float)
    prev = None
    evals = 0
    n = 8
    for _ in range(8):
        nodes, w = _sphere3_nodes(n, n, 2 * n)
        pts = center[None, :] + radius * nodes
        vals = np.asarray(f(pts), dtype=float)
        evals += len(w)
        est = float(np.sum(vals * w)) * radius ** 3
        if prev is not None:
            err = abs(est - prev)
            if err <= spec.tolerance_for(est):
                return IntegralResult(est, err, evals, True)
        prev = est
        n *= 2
    return IntegralResult(prev, abs(est - prev), evals, False)


def integrate_ball4(f, radius: float, spec: QuadratureSpec,
                    angular_order: int = 12) -> IntegralResult:
    """Integral of ``f`` over the Euclidean 4-ball of given radius.

    Tensor product of an adaptive radial rule with a fixed-order S^3 product
    rule; the angular truncation error is estimated by doubling the angular
    order at a probe radius and folded into the reported error.
    """
    if radius <= 0.0:
        raise ValueError("ball radius must be positive")
    nodes, w = _sphere3_nodes(angular_order, angular_order, 2 * angular_order)
    nodes2, w2 = _sphere3_nodes(2 * angular_order, 2 * angular_order, 4 * angular_order)
    state = {"evals": 0, "angerr": 0.0}

    def mean_f(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(len(r))
        for i, ri in enumerate(r):
            pts = ri * nodes
            out[i] = float(np.sum(np.asarray(f(pts), dtype=float) * w))
            state["evals"] += len(w)
        return out

    # angular truncation probe at a representative radius
    probe = 0.5 * radius
    m1 = float(np.sum(np.asarray(f(probe * nodes), dtype=float) * w))
    m2 = float(np.sum(np.asarray(f(probe * nodes2), dtype=float) * w2))
    state["angerr"] = abs(m1 - m2) * radius ** 4 / 4.0
    state["evals"] += len(w) + len(w2)

    res = integrate_radial(lambda r: mean_f(r) * r ** 3, (0.0, radius), spec)
    err = res.error_estimate + state["angerr"]
    return IntegralResult(res.value, err, res.evaluations + state["evals"], res.converged)
