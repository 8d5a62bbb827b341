"""Functions, tensor families and the change-of-gauge flow on the link S^3.

Link functions are ambient polynomials restricted to the unit sphere; their
intrinsic gradient and Hessian come from the exact relations

    grad_S f(z) = P_z grad F(z),            P_z = I - z z^T,
    Hess_S f(z)(u, v) = Hess F(z)(u, v) - (z . grad F(z)) (u . v),

valid for tangent u, v (the second from differentiating F along great
circles).  Symmetric 2-tensors on the link are ambient 4x4 matrix fields
acting on tangent vectors.

The gauge flow ``psi_s`` is generated by grad f / 2 and the pulled-back
cone metric is assembled literally from the differential of the embedding
alpha(s, z) = (s - s^2 f(z)/2, psi_s(z)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "LinkFunction",
    "LinkTensorFamily",
    "link_flow",
    "flow_differential",
    "alpha_pullback",
    "pulled_link_tensor",
    "verify_first_order_identity",
    "tangent_frame",
    "sphere_points",
]

_FLOW_RTOL = 1e-12
_FLOW_ATOL = 1e-14


@dataclass(frozen=True)
class LinkFunction:
    """Smooth function on S^3 given by an ambient polynomial with closed-form
    gradient and Hessian."""

    value: object    # z (4,) -> float
    grad: object     # z (4,) -> (4,) ambient gradient
    hess: object     # z (4,) -> (4,4) ambient Hessian

    @staticmethod
    def constant(k: float) -> "LinkFunction":
        return LinkFunction(lambda z: k,
                            lambda z: np.zeros(4),
                            lambda z: np.zeros((4, 4)))

    @staticmethod
    def linear(a) -> "LinkFunction":
        a = np.asarray(a, dtype=float)
        return LinkFunction(lambda z: float(a @ z),
                            lambda z: a.copy(),
                            lambda z: np.zeros((4, 4)))

    @staticmethod
    def quadratic(Q) -> "LinkFunction":
        """f(z) = z^T Q z; antipodally even, so admissible on RP^3."""
        Q = 0.5 * (np.asarray(Q, dtype=float) + np.asarray(Q, dtype=float).T)
        return LinkFunction(lambda z: float(z @ Q @ z),
                            lambda z: 2.0 * Q @ z,
                            lambda z: 2.0 * Q.copy())

    def __add__(self, other: "LinkFunction") -> "LinkFunction":
        return LinkFunction(lambda z: self.value(z) + other.value(z),
                            lambda z: self.grad(z) + other.grad(z),
                            lambda z: self.hess(z) + other.hess(z))

    def sup_bound(self, n: int = 400, seed: int = 0) -> float:
        pts = sphere_points(n, seed)
        return float(max(abs(self.value(z)) for z in pts))

    def sphere_gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        g = np.asarray(self.grad(z))
        return g - (z @ g) * z

    def sphere_hessian(self, z, u, v) -> float:
        z = np.asarray(z, dtype=float)
        return float(u @ np.asarray(self.hess(z)) @ v
                     - (z @ np.asarray(self.grad(z))) * (u @ v))

    def is_even(self, n: int = 50, seed: int = 1, tol: float = 1e-12) -> bool:
        return all(abs(self.value(z) - self.value(-z)) <= tol
                   for z in sphere_points(n, seed))


@dataclass(frozen=True)
class LinkTensorFamily:
    """s-family h(s) of symmetric 2-tensors on the link.

    ``at(s, z)`` returns the ambient 4x4 matrix whose restriction to T_z S^3
    is h(s); ``prime0(z)`` is h'(0) in the same representation.  h(0) must be
    the round metric (the identity on tangent vectors).
    """

    at: object       # (s, z) -> (4,4)
    prime0: object   # z -> (4,4)

    @staticmethod
    def round() -> "LinkTensorFamily":
        return LinkTensorFamily(lambda s, z: np.eye(4),
                                lambda z: np.zeros((4, 4)))

    @staticmethod
    def conformal(c, cprime0: float) -> "LinkTensorFamily":
        """h(s) = c(s) h0 with c(0) = 1, e.g. c(s) = sin(s)^2/s^2."""
        return LinkTensorFamily(lambda s, z: c(s) * np.eye(4),
                                lambda z: cprime0 * np.eye(4))

    @staticmethod
    def linear_perturbation(k) -> "LinkTensorFamily":
        """h(s) = h0 + s * k(z) for an ambient matrix field k."""
        return LinkTensorFamily(lambda s, z: np.eye(4) + s * np.asarray(k(z)),
                                lambda z: np.asarray(k(z)))

    @staticmethod
    def gauge_killing(f: LinkFunction) -> "LinkTensorFamily":
        """The family with h'(0) = -(Hess f + f h0): the orbifold gauge of the
        conformal change 1 + 2 s f kills its first-order term."""

        def k(z):
            z = np.asarray(z, dtype=float)
            hf = np.asarray(f.hess(z))
            gf = np.asarray(f.grad(z))
            # ambient representation of the sphere Hessian: P (Hess F) P - (z.grad F) P
            P = np.eye(4) - np.outer(z, z)
            sphere_hess = P @ hf @ P - (z @ gf) * P
            return -(sphere_hess + f.value(z) * P)

        return LinkTensorFamily(lambda s, z: np.eye(4) + s * k(z), k)


def sphere_points(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 4))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def tangent_frame(z) -> np.ndarray:
    """Orthonormal basis (3,4) of T_z S^3 by Gram-Schmidt against z."""
    z = np.asarray(z, dtype=float)
    basis = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        v = e - (e @ z) * z
        for b in basis:
            v = v - (v @ b) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == 3:
            break
    return np.array(basis)


def link_flow(f: LinkFunction, s: float, points, rtol: float = _FLOW_RTOL):
    """Flow of grad f / 2 on the round S^3 from time 0 to s (s may be < 0).

    Integrates in ambient coordinates; the field is tangent so the sphere is
    invariant, and the result is renormalized defensively.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    def rhs(t, y):
        zs = y.reshape(-1, 4)
        out = np.empty_like(zs)
        for i, z in enumerate(zs):
            out[i] = 0.5 * f.sphere_gradient(z / np.linalg.norm(z))
        return out.ravel()

    if s == 0.0:
        flowed = pts.copy()
    else:
        sol = solve_ivp(rhs, (0.0, s), pts.ravel(), rtol=rtol, atol=_FLOW_ATOL,
                        method="RK45", dense_output=False)
        if not sol.success:
            raise RuntimeError(f"link flow integration failed: {sol.message}")
        flowed = sol.y[:, -1].reshape(-1, 4)
    flowed /= np.linalg.norm(flowed, axis=1, keepdims=True)
    return flowed if np.asarray(points).ndim > 1 else flowed[0]


def flow_differential(f: LinkFunction, s: float, z, u, h: float = 1e-6):
    """d(psi_s)_z(u) by a centered difference of flows of geodesic-displaced
    starting points; returned tangent at psi_s(z)."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    zp = math.cos(h) * z + math.sin(h) * u
    zm = math.cos(h) * z - math.sin(h) * u
    fp, fm, f0 = link_flow(f, s, np.array([zp, zm, z]))
    d = (fp - fm) / (2.0 * h)
    return d - (d @ f0) * f0


def pulled_link_tensor(f: LinkFunction, family: LinkTensorFamily, s: float,
                       z, frame=None) -> np.ndarray:
    """(iota_s^* H)(z) on a tangent frame: the explicit form

        (1 + 2 s f) [ (s^2/4) df x df + (1 - s f/2)^2 psi_s^*( h(alpha^1(s,.)) ) ]
    """
    z = np.asarray(z, dtype=float)
    if frame is None:
        frame = tangent_frame(z)
    fz = f.value(z)
    alpha1 = s - 0.5 * s * s * fz
    flowed = link_flow(f, s, z)
    dpsi = np.array([flow_differential(f, s, z, u) for u in frame])
    hmat = np.asarray(family.at(alpha1, flowed))
    df = np.array([f.sphere_gradient(z) @ u for u in frame])
    pulled = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            pulled[a, b] = dpsi[a] @ hmat @ dpsi[b]
    out = (1.0 + 2.0 * s * fz) * (0.25 * s * s * np.outer(df, df)
                                  + (1.0 - 0.5 * s * fz) ** 2 * pulled)
    return out


def alpha_pullback(f: LinkFunction, family: LinkTensorFamily, s: float, z,
                   frame=None) -> dict:
    """Samples of gbar = (1 + 2 s f) alpha^*(dr^2 + r^2 h(r)) at (s, z).

    Returns components on (d_s, frame): 'ss', 'sz' (3,), 'zz' (3,3).
    """
    z = np.asarray(z, dtype=float)
    if frame is None:
        frame = tangent_frame(z)
    fz = f.value(z)
    alpha1 = s - 0.5 * s * s * fz
    flowed = link_flow(f, s, z)
    gradf_flow = f.sphere_gradient(flowed)
    dpsi = np.array([flow_differential(f, s, z, u) for u in frame])
    hmat = np.asarray(family.at(alpha1, flowed))
    df = np.array([f.sphere_gradient(z) @ u for u in frame])
    conf = 1.0 + 2.0 * s * fz
    # alpha^*(dr^2) components
    ss_dr = (1.0 - s * fz) ** 2
    sz_dr = -(1.0 - s * fz) * 0.5 * s * s * df
    zz_dr = 0.25 * s ** 4 * np.outer(df, df)
    # alpha^*(r^2 h(r)) components through d(alpha^2)
    half_grad = 0.5 * gradf_flow
    ss_h = alpha1 ** 2 * float(half_grad @ hmat @ half_grad)
    sz_h = alpha1 ** 2 * np.array([half_grad @ hmat @ dpsi[b] for b in range(3)])
    zz_h = alpha1 ** 2 * np.array([[dpsi[a] @ hmat @ dpsi[b] for b in range(3)]
                                   for a in range(3)])
    return {
        "ss": conf * (ss_dr + ss_h),
        "sz": conf * (sz_dr + sz_h),
        "zz": conf * (zz_dr + zz_h),
        "frame": frame,
    }


def verify_first_order_identity(f: LinkFunction, family: LinkTensorFamily,
                                h_fd: float, points=None, seed: int = 3) -> float:
    """Sup-norm residual of  d/ds (iota_s^* H) |_0 = h'(0) + Hess f + f h0
    over sample points, with the s-derivative by a central difference."""
    if points is None:
        points = sphere_points(12, seed)
    worst = 0.0
    for z in np.atleast_2d(points):
        frame = tangent_frame(z)
        hp = pulled_link_tensor(f, family, h_fd, z, frame)
        hm = pulled_link_tensor(f, family, -h_fd, z, frame)
        lhs = (hp - hm) / (2.0 * h_fd)
        rhs = np.empty((3, 3))
        k0 = np.asarray(family.prime0(z))
        for a in range(3):
            for b in range(3):
                rhs[a, b] = (frame[a] @ k0 @ frame[b]
                             + f.sphere_hessian(z, frame[a], frame[b])
                             + f.value(z) * (frame[a] @ frame[b]))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
