"""Geodesic shooting and geodesic normal coordinates on chart metric fields."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from cyl.geometry.curvature import christoffel
from cyl.geometry.fields import ChartMetricField

__all__ = ["shoot_geodesic", "NormalCoordinates"]

_GEO_RTOL = 1e-10
_GEO_ATOL = 1e-12


def shoot_geodesic(field: ChartMetricField, x0, v0, t_end: float = 1.0,
                   rtol: float = _GEO_RTOL, chart_radius: float = math.inf):
    """Integrate the geodesic equation from (x0, v0) to affine time t_end.

    Returns (x, v) at t_end.  Raises if the geodesic leaves the chart ball of
    the given radius (radius too large for this chart).
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)

    def rhs(t, y):
        x, v = y[:4], y[4:]
        gamma = christoffel(field, x)
        acc = -np.einsum("kij,i,j->k", gamma, v, v)
        return np.concatenate([v, acc])

    def escape(t, y):
        return chart_radius - np.linalg.norm(y[:4])

    escape.terminal = True
    sol = solve_ivp(rhs, (0.0, t_end), np.concatenate([x0, v0]), rtol=rtol,
                    atol=_GEO_ATOL, events=escape if math.isfinite(chart_radius) else None)
    if not sol.success:
        raise RuntimeError(f"geodesic integration failed: {sol.message}")
    if math.isfinite(chart_radius) and sol.t_events and len(sol.t_events[0]):
        raise ValueError("geodesic left the chart: radius too large")
    y = sol.y[:, -1]
    return y[:4], y[4:]


class NormalCoordinates:
    """Geodesic normal coordinates of a field at a basepoint.

    The frame is Gram orthonormalization of the coordinate vectors in g(x0),
    with the first axis along ``direction`` (default: radial toward the cone
    tip at the chart origin).  ``forward(z)`` maps normal coordinates to chart
    points by geodesic shooting; ``inverse`` solves the shooting problem.
    """

    def __init__(self, field: ChartMetricField, basepoint, direction=None,
                 radius: float = math.inf, rtol: float = _GEO_RTOL):
        self.field = field
        self.basepoint = np.asarray(basepoint, dtype=float)
        self.radius = radius
        self.rtol = rtol
        g0 = field.value(self.basepoint)
        if direction is None:
            if np.linalg.norm(self.basepoint) == 0.0:
                direction = np.array([1.0, 0.0, 0.0, 0.0])
            else:
                direction = -self.basepoint
        vecs = [np.asarray(direction, dtype=float)]
        for k in range(4):
            e = np.zeros(4)
            e[k] = 1.0
            vecs.append(e)
        frame = []
        for v in vecs:
            w = v.copy()
            for b in frame:
                w = w - (w @ g0 @ b) * b
            n2 = float(w @ g0 @ w)
            if n2 > 1e-16:
                frame.append(w / math.sqrt(n2))
            if len(frame) == 4:
                break
        self.frame = np.array(frame).T  # columns are g-orthonormal

    def forward(self, z) -> np.ndarray:
        """Chart point of normal coordinates z (|z| = geodesic distance)."""
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z)
        if r == 0.0:
            return self.basepoint.copy()
        v = self.frame @ z
        x, _ = shoot_geodesic(self.field, self.basepoint, v, 1.0,
                              rtol=self.rtol, chart_radius=self.radius)
        return x

    def inverse(self, p, z0=None) -> np.ndarray:
        """Normal coordinates of a chart point by solving the shooting problem."""
        p = np.asarray(p, dtype=float)
        if z0 is None:
            z0 = np.linalg.solve(self.frame, p - self.basepoint)

        res = least_squares(lambda z: self.forward(z) - p, z0,
                            xtol=1e-12, ftol=1e-12, gtol=1e-14)
        if not res.success and np.max(np.abs(res.fun)) > 1e-8:
            raise RuntimeError("normal-coordinate inversion did not converge")
        return res.x

    def exp_jacobian(self, z, h: float = 1e-6) -> np.ndarray:
        """d(forward)/dz by centered differences, J[a, i] = d x_a / d z_i."""
        J = np.empty((4, 4))
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            J[:, i] = (self.forward(z + e) - self.forward(z - e)) / (2.0 * h)
        return J

    def pulled_metric(self, z, h: float = 1e-6) -> np.ndarray:
        """Metric components in normal coordinates at z."""
        J = self.exp_jacobian(z, h)
        g = self.field.value(self.forward(z))
        return J.T @ g @ J

    def certify(self, scale: float, h: float = 1e-4) -> dict:
        """Check g(0) = identity and dg(0) = 0 in normal coordinates.

        ``scale`` sets the probe radius; returns the two defect norms.
        """
        g0 = self.pulled_metric(np.zeros(4), h=min(h, scale / 10.0))
        eye_defect = float(np.max(np.abs(g0 - np.eye(4))))
        worst = 0.0
        for i in range(4):
            e = np.zeros(4)
            e[i] = scale
            gp = self.pulled_metric(e, h=min(h, scale / 10.0))
            gm = self.pulled_metric(-e, h=min(h, scale / 10.0))
            worst = max(worst, float(np.max(np.abs(gp - gm))) / (2.0 * scale))
        return {"metric_at_zero": eye_defect, "first_derivative": worst}

    def volume_density(self, z, h: float = 1e-6) -> float:
        """sqrt(det g) in normal coordinates at z."""
        return float(math.sqrt(np.linalg.det(self.pulled_metric(z, h))))
