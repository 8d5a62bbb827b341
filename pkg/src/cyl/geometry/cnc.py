"""The conformal-normal-coordinate polynomial and smooth cutoff profiles.

Given a curvature snapshot at a basepoint x, the quadratic+cubic polynomial

    fbar(z) = 1/4 sum_i [2 Ric_ii - R/3] (z^i)^2 + sum_{i<j} Ric_ij z^i z^j
            + 1/6 sum_i [d_i Ric_ii - d_i R / 6] (z^i)^3
            + 1/6 sum_{i != k} [d_k Ric_ii + 2 d_i Ric_ik - d_k R / 6] (z^i)^2 z^k
            + 1/3 sum_{i<j<k} (d_k Ric_ij + d_i Ric_kj + d_j Ric_ik) z^i z^j z^k

(in normal coordinates at x) makes gbar = exp(fbar) g satisfy R(x) = 0,
Ric(x) = 0, dR(x) = 0 and the symmetrized dRic(x) = 0.  The attached cutoff
phi_t is a fixed C^2 piecewise-quintic profile with |phi^(k)| <= C/t^k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cyl.geometry.curvature import CurvatureSnapshot, curvature_at
from cyl.geometry.fields import (ChartMetricField, ConformalField,
                                 ForcedFDField)

__all__ = [
    "cutoff_profile",
    "CutoffProfile",
    "CNCFactor",
    "cnc_polynomial",
    "conformal_cnc_field",
    "verify_cnc",
]


@dataclass(frozen=True)
class CutoffProfile:
    """C^2 quintic step: 1 on [0, r1], 0 on [r2, oo)."""

    r1: float
    r2: float

    def _t(self, s):
        return np.clip((np.asarray(s, dtype=float) - self.r1)
                       / (self.r2 - self.r1), 0.0, 1.0)

    def value(self, s):
        t = self._t(s)
        return 1.0 - (10.0 * t ** 3 - 15.0 * t ** 4 + 6.0 * t ** 5)

    def deriv(self, s):
        t = self._t(s)
        inside = (t > 0.0) & (t < 1.0)
        d = -(30.0 * t ** 2 - 60.0 * t ** 3 + 30.0 * t ** 4) / (self.r2 - self.r1)
        return np.where(inside, d, 0.0)

    def deriv2(self, s):
        t = self._t(s)
        inside = (t > 0.0) & (t < 1.0)
        d = -(60.0 * t - 180.0 * t ** 2 + 120.0 * t ** 3) / (self.r2 - self.r1) ** 2
        return np.where(inside, d, 0.0)


def cutoff_profile(t: float, inner: float = 0.25, outer: float = 0.5) -> CutoffProfile:
    """phi_t: 1 for s <= t/4, 0 for s >= t/2."""
    return CutoffProfile(inner * t, outer * t)


@dataclass(frozen=True)
class CNCFactor:
    """Quadratic + cubic conformal factor in normal coordinates at a point."""

    basepoint: np.ndarray
    quad: np.ndarray        # (4,4) symmetric
    cubic: np.ndarray       # (4,4,4) totally symmetric
    cutoff: CutoffProfile

    def polynomial(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.quad @ z + np.einsum("ijk,i,j,k->", self.cubic, z, z, z))

    def poly_grad(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return 2.0 * self.quad @ z + 3.0 * np.einsum("ajk,j,k->a", self.cubic, z, z)

    def poly_hess(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return 2.0 * self.quad + 6.0 * np.einsum("abk,k->ab", self.cubic, z)

    def value(self, z) -> float:
        z = np.asarray(z, dtype=float)
        r = float(np.linalg.norm(z))
        if r >= self.cutoff.r2:
            return 0.0
        return float(self.cutoff.value(r)) * self.polynomial(z)

    def grad(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r = float(np.linalg.norm(z))
        if r <= self.cutoff.r1 or r == 0.0:
            return self.poly_grad(z)
        if r >= self.cutoff.r2:
            return np.zeros(4)
        phi = float(self.cutoff.value(r))
        dphi = float(self.cutoff.deriv(r))
        zhat = z / r
        return dphi * self.polynomial(z) * zhat + phi * self.poly_grad(z)

    def hess(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r = float(np.linalg.norm(z))
        if r <= self.cutoff.r1 or r == 0.0:
            return self.poly_hess(z)
        if r >= self.cutoff.r2:
            return np.zeros((4, 4))
        phi = float(self.cutoff.value(r))
        dphi = float(self.cutoff.deriv(r))
        d2phi = float(self.cutoff.deriv2(r))
        zhat = z / r
        P = self.polynomial(z)
        gP = self.poly_grad(z)
        hr = (np.eye(4) - np.outer(zhat, zhat)) / r
        return (d2phi * P * np.outer(zhat, zhat) + dphi * P * hr
                + dphi * (np.outer(zhat, gP) + np.outer(gP, zhat))
                + phi * self.poly_hess(z))


def cnc_polynomial(snapshot: CurvatureSnapshot, t_cutoff: float) -> CNCFactor:
    """Assemble the conformal factor from a curvature snapshot.

    The snapshot must be expressed in (or rotated to) the normal coordinates
    in which the factor will be used; the construction has no constant or
    linear part by design.
    """
    R = snapshot.R
    ric = snapshot.Ric
    dR = snapshot.dR
    dric = snapshot.dRic  # dric[k, i, j] = nabla_k Ric_ij
    quad = np.zeros((4, 4))
    for i in range(4):
        quad[i, i] = 0.25 * (2.0 * ric[i, i] - R / 3.0)
    for i in range(4):
        for j in range(4):
            if i != j:
                quad[i, j] = 0.5 * ric[i, j]
    cubic = np.zeros((4, 4, 4))
    for i in range(4):
        coeff = (dric[i, i, i] - dR[i] / 6.0) / 6.0
        cubic[i, i, i] = coeff
    for i in range(4):
        for k in range(4):
            if i == k:
                continue
            coeff = (dric[k, i, i] + 2.0 * dric[i, i, k] - dR[k] / 6.0) / 6.0
            # distribute the (z^i)^2 z^k monomial over its 3 index orders
            cubic[i, i, k] += coeff / 3.0
            cubic[i, k, i] += coeff / 3.0
            cubic[k, i, i] += coeff / 3.0
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                coeff = (dric[k, i, j] + dric[i, k, j] + dric[j, i, k]) / 3.0
                for perm in ((i, j, k), (i, k, j), (j, i, k), (j, k, i),
                             (k, i, j), (k, j, i)):
                    cubic[perm] += coeff / 6.0
    return CNCFactor(basepoint=snapshot.point, quad=quad, cubic=cubic,
                     cutoff=cutoff_profile(t_cutoff))


def conformal_cnc_field(normal_field: ChartMetricField,
                        factor: CNCFactor) -> ConformalField:
    """gbar = exp(phi_t * fbar) g on the normal chart at the basepoint."""
    return ConformalField(normal_field, factor.value, factor.grad, factor.hess)


def verify_cnc(normal_field: ChartMetricField, t_cutoff: float,
               h_fd: float = 1e-3) -> dict:
    """Residuals of the conformal-normal-coordinate conditions at the origin
    of a normal chart.

    Builds the factor from the chart's own curvature, forms gbar = e^f g with
    curvature recomputed purely by centered differences of metric values at
    step h_fd, and returns {R, Ric, dR, sym_dRic} magnitudes at the basepoint
    (all should vanish at O(h_fd^2)).
    """
    snap = curvature_at(normal_field, np.zeros(4), h_fd)
    factor = cnc_polynomial(snap, t_cutoff)
    gbar = conformal_cnc_field(normal_field, factor)
    forced = ForcedFDField(gbar, h_fd)
    bar = curvature_at(forced, np.zeros(4), h_fd)
    return {
        "R": abs(bar.R),
        "Ric": float(np.max(np.abs(bar.Ric))),
        "dR": float(np.max(np.abs(bar.dR))),
        "sym_dRic": float(np.max(np.abs(bar.sym_dric()))),
        "factor": factor,
    }
