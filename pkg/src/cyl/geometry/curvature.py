"""Pointwise curvature of chart metric fields.

Conventions:
    Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    R^r_{s m n} = d_m Gamma^r_{n s} - d_n Gamma^r_{m s}
                  + Gamma^r_{m l} Gamma^l_{n s} - Gamma^r_{n l} Gamma^l_{m s}
    Ric_{s n} = R^m_{s m n},  R = g^{s n} Ric_{s n}

``dR`` and ``dRic`` in a snapshot are covariant derivatives at the basepoint;
in normal coordinates at that point they coincide with plain partials, which
is how the conformal-normal-coordinate polynomial consumes them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cyl.geometry.fields import ChartMetricField

__all__ = ["CurvatureSnapshot", "christoffel", "curvature_at"]


@dataclass(frozen=True)
class CurvatureSnapshot:
    point: np.ndarray
    g: np.ndarray          # (4,4) metric at the point
    R: float               # scalar curvature
    Ric: np.ndarray        # (4,4)
    dR: np.ndarray         # (4,)   covariant derivative of R
    dRic: np.ndarray       # (4,4,4) nabla_k Ric_ij
    W: np.ndarray          # (4,4,4,4) Weyl tensor, all indices down

    def weyl_trace_norm(self) -> float:
        ginv = np.linalg.inv(self.g)
        tr = np.einsum("ik,ijkl->jl", ginv, self.W)
        return float(np.max(np.abs(tr)))

    def first_bianchi_norm(self) -> float:
        b = self.W + np.einsum("iklj->ijkl", self.W) + np.einsum("iljk->ijkl", self.W)
        return float(np.max(np.abs(b)))

    def sym_dric(self) -> np.ndarray:
        """Totally symmetrized nabla Ric: d_k Ric_ij + d_i Ric_jk + d_j Ric_ik."""
        t = self.dRic
        return t + np.einsum("ijk->jki", t) + np.einsum("ijk->kij", t)


def christoffel(field: ChartMetricField, x) -> np.ndarray:
    g = field.value(x)
    dg = field.d1(x)
    ginv = np.linalg.inv(g)
    # candidate[i,j,l] = d_i g_jl + d_j g_il - d_l g_ij
    cand = (np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg)
            - np.einsum("lij->ijl", dg))
    return 0.5 * np.einsum("kl,ijl->kij", ginv, cand)


def _riemann_pieces(field: ChartMetricField, x):
    g = field.value(x)
    dg = field.d1(x)
    d2g = field.d2(x)
    ginv = np.linalg.inv(g)
    cand = dg + np.einsum("jil->ijl", dg) - np.einsum("lij->ijl", dg)
    gamma = 0.5 * np.einsum("kl,ijl->kij", ginv, cand)
    # d_m Gamma^k_ij from d2g and d(ginv) = -ginv dg ginv
    dcand = (np.einsum("mijl->mijl", d2g.transpose(0, 1, 2, 3))
             + np.einsum("mjil->mijl", d2g)
             - np.einsum("mlij->mijl", d2g))
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dgamma = 0.5 * (np.einsum("mkl,ijl->mkij", dginv, cand)
                    + np.einsum("kl,mijl->mkij", ginv, dcand))
    riem = (np.einsum("mrns->rsmn", dgamma) - np.einsum("nrms->rsmn", dgamma)
            + np.einsum("rml,lns->rsmn", gamma, gamma)
            - np.einsum("rnl,lms->rsmn", gamma, gamma))
    return g, ginv, gamma, riem


def _ricci_scalar(field, x):
    g, ginv, gamma, riem = _riemann_pieces(field, x)
    ric = np.einsum("msmn->sn", riem)
    scal = float(np.einsum("sn,sn->", ginv, ric))
    return g, ginv, gamma, riem, ric, scal


def curvature_at(field: ChartMetricField, x, h_fd: float = 1e-3) -> CurvatureSnapshot:
    """Full curvature snapshot at x; curvature derivatives use centered
    differences of pointwise Ricci/scalar with step ``h_fd`` and are corrected
    to covariant derivatives with the local Christoffels."""
    x = np.asarray(x, dtype=float)
    g, ginv, gamma, riem, ric, scal = _ricci_scalar(field, x)
    # Weyl, n = 4: W = Rm - 1/2 (Ric o g) + R/6 * (g o g) with indices down
    rm = np.einsum("ra,asmn->rsmn", g, riem)
    go = np.zeros((4, 4, 4, 4))
    ggo = np.zeros((4, 4, 4, 4))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                for l in range(4):
                    go[i, j, k, l] = (g[i, k] * ric[j, l] - g[i, l] * ric[j, k]
                                      + g[j, l] * ric[i, k] - g[j, k] * ric[i, l])
                    ggo[i, j, k, l] = g[i, k] * g[j, l] - g[i, l] * g[j, k]
    weyl = rm - 0.5 * go + (scal / 6.0) * ggo
    # partials of R and Ric by centered differences
    dR = np.empty(4)
    dric = np.empty((4, 4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = h_fd
        *_, ric_p, scal_p = _ricci_scalar(field, x + e)
        *_, ric_m, scal_m = _ricci_scalar(field, x - e)
        dR[k] = (scal_p - scal_m) / (2.0 * h_fd)
        dric[k] = (ric_p - ric_m) / (2.0 * h_fd)
    # covariant correction: nabla_k Ric_ij = d_k Ric_ij - G^m_ki Ric_mj - G^m_kj Ric_im
    dric = dric - np.einsum("mki,mj->kij", gamma, ric) \
        - np.einsum("mkj,im->kij", gamma, ric)
    return CurvatureSnapshot(point=x, g=g, R=scal, Ric=ric, dR=dR, dRic=dric,
                             W=weyl)
