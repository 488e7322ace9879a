"""Non-Riemannian structure of the defective crystal: Bravais metric,
symmetric and nonsymmetric connections, torsion, connection contortion,
curvature tensors and their contractions.

All indices are lower; raising uses the small-strain inverse metric only.
Connection storage is Gamma[k][i][j] = Gamma_{k;ij}.
Curvature storage is R[l][k][m][q] = R_{l;kmq}, skew in (m, q).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .field_grid import Grid2D, TensorField, deriv
from .tensor_algebra import DELTA, EPS, EPS2, X, Y, Z

__all__ = [
    "Metric",
    "Connection",
    "Curvature",
    "bravais_metric",
    "christoffel",
    "christoffel_bravais",
    "dislocation_torsion",
    "connection_contortion",
    "contortion_closed_form",
    "full_connection",
    "torsion_of",
    "metric_compatibility_residual",
    "covariant_derivative_rank2",
    "riemann_curvature",
    "gauss_trace_check",
    "laplacian",
]


@dataclass(frozen=True)
class Metric:
    """Symmetric positive-definite rank-2 field with its small-strain inverse."""

    g: TensorField
    g_inv: TensorField

    def __post_init__(self):
        v = self.g.values
        m1 = v[:, :, X, X]
        m2 = m1 * v[:, :, Y, Y] - v[:, :, X, Y] ** 2
        m3 = np.linalg.det(v)
        if not ((m1 > 0).all() and (m2 > 0).all() and (m3 > 0).all()):
            raise ValueError("metric not positive definite at every node")

    @property
    def grid(self) -> Grid2D:
        return self.g.grid


@dataclass(frozen=True)
class Connection:
    """Rank-3 field Gamma_{k;ij} plus symmetry flag and paired metric."""

    gamma: TensorField
    symmetric: bool = False
    metric: Metric | None = None

    def __post_init__(self):
        if self.gamma.rank != 3:
            raise ValueError("connection coefficients must form a rank-3 field")
        if self.symmetric:
            v = self.gamma.values
            if np.max(np.abs(v - np.swapaxes(v, -1, -2))) > 1e-12 * max(1.0, np.max(np.abs(v))):
                raise ValueError("symmetric flag set but Gamma_{k;ij} != Gamma_{k;ji}")

    @property
    def grid(self) -> Grid2D:
        return self.gamma.grid


@dataclass(frozen=True)
class Curvature:
    """R_{l;kmq} plus its standard contractions."""

    riemann: TensorField

    def __post_init__(self):
        if self.riemann.rank != 4:
            raise ValueError("curvature must be a rank-4 field")

    def ricci(self) -> TensorField:
        """R_kq = R_{p;kpq}."""
        out = np.einsum("xypkpq->xykq", self.riemann.values)
        return TensorField(self.riemann.grid, out)

    def gauss(self) -> TensorField:
        """Scalar R = R_pp / 2."""
        ric = self.ricci().values
        return TensorField(self.riemann.grid, 0.5 * np.einsum("xypp->xy", ric))

    def einstein(self) -> TensorField:
        """-1/4 eps_{lki} eps_{mqj} R_{l;kmq}."""
        out = -0.25 * np.einsum("lki,mqj,xylkmq->xyij", EPS, EPS, self.riemann.values)
        return TensorField(self.riemann.grid, out)


def bravais_metric(e: TensorField, strain_guard: float = 0.1) -> Metric:
    """g_ij = delta_ij - 2 E_ij with small-strain inverse delta_ij + E_ij."""
    if not e.is_symmetric():
        raise ValueError("strain must be symmetric")
    if e.max_abs() > strain_guard:
        warnings.warn("strain exceeds small-strain guard; inverse metric degrades")
    g = TensorField(e.grid, DELTA - 2.0 * e.values)
    g_inv = TensorField(e.grid, DELTA + e.values)
    return Metric(g, g_inv)


def _grad3(f: TensorField) -> np.ndarray:
    """d_a f for a = x, y, z (z identically zero), leading axis a."""
    h = f.grid.h
    dx = deriv(f.values, h, 0)
    dy = deriv(f.values, h, 1)
    return np.stack([dx, dy, np.zeros_like(dx)], axis=0)


def christoffel(g: TensorField) -> TensorField:
    """Gamma_{k;ij} = (d_i g_kj + d_j g_ki - d_k g_ij) / 2 for any metric field."""
    dg = _grad3(g)  # [a, x, y, i, j]
    dgi = np.moveaxis(dg, 0, 2)  # [x, y, a, i, j]
    term_i = np.einsum("xyikj->xykij", dgi)
    term_j = np.einsum("xyjki->xykij", dgi)
    term_k = np.einsum("xykij->xykij", dgi)
    return TensorField(g.grid, 0.5 * (term_i + term_j - term_k))


def christoffel_bravais(metric: Metric) -> Connection:
    """Torsion-free connection of the Bravais metric."""
    return Connection(christoffel(metric.g), symmetric=True, metric=metric)


def dislocation_torsion(lam: TensorField) -> TensorField:
    """T_{k;ij} = -eps_{ijp} Lambda_{pk} / 2, skew in (i, j)."""
    out = -0.5 * np.einsum("ijp,xypk->xykij", EPS, lam.values)
    return TensorField(lam.grid, out)


def connection_contortion(t: TensorField) -> TensorField:
    """Delta Gamma_{k;ij} = T_{j;ik} + T_{i;jk} - T_{k;ji}, skew in (i, k)."""
    v = t.values
    out = (
        np.einsum("xyjik->xykij", v)
        + np.einsum("xyijk->xykij", v)
        - np.einsum("xykji->xykij", v)
    )
    return TensorField(t.grid, out)


def contortion_closed_form(kappa: TensorField) -> TensorField:
    """Explicit 2D contortion-to-connection map (dislocation content only):

      k in-plane:  DG_{k;ab} = eps_{ka} kappa_{zb}
                   DG_{k;az} = eps_{at} kappa_{tk}
                   DG_{k;zb} = eps_{bt} kappa_{tk}
      k = z:       DG_{z;ab} = -eps_{ab} kappa_{zz}

    with eps the in-plane permutation symbol; all other entries vanish.
    """
    grid = kappa.grid
    kv = kappa.values
    out = np.zeros((grid.nx, grid.ny, 3, 3, 3))
    # k in-plane, i, j in-plane
    out[:, :, :2, :2, :2] = np.einsum("ka,xyb->xykab", EPS2, kv[:, :, Z, :2])
    # k in-plane, i in-plane, j = z
    mixed = np.einsum("at,xytk->xyka", EPS2, kv[:, :, :2, :2])
    out[:, :, :2, :2, Z] = mixed
    # k in-plane, i = z, j in-plane (same expression with slot b)
    out[:, :, :2, Z, :2] = mixed
    # k = z
    out[:, :, Z, :2, :2] = -np.einsum("ab,xy->xyab", EPS2, kv[:, :, Z, Z])
    return TensorField(grid, out)


def full_connection(gamma_b: Connection, delta_gamma: TensorField) -> Connection:
    """Nonsymmetric connection Gamma = Gamma^B - Delta Gamma."""
    out = gamma_b.gamma.values - delta_gamma.values
    return Connection(TensorField(gamma_b.grid, out), symmetric=False, metric=gamma_b.metric)


def torsion_of(conn: Connection) -> TensorField:
    """Skew part (Gamma_{k;ij} - Gamma_{k;ji}) / 2 of a connection."""
    v = conn.gamma.values
    return TensorField(conn.grid, 0.5 * (v - np.swapaxes(v, -1, -2)))


def covariant_derivative_rank2(conn: Connection, g: TensorField) -> TensorField:
    """Lower-index covariant derivative, stored [k][i][j]:
    nabla_k g_ij = d_k g_ij - Gamma_{l;ik} g_lj - Gamma_{l;jk} g_li."""
    dg = _grad3(g)  # [k, x, y, i, j]
    gv = conn.gamma.values
    out = np.moveaxis(dg, 0, 2)  # [x, y, k, i, j]
    out = out - np.einsum("xylik,xylj->xykij", gv, g.values)
    out = out - np.einsum("xyljk,xyli->xykij", gv, g.values)
    return TensorField(g.grid, out)


def metric_compatibility_residual(conn: Connection, metric: Metric) -> TensorField:
    """nabla g under the connection; near-zero certifies compatibility."""
    return covariant_derivative_rank2(conn, metric.g)


def riemann_curvature(conn: Connection, metric: Metric) -> Curvature:
    """R_{l;kmq} = (d_q Gamma_{l;km} + g~_np Gamma_{n;km} Gamma_{p;lq})_[mq]."""
    gv = conn.gamma.values
    dgam = _grad3(conn.gamma)  # [q, x, y, l, k, m]
    a = np.moveaxis(dgam, 0, -1)  # [x, y, l, k, m, q]
    quad = np.einsum("xynp,xynkm,xyplq->xylkmq", metric.g_inv.values, gv, gv)
    a = a + quad
    r = a - np.swapaxes(a, -1, -2)
    return Curvature(TensorField(conn.grid, r))


def laplacian(f: TensorField) -> TensorField:
    """Componentwise in-plane Laplacian via nested first derivatives."""
    h = f.grid.h
    out = np.zeros_like(f.values)
    for a in (0, 1):
        d = deriv(f.values, h, a)
        out += deriv(d, h, a)
    return TensorField(f.grid, out)


def gauss_trace_check(sol_trace: TensorField, r_gauss: TensorField) -> TensorField:
    """Residual of -Lap(tr E^s) = R for a scalar solenoidal-trace field."""
    if sol_trace.rank != 0 or r_gauss.rank != 0:
        raise ValueError("expects scalar fields")
    lap = laplacian(sol_trace)
    return TensorField(sol_trace.grid, -lap.values - r_gauss.values)
