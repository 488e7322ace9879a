"""Internal-observer machinery: parallel transport along polylines, loop
holonomy against the curvature surface integral, geodesic tracing, and
metric path length.

Transport integrates dv_i = -Gamma_{i;jb} v_j dx_b with a classical 4th
order one-step method, substeps at most h/2, the connection sampled by
bilinear interpolation.  The predicted holonomy gap uses the small-loop
curvature integral with the transported vector frozen at its start value;
its sign follows the transport law above (the curvature-integral identity
then carries a leading minus sign).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field_grid import (
    Polyline,
    SurfaceRegion,
    TensorField,
    polygon_integral,
    sample,
    surface_integral,
)
from .geometry import Connection, Curvature, Metric, riemann_curvature
from .tensor_algebra import EPS, Z

__all__ = [
    "TransportResult",
    "GeodesicResult",
    "parallel_transport",
    "holonomy_gap",
    "predicted_holonomy_gap",
    "geodesic_trace",
    "metric_length",
]


@dataclass(frozen=True)
class TransportResult:
    final: np.ndarray
    trace: np.ndarray  # (n_vertices, 3) vector after each resampled segment
    metric_length: float | None
    gap: np.ndarray | None  # final - initial when the path is closed


def _gamma_dot(conn: Connection, pt: np.ndarray, v: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """-Gamma_{i;jb}(pt) v_j dx_b with in-plane dx."""
    g = sample(conn.gamma, pt[None, :])[0]  # [i, j, b]
    return -np.einsum("ijb,j,b->i", g[:, :, :2], v, dx)


def parallel_transport(
    conn: Connection,
    v0,
    path: Polyline,
    metric: Metric | None = None,
    substep: float | None = None,
) -> TransportResult:
    """Transport v0 along the path; optionally also accumulate metric length."""
    h = conn.grid.h
    step = h / 2.0 if substep is None else substep
    p = path.resampled(step)
    v = np.asarray(v0, dtype=float).copy()
    trace = [v.copy()]
    length = 0.0 if metric is not None else None
    for a, b in zip(p.vertices[:-1], p.vertices[1:]):
        dx = b - a
        mid = 0.5 * (a + b)
        k1 = _gamma_dot(conn, a, v, dx)
        k2 = _gamma_dot(conn, mid, v + 0.5 * k1, dx)
        k3 = _gamma_dot(conn, mid, v + 0.5 * k2, dx)
        k4 = _gamma_dot(conn, b, v + k3, dx)
        v = v + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        trace.append(v.copy())
        if metric is not None:
            gm = sample(metric.g, mid[None, :])[0]
            dx3 = np.array([dx[0], dx[1], 0.0])
            length += float(np.sqrt(dx3 @ gm @ dx3))
    gap = v - np.asarray(v0, dtype=float) if path.closed else None
    return TransportResult(v, np.array(trace), length, gap)


def predicted_holonomy_gap(
    curv: Curvature, region: SurfaceRegion | Polyline, v0
) -> np.ndarray:
    """Leading-order gap from the curvature surface integral:
    gap_l = -1/2 integral_S eps_{zqm} R_{l;nmq} v0_n dS.

    A Polyline region is integrated by polygon supersampling, which keeps
    quadrature error small even for loops spanning only a few grid cells.
    """
    v0 = np.asarray(v0, dtype=float)
    integrand = -0.5 * np.einsum(
        "qm,xylnmq,n->xyl", EPS[Z], curv.riemann.values, v0
    )
    fld = TensorField(curv.riemann.grid, integrand)
    if isinstance(region, Polyline):
        return polygon_integral(fld, region)
    return surface_integral(fld, region)


def holonomy_gap(
    conn: Connection,
    metric: Metric,
    loop: Polyline,
    v0,
    substep: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(ODE gap, curvature-integral prediction) for a closed loop."""
    if not loop.closed:
        raise ValueError("holonomy needs a closed loop")
    res = parallel_transport(conn, v0, loop, substep=substep)
    curv = riemann_curvature(conn, metric)
    return res.gap, predicted_holonomy_gap(curv, loop, v0)


@dataclass(frozen=True)
class GeodesicResult:
    path: Polyline
    tangents: np.ndarray  # (n, 3)
    exited: bool


def geodesic_trace(
    conn: Connection,
    x_start,
    tau0,
    arc_length: float,
    step: float | None = None,
) -> GeodesicResult:
    """Trace dtau_l/ds = -Gamma_{l;jb} tau_j tau_b, advancing in-plane.

    Terminates early (flagged, not raised) if the geodesic leaves the grid.
    """
    grid = conn.grid
    ds = grid.h / 2.0 if step is None else step
    n = max(1, int(np.ceil(arc_length / ds)))
    ds = arc_length / n
    x = np.asarray(x_start, dtype=float).copy()
    tau = np.asarray(tau0, dtype=float).copy()
    pts = [x.copy()]
    taus = [tau.copy()]
    exited = False

    def rhs(state):
        xx, tt = state[:2], state[2:]
        g = sample(conn.gamma, xx[None, :])[0]
        dtau = -np.einsum("ljb,j,b->l", g[:, :, :2], tt, tt[:2])
        return np.concatenate([tt[:2], dtau])

    state = np.concatenate([x, tau])
    for _ in range(n):
        try:
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * ds * k1)
            k3 = rhs(state + 0.5 * ds * k2)
            k4 = rhs(state + ds * k3)
        except ValueError:
            exited = True
            break
        new = state + ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        if not grid.contains(new[None, :2])[0]:
            exited = True
            break
        state = new
        pts.append(state[:2].copy())
        taus.append(state[2:].copy())
    if len(pts) < 2:
        pts.append(pts[0] + 1e-12)
    return GeodesicResult(Polyline(np.array(pts)), np.array(taus), exited)


def metric_length(metric: Metric, path: Polyline, substep: float | None = None) -> float:
    """L = integral sqrt(g_ij dx_i dx_j), midpoint rule on subdivided segments."""
    h = metric.grid.h
    step = h / 2.0 if substep is None else substep
    p = path.resampled(step)
    a = p.vertices[:-1]
    b = p.vertices[1:]
    mids = 0.5 * (a + b)
    g = sample(metric.g, mids)  # (n, 3, 3)
    dx = b - a
    dx3 = np.concatenate([dx, np.zeros((dx.shape[0], 1))], axis=1)
    return float(np.sum(np.sqrt(np.einsum("si,sij,sj->s", dx3, g, dx3))))
