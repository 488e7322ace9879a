"""Defect kinematics: rotation/displacement gradient tensors, contortion,
completed tensors, density recovery, the 2D incompatibility balance
("Kroener's formula"), defect charges, and Bravais rotation/distortion.

Index layout conventions, fixed once here and asserted in tests:
  * frank_tensor            stored [m][k]  (derivative slot first)
  * burgers_tensor          stored [l][k]
  * contortion kappa        stored [i][j]
  * completed tensors       stored [j][k]  (note kappa enters transposed)
"""

from __future__ import annotations

import warnings

import numpy as np

from .field_grid import (
    Grid2D,
    deriv,
    Polyline,
    SurfaceRegion,
    TensorField,
    curl_rows,
    incompatibility_op,
    line_integral,
    surface_integral,
)
from .tensor_algebra import EPS, EPS2, X, Y, Z

__all__ = [
    "frank_tensor",
    "burgers_tensor",
    "incompatibility",
    "contortion_from_densities",
    "completed_frank",
    "completed_burgers",
    "densities_from_completed",
    "kroener_residual",
    "frank_vector",
    "burgers_vector",
    "bravais_rotation",
    "bravais_distortion",
]


def _moment_arms(grid: Grid2D, x0) -> np.ndarray:
    """(x_p - x0_p) as an (nx, ny, 3) array with zero z-component."""
    if not grid.contains(np.array([x0]))[0]:
        raise ValueError("reference point x0 outside grid domain")
    xg, yg = grid.meshgrid()
    arms = np.zeros((grid.nx, grid.ny, 3))
    arms[:, :, X] = xg - x0[0]
    arms[:, :, Y] = yg - x0[1]
    return arms


def frank_tensor(e: TensorField, order: int = 2) -> TensorField:
    """Rotation-gradient tensor [m][k]: eps_{kpq} d_p E_qm (z-derivatives zero).

    order selects the differencing order (2 default; 4 for fields with
    steep gradients such as regularized defect cores).
    """
    if not e.is_symmetric():
        raise ValueError("strain must be symmetric")
    h = e.grid.h
    de = np.stack(
        [deriv(e.values, h, a, order=order) for a in (0, 1)], axis=0
    )  # [p, x, y, q, m]
    out = np.einsum("kpq,pxyqm->xymk", EPS[:, :2, :], de)
    return TensorField(e.grid, out)


def burgers_tensor(e: TensorField, x0) -> TensorField:
    """Displacement-gradient tensor [l][k]: E_kl + eps_{kpq}(x_p - x0_p) dbar_l w_q."""
    fr = frank_tensor(e)  # [l][q]
    arms = _moment_arms(e.grid, x0)
    moment = np.einsum("kpq,xyp,xylq->xylk", EPS, arms, fr.values)
    out = np.swapaxes(e.values, -1, -2) + moment  # E_kl at slot [l][k]
    return TensorField(e.grid, out)


def incompatibility(e: TensorField) -> TensorField:
    """Double-curl incompatibility of the strain (kinematic observable)."""
    return incompatibility_op(e)


def contortion_from_densities(lam: TensorField, theta: TensorField, x0) -> TensorField:
    """kappa_ij = delta_iz alpha_j - alpha_z delta_ij / 2 with
    alpha_j = Lambda_zj - delta_{j a} eps_{ab} Theta_zz (x_b - x0_b)."""
    grid = lam.grid
    arms = _moment_arms(grid, x0)
    lam_z = lam.values[:, :, Z, :]  # Lambda_j
    theta_z = theta.values[:, :, Z, Z]  # Theta_z
    alpha = lam_z.copy()
    alpha[:, :, :2] -= np.einsum("ab,xyb->xya", EPS2, arms[:, :, :2]) * theta_z[:, :, None]
    k = np.zeros((grid.nx, grid.ny, 3, 3))
    k[:, :, Z, :] = alpha
    for i in range(3):
        k[:, :, i, i] -= 0.5 * alpha[:, :, Z]
    return TensorField(grid, k)


def completed_frank(e: TensorField, kappa: TensorField) -> TensorField:
    """[j][k]: dbar_j w_k - kappa_kj (contortion enters transposed)."""
    fr = frank_tensor(e)
    out = fr.values - np.swapaxes(kappa.values, -1, -2)
    return TensorField(e.grid, out)


def completed_burgers(e: TensorField, kappa: TensorField, x0) -> TensorField:
    """[j][k]: E_kj + eps_{kpq}(x_p - x0_p) (completed frank)_jq."""
    cf = completed_frank(e, kappa)  # [j][q]
    arms = _moment_arms(e.grid, x0)
    moment = np.einsum("kpq,xyp,xyjq->xyjk", EPS, arms, cf.values)
    out = np.swapaxes(e.values, -1, -2) + moment
    return TensorField(e.grid, out)


def densities_from_completed(cf: TensorField, cb: TensorField) -> tuple[TensorField, TensorField]:
    """Recover (Theta, Lambda) as row curls of the completed tensors."""
    return curl_rows(cf), curl_rows(cb)


def kroener_residual(e: TensorField, theta: TensorField, kappa: TensorField) -> TensorField:
    """Residual of the 2D incompatibility balance, per component k:
    eta_zk - Theta_zk - eps_{ab} d_a kappa_{kb}."""
    eta = incompatibility_op(e)
    h = e.grid.h
    dk = np.stack(
        [deriv(kappa.values, h, a) for a in (0, 1)], axis=0
    )  # [a, x, y, k, b]
    curl_k = np.einsum("ab,axykb->xyk", EPS2, dk[:, :, :, :, :2])
    res = eta.values[:, :, Z, :] - theta.values[:, :, Z, :] - curl_k
    return TensorField(e.grid, res)


def frank_vector(theta: TensorField, region: SurfaceRegion) -> np.ndarray:
    """Rotational charge of the region: integral of the z-row of Theta."""
    return surface_integral(theta, region)[Z]


def burgers_vector(lam: TensorField, region: SurfaceRegion) -> np.ndarray:
    """Translational charge of the region: integral of the z-row of Lambda."""
    return surface_integral(lam, region)[Z]


def _transpose_form(t: TensorField) -> TensorField:
    """Swap to [k][beta] layout so line_integral reads form_{k b} dx_b."""
    return TensorField(t.grid, np.swapaxes(t.values, -1, -2))


def _check_single_valued(theta: TensorField | None, tol: float):
    if theta is not None and theta.max_abs() > tol:
        warnings.warn(
            "disclination density above tolerance; path-dependent regime",
            stacklevel=3,
        )


def bravais_rotation(
    e: TensorField,
    kappa: TensorField,
    path: Polyline,
    omega0=(0.0, 0.0, 0.0),
    theta: TensorField | None = None,
    theta_tol: float = 1e-8,
) -> np.ndarray:
    """Rotation vector at the path end: omega0 + path integral of the
    completed rotation gradient.  Single-valued only when the disclination
    density vanishes; a warning is attached otherwise."""
    _check_single_valued(theta, theta_tol)
    cf = completed_frank(e, kappa)  # [b][j]
    return np.asarray(omega0, dtype=float) + line_integral(_transpose_form(cf), path)


def bravais_distortion(
    e: TensorField,
    kappa: TensorField,
    path: Polyline,
    omega0=(0.0, 0.0, 0.0),
    theta: TensorField | None = None,
    theta_tol: float = 1e-8,
) -> np.ndarray:
    """Distortion beta_kl = E_kl - eps_{klj} omega_j at the path endpoint."""
    omega = bravais_rotation(e, kappa, path, omega0, theta, theta_tol)
    from .field_grid import sample

    end = path.vertices[-1]
    e_end = sample(e, end[None, :])[0]
    return e_end - np.einsum("klj,j->kl", EPS, omega)
