"""Constructors for defect scenes: analytic screw fields, mollified density
blobs, compatible strains, and manufactured consistent (E, Theta, Lambda,
kappa) states used as ground truth by the residual checks.

All line defects run along z; densities therefore populate the z-row only.
The 1/r^2 screw core is regularized by r^2 -> max(r^2, r_c^2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .field_grid import Grid2D, TensorField, surface_integral, SurfaceRegion
from .tensor_algebra import X, Y, Z

__all__ = [
    "ScrewSource",
    "DensityBlob",
    "DefectScene",
    "screw_strain",
    "screw_frank_regular",
    "blob_density",
    "compatible_strain",
    "mollified_screw_strain",
    "trig_scene",
    "mollified_screw_scene",
    "ManufacturedScene",
]


@dataclass(frozen=True)
class ScrewSource:
    """Isolated screw dislocation along z with core regularization."""

    b_z: float
    center: tuple[float, float] = (0.0, 0.0)
    core_radius: float = 0.05

    def __post_init__(self):
        if self.core_radius <= 0:
            raise ValueError("core radius must be > 0")
        if not np.isfinite(self.b_z):
            raise ValueError("Burgers magnitude must be finite")


@dataclass(frozen=True)
class DensityBlob:
    """Gaussian-mollified defect density carrying a fixed total charge."""

    kind: str  # "dislocation" | "disclination"
    charge: tuple[float, float, float]
    center: tuple[float, float] = (0.0, 0.0)
    sigma: float = 0.25

    def __post_init__(self):
        if self.kind not in ("dislocation", "disclination"):
            raise ValueError("blob kind must be 'dislocation' or 'disclination'")
        if self.sigma <= 0:
            raise ValueError("blob width sigma must be > 0")


@dataclass(frozen=True)
class DefectScene:
    """Declarative defect content consumed by the pipelines."""

    screws: tuple[ScrewSource, ...] = ()
    blobs: tuple[DensityBlob, ...] = ()
    reference_point: tuple[float, float] = (0.0, 0.0)
    c_v: float = 0.0
    c_i: float = 0.0
    concentration_sigma: float | None = None
    temperature_gradient: tuple[float, float] = (0.0, 0.0)


def _core_r2(xg, yg, center, r_c):
    r2 = (xg - center[0]) ** 2 + (yg - center[1]) ** 2
    return np.maximum(r2, r_c ** 2)


def screw_strain(src: ScrewSource, grid: Grid2D) -> TensorField:
    """Closed-form screw strain: E_13 = -B y / (4 pi r^2), E_23 = B x / (4 pi r^2)."""
    if src.core_radius < 2 * grid.h:
        warnings.warn("screw core radius below 2h; core values under-resolved")
    xg, yg = grid.meshgrid()
    r2 = _core_r2(xg, yg, src.center, src.core_radius)
    f = src.b_z / (4.0 * np.pi * r2)
    e = np.zeros((grid.nx, grid.ny, 3, 3))
    e[:, :, X, Z] = e[:, :, Z, X] = -f * (yg - src.center[1])
    e[:, :, Y, Z] = e[:, :, Z, Y] = f * (xg - src.center[0])
    return TensorField(grid, e)


def screw_frank_regular(src: ScrewSource, grid: Grid2D) -> TensorField:
    """Regular part of the screw rotation-gradient field, stored [m][k].

    -B/(4 pi r^2) * [[cos2t, sin2t, 0], [sin2t, -cos2t, 0], [0, 0, 0]];
    the line-concentrated singular part is not represented pointwise.
    """
    xg, yg = grid.meshgrid()
    dx = xg - src.center[0]
    dy = yg - src.center[1]
    r2 = _core_r2(xg, yg, src.center, src.core_radius)
    # cos2t, sin2t from the un-capped direction; regularize magnitude only
    c2 = (dx ** 2 - dy ** 2) / np.maximum(dx ** 2 + dy ** 2, 1e-300)
    s2 = 2.0 * dx * dy / np.maximum(dx ** 2 + dy ** 2, 1e-300)
    f = -src.b_z / (4.0 * np.pi * r2)
    t = np.zeros((grid.nx, grid.ny, 3, 3))
    t[:, :, X, X] = f * c2
    t[:, :, X, Y] = f * s2
    t[:, :, Y, X] = f * s2
    t[:, :, Y, Y] = -f * c2
    return TensorField(grid, t)


def _gaussian(xg, yg, center, sigma):
    r2 = (xg - center[0]) ** 2 + (yg - center[1]) ** 2
    return np.exp(-r2 / (2.0 * sigma ** 2)) / (2.0 * np.pi * sigma ** 2)


def blob_density(blob: DensityBlob, grid: Grid2D) -> TensorField:
    """Mollified density field, z-row only, renormalized so the discrete
    surface integral over the full grid equals the declared charge exactly."""
    if blob.sigma < 2 * grid.h:
        warnings.warn("blob sigma below 2h; density under-resolved")
    xg, yg = grid.meshgrid()
    prof = _gaussian(xg, yg, blob.center, blob.sigma)
    d = np.zeros((grid.nx, grid.ny, 3, 3))
    d[:, :, Z, :] = prof[:, :, None] * np.asarray(blob.charge)
    fld = TensorField(grid, d)
    whole = SurfaceRegion(grid, np.ones((grid.nx, grid.ny), dtype=bool))
    raw = surface_integral(fld, whole)[Z]  # z-row integrates to ~charge
    # renormalize per component against the discrete profile mass
    prof_field = TensorField(grid, prof)
    mass = surface_integral(prof_field, whole)
    if mass > 0:
        d[:, :, Z, :] /= mass
    _ = raw
    return TensorField(grid, d)


def compatible_strain(grad_u, grid: Grid2D) -> TensorField:
    """Symmetric strain sym(grad u) from an analytic displacement gradient.

    grad_u(x, y) must return the 3x3 distortion d_j u_i (vectorized, shape
    (..., 3, 3) or (3, 3, nx, ny)).
    """
    xg, yg = grid.meshgrid()
    g = np.asarray(grad_u(xg, yg), dtype=float)
    if g.shape[:2] == (3, 3):
        g = np.moveaxis(g, (0, 1), (-2, -1))
    e = 0.5 * (g + np.swapaxes(g, -1, -2))
    return TensorField(grid, e)


def _screw_form_contortion(rho: np.ndarray, grid: Grid2D) -> TensorField:
    """kappa with kappa_zz = rho/2, kappa_xx = kappa_yy = -rho/2, rest 0."""
    k = np.zeros((grid.nx, grid.ny, 3, 3))
    k[:, :, Z, Z] = 0.5 * rho
    k[:, :, X, X] = -0.5 * rho
    k[:, :, Y, Y] = -0.5 * rho
    return TensorField(grid, k)


@dataclass(frozen=True)
class ManufacturedScene:
    """Consistent (E, Theta, Lambda, kappa) state with analytic ground truth.

    Satisfies the 2D incompatibility balance eta_k = Theta_k
    + eps_{ab} d_a kappa_{kb} in closed form, with Theta = 0.
    """

    grid: Grid2D
    strain: TensorField
    theta: TensorField
    lam: TensorField
    kappa: TensorField
    eta_exact: TensorField
    reference_point: tuple[float, float] = (0.0, 0.0)
    #: analytic trace of the solenoidal strain part and its Laplacian
    sol_trace: np.ndarray | None = field(default=None)
    sol_trace_laplacian: np.ndarray | None = field(default=None)


def trig_scene(
    grid: Grid2D,
    amplitude: float = 1e-4,
    frequency: float = 0.3,
    zz_amplitude: float | None = None,
) -> ManufacturedScene:
    """Smooth periodic consistent scene built from chi = A sin(wx) sin(wy).

    Off-plane strain E_xz = -d_y chi, E_yz = d_x chi makes eta_zk match the
    curl of a screw-form contortion with rho = 2 Lap chi = -4 w^2 chi.
    An optional E_zz = B sin(wx) sin(wy) adds in-plane incompatibility
    (its eta does not enter the z-row balance) and a solenoidal trace.
    """
    w = frequency
    a = amplitude
    xg, yg = grid.meshgrid()
    sx, cx = np.sin(w * xg), np.cos(w * xg)
    sy, cy = np.sin(w * yg), np.cos(w * yg)
    chi = a * sx * sy
    dchi_dx = a * w * cx * sy
    dchi_dy = a * w * sx * cy
    lap_chi = -2.0 * w ** 2 * chi

    e = np.zeros((grid.nx, grid.ny, 3, 3))
    e[:, :, X, Z] = e[:, :, Z, X] = -dchi_dy
    e[:, :, Y, Z] = e[:, :, Z, Y] = dchi_dx

    sol_trace = None
    sol_lap = None
    if zz_amplitude is not None:
        psi = zz_amplitude * sx * sy
        e[:, :, Z, Z] = psi
        sol_trace = psi
        sol_lap = -2.0 * w ** 2 * psi

    rho = 2.0 * lap_chi
    kappa = _screw_form_contortion(rho, grid)
    lam = TensorField.zeros(grid, 2)
    lv = lam.values
    lv[:, :, Z, Z] = rho

    # exact incompatibility: z-row from chi, in-plane block from psi
    eta = np.zeros((grid.nx, grid.ny, 3, 3))
    d_lap_dx = -2.0 * w ** 3 * a * cx * sy
    d_lap_dy = -2.0 * w ** 3 * a * sx * cy
    eta[:, :, Z, X] = d_lap_dy  # = d_y Lap chi
    eta[:, :, X, Z] = d_lap_dy
    eta[:, :, Z, Y] = -d_lap_dx
    eta[:, :, Y, Z] = -d_lap_dx
    if zz_amplitude is not None:
        b = zz_amplitude
        eta[:, :, X, X] = -b * w ** 2 * sx * sy  # d_yy psi
        eta[:, :, Y, Y] = -b * w ** 2 * sx * sy  # d_xx psi
        eta[:, :, X, Y] = eta[:, :, Y, X] = -b * w ** 2 * cx * cy  # -d_xd_y psi

    return ManufacturedScene(
        grid=grid,
        strain=TensorField(grid, e),
        theta=TensorField.zeros(grid, 2),
        lam=lam,
        kappa=kappa,
        eta_exact=TensorField(grid, eta),
        sol_trace=sol_trace,
        sol_trace_laplacian=sol_lap,
    )


def mollified_screw_strain(
    grid: Grid2D, b_z: float, center=(0.0, 0.0), sigma: float = 0.25
) -> TensorField:
    """Strain of a Gaussian-mollified screw: the far field of screw_strain
    with the 1/r^2 factor smoothly shut off inside the blob."""
    xg, yg = grid.meshgrid()
    dx = xg - center[0]
    dy = yg - center[1]
    r2 = np.maximum(dx ** 2 + dy ** 2, 1e-300)
    shell = (1.0 - np.exp(-r2 / (2.0 * sigma ** 2))) / r2
    f = b_z / (4.0 * np.pi) * shell
    e = np.zeros((grid.nx, grid.ny, 3, 3))
    e[:, :, X, Z] = e[:, :, Z, X] = -f * dy
    e[:, :, Y, Z] = e[:, :, Z, Y] = f * dx
    return TensorField(grid, e)


def mollified_screw_scene(
    grid: Grid2D, b_z: float = 1.0, center=(0.0, 0.0), sigma: float = 0.25
) -> ManufacturedScene:
    """Consistent scene for a single mollified screw of total charge b_z.

    Lambda_zz is the unit Gaussian times b_z; kappa is the screw form with
    rho = Lambda_zz; the strain is the mollified closed form, so the
    incompatibility balance holds analytically.
    """
    xg, yg = grid.meshgrid()
    rho = b_z * _gaussian(xg, yg, center, sigma)
    strain = mollified_screw_strain(grid, b_z, center, sigma)
    kappa = _screw_form_contortion(rho, grid)
    lam = TensorField.zeros(grid, 2)
    lam.values[:, :, Z, Z] = rho

    # eta_zk = eps_{ab} d_a kappa_{kb}: k=x -> d_y rho / 2, k=y -> -d_x rho / 2
    dx = xg - center[0]
    dy = yg - center[1]
    pref = -rho / sigma ** 2  # radial derivative factor of the Gaussian
    eta = np.zeros((grid.nx, grid.ny, 3, 3))
    eta[:, :, Z, X] = 0.5 * pref * dy
    eta[:, :, X, Z] = 0.5 * pref * dy
    eta[:, :, Z, Y] = -0.5 * pref * dx
    eta[:, :, Y, Z] = -0.5 * pref * dx

    return ManufacturedScene(
        grid=grid,
        strain=strain,
        theta=TensorField.zeros(grid, 2),
        lam=lam,
        kappa=kappa,
        eta_exact=TensorField(grid, eta),
        reference_point=(float(center[0]), float(center[1])),
    )
