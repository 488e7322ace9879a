"""Time evolution of defect content: advection-diffusion-recombination of
point-defect concentrations and componentwise diffusion/thermodrift of the
contortion tensor, plus the contortion conservation-law monitor.

Spatial discretization is flux-form (face fluxes differenced back to
nodes), which makes the divergence terms exactly conservative under the
default zero-normal-flux boundaries.  Time stepping is explicit Euler with
a CFL guard dt <= 0.2 h^2 / max-eigenvalue(D).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field_grid import Grid2D, TensorField, deriv, divergence_rows, partial

__all__ = [
    "EvolutionConfig",
    "StepDiagnostics",
    "step_point_defects",
    "step_contortion",
    "conservation_residual",
    "project_conservation",
    "total_mass",
]


def _as_2x2(d) -> np.ndarray:
    """Accept a scalar or a 2x2 (in-plane) diffusivity tensor."""
    d = np.asarray(d, dtype=float)
    if d.ndim == 0:
        return float(d) * np.eye(2)
    if d.shape == (2, 2):
        return d
    if d.shape == (3, 3):
        return d[:2, :2]
    raise ValueError("diffusivity must be scalar, 2x2 or 3x3")


@dataclass(frozen=True)
class EvolutionConfig:
    """Coefficients and numerical controls for the defect-evolution PDEs."""

    dt: float
    d_v: np.ndarray = field(default_factory=lambda: np.eye(2))
    d_i: np.ndarray = field(default_factory=lambda: np.eye(2))
    dt_v: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    dt_i: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    k_rec: float = 0.0
    kappa_d: float = 0.0
    kappa_dt: float = 0.0
    temperature: TensorField | None = None
    velocity: TensorField | None = None  # rank-1 convecting velocity, in-plane
    p_tilde: object | None = None  # nodewise source hook for the contortion PDE

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        for name in ("d_v", "d_i", "dt_v", "dt_i"):
            object.__setattr__(self, name, _as_2x2(getattr(self, name)))

    def check_cfl(self, grid: Grid2D, which: str = "point"):
        if which == "point":
            dmax = max(
                float(np.max(np.linalg.eigvalsh(self.d_v))),
                float(np.max(np.linalg.eigvalsh(self.d_i))),
            )
        else:
            dmax = float(self.kappa_d)
        if dmax > 0 and self.dt > 0.2 * grid.h ** 2 / dmax:
            raise ValueError(
                f"CFL violation: dt={self.dt:g} exceeds 0.2 h^2/D = {0.2 * grid.h ** 2 / dmax:g}"
            )


@dataclass(frozen=True)
class StepDiagnostics:
    mass_before: float
    mass_after: float
    recombination_sink: float  # dt * integral of P (per species)
    clipped_mass: float  # mass added back by negativity clipping


def total_mass(c: TensorField) -> float:
    """Cell-sum mass, h^2 per node (the measure conserved by the flux form)."""
    return float(np.sum(c.values)) * c.grid.h ** 2


def _face_flux_divergence(
    c: np.ndarray, grid: Grid2D, d: np.ndarray, dtherm: np.ndarray, grad_t
) -> np.ndarray:
    """div(D grad c + Dt c grad T) with zero-flux boundary faces.

    Face fluxes use exact face-normal differences plus averaged tangential
    derivatives for the off-diagonal diffusivity entries.
    """
    h = grid.h
    dcx = deriv(c, h, 0)
    dcy = deriv(c, h, 1)

    # x-faces between i and i+1: shape (nx-1, ny)
    fx = d[0, 0] * (c[1:, :] - c[:-1, :]) / h
    if d[0, 1] != 0.0:
        fx = fx + d[0, 1] * 0.5 * (dcy[1:, :] + dcy[:-1, :])
    # y-faces between j and j+1: shape (nx, ny-1)
    fy = d[1, 1] * (c[:, 1:] - c[:, :-1]) / h
    if d[1, 0] != 0.0:
        fy = fy + d[1, 0] * 0.5 * (dcx[:, 1:] + dcx[:, :-1])

    if grad_t is not None:
        gtx, gty = grad_t
        cx_face = 0.5 * (c[1:, :] + c[:-1, :])
        cy_face = 0.5 * (c[:, 1:] + c[:, :-1])
        gtx_face = 0.5 * (gtx[1:, :] + gtx[:-1, :])
        gty_facex = 0.5 * (gty[1:, :] + gty[:-1, :])
        fx = fx + cx_face * (dtherm[0, 0] * gtx_face + dtherm[0, 1] * gty_facex)
        gtx_facey = 0.5 * (gtx[:, 1:] + gtx[:, :-1])
        gty_face = 0.5 * (gty[:, 1:] + gty[:, :-1])
        fy = fy + cy_face * (dtherm[1, 0] * gtx_facey + dtherm[1, 1] * gty_face)

    div = np.zeros_like(c)
    div[:-1, :] += fx / h
    div[1:, :] -= fx / h
    div[:, :-1] += fy / h
    div[:, 1:] -= fy / h
    return div


def _grad_t(cfg: EvolutionConfig):
    if cfg.temperature is None:
        return None
    tv = cfg.temperature
    return (
        deriv(tv.values, tv.grid.h, 0),
        deriv(tv.values, tv.grid.h, 1),
    )


def _advect(c: np.ndarray, grid: Grid2D, velocity: TensorField | None) -> np.ndarray:
    if velocity is None:
        return np.zeros_like(c)
    h = grid.h
    vx = velocity.values[:, :, 0]
    vy = velocity.values[:, :, 1]
    return -(
        vx * deriv(c, h, 0)
        + vy * deriv(c, h, 1)
    )


def step_point_defects(
    c_v: TensorField, c_i: TensorField, cfg: EvolutionConfig
) -> tuple[TensorField, TensorField, StepDiagnostics, StepDiagnostics]:
    """One explicit step of both species; mass-action recombination sink
    P = k_rec C_I C_V; negativity clipped at 0 with clipped mass logged."""
    grid = c_v.grid
    cfg.check_cfl(grid, "point")
    if (c_v.values < 0).any() or (c_i.values < 0).any():
        raise ValueError("concentrations must be nonnegative before stepping")
    gt = _grad_t(cfg)
    p = cfg.k_rec * c_i.values * c_v.values
    h2 = grid.h ** 2
    out = []
    for c, d, dth in ((c_v, cfg.d_v, cfg.dt_v), (c_i, cfg.d_i, cfg.dt_i)):
        rhs = _face_flux_divergence(c.values, grid, d, dth, gt) - p
        rhs = rhs + _advect(c.values, grid, cfg.velocity)
        new = c.values + cfg.dt * rhs
        clipped = float(np.sum(np.minimum(new, 0.0))) * h2
        new = np.maximum(new, 0.0)
        diag = StepDiagnostics(
            mass_before=float(np.sum(c.values)) * h2,
            mass_after=float(np.sum(new)) * h2,
            recombination_sink=cfg.dt * float(np.sum(p)) * h2,
            clipped_mass=-clipped,
        )
        out.append((TensorField(grid, new), diag))
    (cv_new, diag_v), (ci_new, diag_i) = out
    return cv_new, ci_new, diag_v, diag_i


def step_contortion(kappa: TensorField, cfg: EvolutionConfig) -> TensorField:
    """One explicit step of the contortion PDE, componentwise through the
    isotropic rank-4 map (scalar diffusivity and thermodrift coefficient)."""
    grid = kappa.grid
    cfg.check_cfl(grid, "kappa")
    gt = _grad_t(cfg)
    d = cfg.kappa_d * np.eye(2)
    dth = cfg.kappa_dt * np.eye(2)
    new = np.empty_like(kappa.values)
    for i in range(3):
        for j in range(3):
            comp = kappa.values[:, :, i, j]
            rhs = _face_flux_divergence(comp, grid, d, dth, gt)
            rhs = rhs + _advect(comp, grid, cfg.velocity)
            new[:, :, i, j] = comp + cfg.dt * rhs
    if cfg.p_tilde is not None:
        new = new - cfg.dt * np.asarray(cfg.p_tilde(kappa), dtype=float)
    return TensorField(grid, new)


def conservation_residual(kappa: TensorField) -> TensorField:
    """Residual of div(kappa) = grad(tr kappa), per component k."""
    div = divergence_rows(kappa)
    tr = TensorField(kappa.grid, np.einsum("xypp->xy", kappa.values))
    gx = partial(tr, "x").values
    gy = partial(tr, "y").values
    res = div.values.copy()
    res[:, :, 0] -= gx
    res[:, :, 1] -= gy
    return TensorField(kappa.grid, res)


def project_conservation(kappa: TensorField) -> TensorField:
    """Remove the constraint-violating part by a scalar Poisson correction.

    Adds p * identity to kappa where p solves the Neumann problem
    Lap p = div(residual) / 2, the least-squares reduction of the residual
    reachable through the trace direction.
    """
    from scipy.sparse import lil_matrix
    from scipy.sparse.linalg import spsolve

    grid = kappa.grid
    res = conservation_residual(kappa)
    h = grid.h
    rx = res.values[:, :, 0]
    ry = res.values[:, :, 1]
    rhs = (
        deriv(rx, h, 0)
        + deriv(ry, h, 1)
    ) / 2.0

    nx, ny = grid.nx, grid.ny
    n = nx * ny
    idx = lambda i, j: i * ny + j
    a = lil_matrix((n, n))
    b = rhs.ravel() * h ** 2
    for i in range(nx):
        for j in range(ny):
            k = idx(i, j)
            neighbors = []
            if i > 0:
                neighbors.append(idx(i - 1, j))
            if i < nx - 1:
                neighbors.append(idx(i + 1, j))
            if j > 0:
                neighbors.append(idx(i, j - 1))
            if j < ny - 1:
                neighbors.append(idx(i, j + 1))
            a[k, k] = -len(neighbors)
            for m in neighbors:
                a[k, m] = 1.0
    # pin the mean to regularize the Neumann nullspace
    a[0, :] = 0.0
    a[0, 0] = 1.0
    b[0] = 0.0
    p = spsolve(a.tocsr(), b).reshape(nx, ny)
    corrected = kappa.values.copy()
    for i in range(3):
        corrected[:, :, i, i] += p
    return TensorField(grid, corrected)
