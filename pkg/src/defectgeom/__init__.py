"""Numerical engine for the non-Riemannian geometry of a defective single
crystal: defect kinematics on a z-invariant 2D grid, Bravais metric and
nonsymmetric connection, curvature/torsion/nonmetricity, parallel transport
and geodesics of the internal observer, and defect-density evolution.
"""

from .field_grid import Grid2D, Polyline, SurfaceRegion, TensorField

__all__ = ["Grid2D", "Polyline", "SurfaceRegion", "TensorField"]

__version__ = "0.1.0"
