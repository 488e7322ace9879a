"""Pointwise algebra for small dense tensors with 3D indices.

A "small tensor" of rank r is a plain numpy array of shape (3,)*r.  All
routines here also accept stacked arrays whose *trailing* r axes are the
tensor slots (e.g. a whole grid field of shape (nx, ny, 3, 3)), as long as
slots are addressed through the ``rank`` argument where one is provided.

Index conventions: axes are 0-based in code (x=0, y=1, z=2); docstrings
use the 1-based crystallographic labels (x=1, y=2, z=3) when quoting a
component such as Gamma_{k;ij}.
"""

from __future__ import annotations

import numpy as np

X, Y, Z = 0, 1, 2

#: Permutation symbol eps_{ijk}, 0-based axes.
EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0
EPS.flags.writeable = False

#: In-plane permutation symbol eps_{alpha beta} := eps_{z alpha beta}.
EPS2 = EPS[Z, :2, :2].copy()
EPS2.flags.writeable = False

DELTA = np.eye(3)
DELTA.flags.writeable = False


def levi_civita(i: int, j: int, k: int) -> float:
    """Permutation sign of (i, j, k); indices are 1-based, in {1, 2, 3}."""
    for idx in (i, j, k):
        if idx not in (1, 2, 3):
            raise ValueError(f"index {idx} out of range, must be in {{1, 2, 3}}")
    return float(EPS[i - 1, j - 1, k - 1])


def _slot_axes(a: np.ndarray, rank: int, m: int, n: int) -> tuple[int, int]:
    if rank < 2 or rank > a.ndim:
        raise ValueError(f"rank {rank} invalid for array of ndim {a.ndim}")
    if m == n or not (0 <= m < rank and 0 <= n < rank):
        raise ValueError(f"slots ({m}, {n}) must be distinct and within rank {rank}")
    off = a.ndim - rank
    return off + m, off + n


def skew_pair(a: np.ndarray, m: int, n: int, rank: int | None = None) -> np.ndarray:
    """Index commutator A_[mn] := A_..m..n.. - A_..n..m.. over slots m, n.

    Slots are 0-based positions among the trailing ``rank`` tensor axes
    (rank defaults to a.ndim, i.e. a bare small tensor).  No 1/2 factor.
    """
    a = np.asarray(a, dtype=float)
    am, an = _slot_axes(a, a.ndim if rank is None else rank, m, n)
    return a - np.swapaxes(a, am, an)


def sym_part(a: np.ndarray, rank: int = 2) -> np.ndarray:
    """Symmetric part (A + A^T)/2 over the last two tensor slots."""
    a = np.asarray(a, dtype=float)
    am, an = _slot_axes(a, rank, rank - 2, rank - 1)
    return 0.5 * (a + np.swapaxes(a, am, an))


def skew_part(a: np.ndarray, rank: int = 2) -> np.ndarray:
    """Antisymmetric part (A - A^T)/2 over the last two tensor slots."""
    a = np.asarray(a, dtype=float)
    am, an = _slot_axes(a, rank, rank - 2, rank - 1)
    return 0.5 * (a - np.swapaxes(a, am, an))
