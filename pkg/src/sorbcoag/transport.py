"""First-order upwind fluxes for the sorption transport in the r direction.

Fluxes are stored interface-indexed with the two boundary rows kept
exactly zero, so the no-flux boundary is an assertable invariant rather
than a special case in the stepper.  Columns j are independent.
"""
from __future__ import annotations

import numpy as np

from .mesh import GridSpec


def upwind_fluxes(f: np.ndarray, vel: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Upwind fluxes F at r-interfaces, shape (J+1, I+2).

    Interior interface i (below cell i, i = 1..I):
    F[j,i] = max(V,0)*f[j,i-1] + min(V,0)*f[j,i].  Boundary columns 0 and
    I+1 are zero regardless of the velocity there.
    """
    J, I = grid.J, grid.I
    flux = np.zeros((J + 1, I + 2))
    v = vel[:, 1 : I + 1]
    flux[:, 1 : I + 1] = np.maximum(v, 0.0) * f[:, : I] + np.minimum(v, 0.0) * f[:, 1 : I + 1]
    return flux


def transport_increment(flux: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Per-cell divergence D[j,i] = (F[j,i+1] - F[j,i]) / dr.

    Telescopes to zero over every column because the boundary fluxes
    vanish; the stepper applies the -dt/p_j factor.
    """
    return np.diff(flux, axis=1) / grid.dr
