"""Moments, ion balance, and per-column concentration statistics.

The total ion balance rho = u + sum r_i p_j f_ji dp dr is constant for the
continuous model; the scheme lets it drift at first order in dr through
the coagulation corner terms, and pure transport keeps it exactly (the u
update is the negative of the weighted-moment update by construction).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import ValidationError
from .mesh import GridSpec
from .rates import RateModel, eval_sorption

# Columns carrying less than this fraction of the field L1 mass report
# their r-statistics as absent (NaN).
_EMPTY_COLUMN_RTOL = 1e-14


@dataclass
class DiagnosticsRecord:
    """One per-step row of the run series."""

    n: int
    t: float
    u: float
    m0: float
    m1: float
    mrp: float
    rho: float
    drift: float
    clamp_count: int


@dataclass
class ColumnProfile:
    """Mass, mean and spread of the ion ratio per size column."""

    mass: np.ndarray      # per-column r-integral, sum_i f * dr
    rbar: np.ndarray      # mass-weighted mean r (NaN where empty)
    rstd: np.ndarray      # mass-weighted std of r (NaN where empty)
    r_null: np.ndarray    # sorption equilibrium ratio per column


def moments(f: np.ndarray, grid: GridSpec) -> tuple[float, float, float]:
    """Zeroth, first (p-weighted) and mixed (r*p-weighted) moments."""
    vol = grid.cell_volume
    m0 = float(f.sum() * vol)
    m1 = float((grid.p_centers[:, None] * f).sum() * vol)
    mrp = float((grid.p_centers[:, None] * grid.r_centers[None, :] * f).sum() * vol)
    return m0, m1, mrp


def balance(state, grid: GridSpec, rho0: float) -> tuple[float, float]:
    """Total ion balance rho = u + Mrp and its drift from step 0."""
    _, _, mrp = moments(state.f, grid)
    rho = state.u + mrp
    return rho, rho - rho0


def nullcline(model: RateModel, u: float, grid: GridSpec) -> np.ndarray:
    """Sorption-equilibrium ratio r(p_j) per column, by bisection to 1e-12.

    Requires r -> V(u,p,.) non-increasing; when V has no sign change on a
    column the boundary with the smaller |V| is returned.
    """
    out = np.empty(grid.J + 1)
    for j, p in enumerate(grid.p_centers):
        samples = eval_sorption(model, u, np.full(grid.I + 2, p), grid.r_edges)
        scale = 1.0 + float(np.max(np.abs(samples)))
        if np.any(np.diff(samples) > 1e-12 * scale):
            raise ValidationError(f"velocity is not non-increasing in r at p = {p}")
        v0 = eval_sorption(model, u, p, 0.0)
        v1 = eval_sorption(model, u, p, 1.0)
        if v0 <= 0.0:
            out[j] = 0.0
        elif v1 >= 0.0:
            out[j] = 0.0 if abs(v0) < abs(v1) else 1.0
        else:
            out[j] = bisect(lambda r: eval_sorption(model, u, p, r), 0.0, 1.0, xtol=1e-12)
    return out


def column_profile(f: np.ndarray, grid: GridSpec, r_null: np.ndarray) -> ColumnProfile:
    """Mass-weighted r statistics per column against the equilibrium curve."""
    mass = f.sum(axis=1) * grid.dr
    total = float(np.abs(f).sum() * grid.cell_volume)
    rbar = np.full(grid.J + 1, np.nan)
    rstd = np.full(grid.J + 1, np.nan)
    occupied = mass * grid.dp > _EMPTY_COLUMN_RTOL * total
    if np.any(occupied):
        w = f[occupied] * grid.dr
        rbar[occupied] = (w * grid.r_centers[None, :]).sum(axis=1) / mass[occupied]
        var = (w * (grid.r_centers[None, :] - rbar[occupied][:, None]) ** 2).sum(axis=1) / mass[occupied]
        rstd[occupied] = np.sqrt(np.maximum(var, 0.0))
    return ColumnProfile(mass=mass, rbar=rbar, rstd=rstd, r_null=np.asarray(r_null, dtype=float))


def concentration_distance(profile: ColumnProfile) -> float:
    """Mass-weighted mean |rbar - r_null|; shrinks as the distribution
    collapses onto the equilibrium curve."""
    ok = np.isfinite(profile.rbar)
    if not np.any(ok) or profile.mass[ok].sum() <= 0.0:
        return 0.0
    gaps = np.abs(profile.rbar[ok] - profile.r_null[ok])
    return float((profile.mass[ok] * gaps).sum() / profile.mass[ok].sum())
