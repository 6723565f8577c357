"""Brute-force oracles for the test suite; nothing here ships in the CLI.

``naive_coag`` evaluates the coagulation corner fluxes by their literal
quadruple sums and differences them, giving a path into the increment that
shares nothing with the production pair loop except the target-binning
rule.  ``transport_reference`` integrates the sorption characteristics ODE
with a fixed-step 4th-order scheme, providing an exact (up to ODE error)
profile for pure-transport columns under a frozen free-ion history.
``smoluchowski_m0`` is the closed-form zeroth moment for a constant kernel
far from the size cutoff.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coagulation import CLAMP, _check_policy, target_index
from .errors import OracleError
from .mesh import GridSpec
from .rates import RateModel

_NAIVE_LIMIT = 16


@dataclass
class OracleReport:
    """Difference summary between a tested field and its oracle."""

    max_abs_diff: float
    rel_l1_diff: float
    worst_cell: tuple[int, int]


def compare_fields(tested: np.ndarray, oracle: np.ndarray) -> OracleReport:
    diff = np.abs(np.asarray(tested) - np.asarray(oracle))
    denom = max(float(np.abs(oracle).sum()), 1e-300)
    worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return OracleReport(
        max_abs_diff=float(diff.max()),
        rel_l1_diff=float(diff.sum() / denom),
        worst_cell=(int(worst[0]), int(worst[1])),
    )


def _naive_targets(grid: GridSpec, policy: str) -> np.ndarray:
    """Per-ordered-pair target cell, -1 where the pair is discarded.

    Shares the scalar binning rule with the production paths (same
    overflow and zero-denominator handling); the independence of this
    oracle lies in the literal summation structure, not the binning.
    """
    J, I = grid.J, grid.I
    t4 = np.full((J + 1, I + 1, J + 1, I + 1), -1, dtype=np.int64)
    for jp in range(J + 1):
        for i1 in range(I + 1):
            for jpp in range(J + 1 - jp):
                for i2 in range(I + 1):
                    t4[jp, i1, jpp, i2] = target_index(grid, jp, i1, jpp, i2, policy)
    return t4


def naive_corner_fluxes(
    f: np.ndarray,
    kernel_table: np.ndarray,
    grid: GridSpec,
    policy: str = CLAMP,
    gain_only: bool = False,
) -> np.ndarray:
    """Corner fluxes from the literal quadruple sums, shape (J+2, I+2).

    Only meant for small grids (J, I <= 16); the cost is quartic.  The
    boundary corners come out exactly zero from the empty index ranges.
    """
    _check_policy(policy)
    J, I = grid.J, grid.I
    if J > _NAIVE_LIMIT or I > _NAIVE_LIMIT:
        raise OracleError(f"naive corner fluxes refused beyond J,I <= {_NAIVE_LIMIT}")
    f = np.asarray(f, dtype=float)
    a4 = np.asarray(kernel_table, dtype=float)
    vol2 = grid.cell_volume ** 2

    w4 = grid.p_centers[:, None, None, None] * a4 * f[:, :, None, None] * f[None, None, :, :] * vol2
    t4 = _naive_targets(grid, policy)
    jsum = np.arange(J + 1)[:, None] + np.arange(J + 1)[None, :]          # j' + j''
    jp_idx = np.arange(J + 1)[:, None, None, None]
    i1_idx = np.arange(I + 1)[None, :, None, None]
    jpp_idx = np.arange(J + 1)[None, None, :, None]

    corners = np.zeros((J + 2, I + 2))
    for jc in range(J + 2):
        for ic in range(I + 2):
            gain_mask = (jsum[:, None, :, None] <= jc - 1) & (t4 >= 0) & (t4 <= ic - 1)
            val = float(w4[gain_mask].sum())
            if not gain_only:
                loss_mask = (jp_idx <= jc - 1) & (i1_idx <= ic - 1) & (jpp_idx <= J - jp_idx)
                val -= float(w4[np.broadcast_to(loss_mask, w4.shape)].sum())
            corners[jc, ic] = val
    return corners


def naive_coag(
    f: np.ndarray,
    kernel_table: np.ndarray,
    grid: GridSpec,
    policy: str = CLAMP,
    gain_only: bool = False,
) -> np.ndarray:
    """Coagulation increment differenced from the literal corner fluxes."""
    c = naive_corner_fluxes(f, kernel_table, grid, policy, gain_only=gain_only)
    return (c[1:, 1:] - c[1:, :-1]) - (c[:-1, 1:] - c[:-1, :-1])


def transport_reference(
    f_in,
    model: RateModel,
    u_path,
    p: float,
    t: float,
    r_points: np.ndarray,
    p_divisor: float | None = None,
    n_steps: int = 512,
) -> np.ndarray:
    """Pure-transport profile at time t for one size column, by characteristics.

    For each requested ratio r the characteristic ODE
    dR/ds = V(u(s), p, R)/p_div is integrated backward to s = 0 with
    fixed-step RK4, jointly with the exponential volume factor
    exp(-int (1/p_div) dV/dr ds).  Points whose backward trajectory leaves
    (0,1) carry the zero boundary density; an exit against the inflow sign
    of V marks an ill-posed model and raises OracleError.

    ``p_divisor`` defaults to p; passing the cell-center size of a column
    whose interface velocities are evaluated at its lower edge mirrors the
    finite-volume update exactly.
    """
    if t < 0.0:
        raise OracleError("transport reference needs t >= 0")
    p_div = p if p_divisor is None else p_divisor
    r = np.asarray(r_points, dtype=float).copy()
    amp = np.zeros_like(r)          # accumulated int (1/p_div) dV/dr ds
    alive = np.ones(r.shape, dtype=bool)
    value_zero = np.zeros(r.shape, dtype=bool)

    if t > 0.0:
        h = t / n_steps
        for k in range(n_steps):
            s = t - k * h

            def rhs(si, ri):
                u = u_path(si)
                return (
                    np.asarray(model.velocity(u, p, np.clip(ri, 0.0, 1.0)), dtype=float) / p_div,
                    np.asarray(model.dvelocity_dr(u, p, np.clip(ri, 0.0, 1.0)), dtype=float) / p_div,
                )

            k1r, k1a = rhs(s, r)
            k2r, k2a = rhs(s - 0.5 * h, r - 0.5 * h * k1r)
            k3r, k3a = rhs(s - 0.5 * h, r - 0.5 * h * k2r)
            k4r, k4a = rhs(s - h, r - h * k3r)
            step_r = (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
            step_a = (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            r = np.where(alive, r - step_r, r)
            amp = np.where(alive, amp + step_a, amp)

            exited_low = alive & (r < 0.0)
            exited_high = alive & (r > 1.0)
            if np.any(exited_low):
                if model.velocity(u_path(s - h), p, 0.0) < 0.0:
                    raise OracleError("characteristic left through r=0 where V(.,0) < 0")
                value_zero |= exited_low
                alive &= ~exited_low
            if np.any(exited_high):
                if model.velocity(u_path(s - h), p, 1.0) > 0.0:
                    raise OracleError("characteristic left through r=1 where V(.,1) > 0")
                value_zero |= exited_high
                alive &= ~exited_high

    out = np.zeros(r.shape)
    if np.any(alive):
        vals = np.asarray(f_in(p, r[alive]), dtype=float)
        out[alive] = vals * np.exp(-amp[alive])
    out[value_zero] = 0.0
    return out


def smoluchowski_m0(m0_initial: float, a_const: float, t: float) -> float:
    """Zeroth moment of constant-kernel coagulation away from the cutoff."""
    return m0_initial / (1.0 + 0.5 * a_const * m0_initial * t)
