"""Explicit update of the coupled distribution/free-ion state.

One step advances the cell averages f and the free-ion concentration u by

    p_j * f_new[j,i] = p_j * f[j,i] - (dt/dr) * (F[j,i+1/2] - F[j,i-1/2])
                       + dt/(dr*dp) * C[j,i]
    u_new = u - dt * dr * dp * sum_{j, i=0..I} F[j,i-1/2]

with p_j the cell center, upwind fluxes F from the interface velocities at
the current u, and the conservative coagulation increment C.  Both strict
stability inequalities are enforced before any mutation: the transport
bound against the realized velocity table and the coagulation bound
2*K*M_in*(1+P)*dt < 1 against the initial zeroth moment.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coagulation import CoagTables, coag_increment
from .diagnostics import DiagnosticsRecord, moments
from .errors import CflError, NumericalError, ValidationError
from .mesh import GridSpec, TimeSpec
from .rates import RateModel, StabilityReport, interface_velocity_table
from .transport import transport_increment, upwind_fluxes

logger = logging.getLogger(__name__)

# The global stability gate does not control the effective per-column
# ratio V/p_j as p -> 0, so cells carrying a negligible sliver of mass can
# undershoot zero there; clamping is allowed while the zeroth moment
# injected per step stays below _CLAMP_MASS_RTOL of the current moment,
# anything beyond that aborts as a genuine stability breach.  The free-ion
# value only ever undershoots by rounding (_CLAMP_RTOL of its scale).
_CLAMP_RTOL = 1e-14
_CLAMP_MASS_RTOL = 1e-9


@dataclass
class SimState:
    """Distribution field, free-ion concentration, and step clock."""

    f: np.ndarray
    u: float
    n: int = 0
    t: float = 0.0


@dataclass
class StepStats:
    """Negativity-clamp bookkeeping for one step."""

    clamp_count: int = 0
    max_clamped: float = 0.0
    clamped_mass: float = 0.0


def validate_field(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValidationError(f"field shape {f.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(f)):
        raise ValidationError("field contains non-finite entries")
    if np.any(f < 0.0):
        raise ValidationError("field contains negative entries")
    return f


def discretize_initial(f_in, grid: GridSpec) -> np.ndarray:
    """Cell averages of a pointwise initial density via 2x2 Gauss points."""
    off = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))
    acc = np.zeros(grid.shape)
    for a in off:
        pg = (grid.p_edges[: grid.J + 1] + a * grid.dp)[:, None]
        for b in off:
            rg = (grid.r_edges[: grid.I + 1] + b * grid.dr)[None, :]
            vals = np.asarray(f_in(pg, rg), dtype=float)
            if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
                raise ValidationError("initial density sampled negative or non-finite")
            acc += vals
    return acc / 4.0


def floor_field(f: np.ndarray, rel: float) -> np.ndarray:
    """Zero every cell below rel * max(f).

    Subnormal tails seed a rectified instability in size columns whose
    per-column speed ratio exceeds the global stability bound; hard zeros
    there stay zero for the whole run (no operator repopulates smaller
    sizes), which is also how the bundled experiment's initial data is
    meant to be read ("vanishes" near the boundary).
    """
    if rel <= 0.0:
        return f
    out = f.copy()
    out[out < rel * out.max(initial=0.0)] = 0.0
    return out


def normalize_to_target(f: np.ndarray, grid: GridSpec, target: float) -> tuple[np.ndarray, float]:
    """Scale the field so its weighted moment sum r_i p_j f dp dr hits target."""
    f = validate_field(f, grid)
    if target <= 0.0:
        raise ValidationError(f"normalization target must be positive, got {target}")
    current = float((grid.p_centers[:, None] * grid.r_centers[None, :] * f).sum() * grid.cell_volume)
    if current <= 0.0:
        raise ValidationError("cannot normalize a field with zero weighted moment")
    m = target / current
    return f * m, m


def _clamp_negatives(arr: np.ndarray, grid: GridSpec, m0_prev: float, stats: StepStats, n: int) -> np.ndarray:
    neg = arr < 0.0
    if not np.any(neg):
        return arr
    worst = float(-arr[neg].min())
    injected = float(-arr[neg].sum()) * grid.cell_volume
    if injected > _CLAMP_MASS_RTOL * max(m0_prev, 1e-300):
        raise NumericalError(
            f"clamping negatives at step {n} would inject {injected:.3e} of zeroth moment "
            f"(worst cell {-worst:.3e}); stability breach on non-negligible mass"
        )
    stats.clamp_count += int(neg.sum())
    stats.max_clamped = max(stats.max_clamped, worst)
    stats.clamped_mass += injected
    out = arr.copy()
    out[neg] = 0.0
    return out


def step(
    state: SimState,
    model: RateModel,
    tables: CoagTables,
    grid: GridSpec,
    dt: float,
    m_in: float,
) -> tuple[SimState, StepStats]:
    """One explicit update; refuses (without mutating) if dt fails the gate.

    ``m_in`` is the zeroth moment of the initial data, the run-level
    constant entering the coagulation stability bound.
    """
    if dt <= 0.0 or not np.isfinite(dt):
        raise CflError(f"time step must be positive and finite, got {dt}")
    vel = interface_velocity_table(model, state.u, grid)
    v_now = float(np.max(np.abs(vel)))
    if 4.0 * dt / grid.dr * v_now >= 1.0:
        raise CflError(
            f"transport stability violated at step {state.n}: "
            f"4*dt/dr*|V| = {4.0 * dt / grid.dr * v_now:.6g} >= 1"
        )
    coag_lhs = 2.0 * tables.K_kernel * m_in * (1.0 + grid.P) * dt
    if coag_lhs >= 1.0:
        raise CflError(f"coagulation stability violated: 2*K*M_in*(1+P)*dt = {coag_lhs:.6g} >= 1")

    flux = upwind_fluxes(state.f, vel, grid)
    div = transport_increment(flux, grid)
    pc = grid.p_centers[:, None]
    f_new = state.f - (dt / pc) * div
    if tables.K_kernel > 0.0:
        cji = coag_increment(state.f, tables, grid)
        f_new = f_new + (dt / (grid.dr * grid.dp)) * cji / pc

    # The u update sums the interface fluxes at i-1/2 for i = 0..I; the
    # i = 0 term is the zero boundary column.
    u_new = state.u - dt * grid.cell_volume * float(flux[:, : grid.I + 1].sum())

    if not np.all(np.isfinite(f_new)) or not np.isfinite(u_new):
        raise NumericalError(f"non-finite state at step {state.n}")
    stats = StepStats()
    f_new = _clamp_negatives(f_new, grid, float(state.f.sum()) * grid.cell_volume, stats, state.n)
    if u_new < 0.0:
        if -u_new > _CLAMP_RTOL * max(state.u, 1.0):
            raise NumericalError(f"free-ion concentration went negative ({u_new:.3e}) at step {state.n}")
        stats.clamp_count += 1
        u_new = 0.0
    return SimState(f=f_new, u=u_new, n=state.n + 1, t=(state.n + 1) * dt), stats


@dataclass
class RunResult:
    """Per-step diagnostics series plus the requested field snapshots."""

    final: SimState
    series: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    rho0: float = 0.0
    max_clamped: float = 0.0
    clamped_mass: float = 0.0


def run(
    model: RateModel,
    tables: CoagTables,
    grid: GridSpec,
    time: TimeSpec,
    f0: np.ndarray,
    u0: float,
    snapshot_steps: tuple[int, ...] = (0,),
    report: StabilityReport | None = None,
) -> RunResult:
    """Execute N explicit steps, recording diagnostics at every step.

    When a stability report is supplied, the a-priori envelope u <= u_bound
    is asserted along the run (a breach means the gate bounds were wrong).
    """
    f0 = validate_field(f0, grid)
    if u0 < 0.0:
        raise ValidationError(f"initial free-ion concentration must be nonnegative, got {u0}")
    logger.debug("run: %d steps of dt = %g on %s cells", time.N, time.dt, grid.shape)
    m_in = float(f0.sum() * grid.cell_volume)
    state = SimState(f=f0.copy(), u=float(u0))
    m0, m1, mrp = moments(state.f, grid)
    rho0 = state.u + mrp
    result = RunResult(final=state, rho0=rho0)
    result.series.append(DiagnosticsRecord(n=0, t=0.0, u=state.u, m0=m0, m1=m1, mrp=mrp, rho=rho0, drift=0.0, clamp_count=0))
    snap_set = set(snapshot_steps)
    if 0 in snap_set:
        result.snapshots[0] = state.f.copy()

    dt = time.dt
    for n in range(time.N):
        state, stats = step(state, model, tables, grid, dt, m_in)
        result.max_clamped = max(result.max_clamped, stats.max_clamped)
        result.clamped_mass += stats.clamped_mass
        m0, m1, mrp = moments(state.f, grid)
        rho = state.u + mrp
        result.series.append(
            DiagnosticsRecord(
                n=state.n, t=state.t, u=state.u, m0=m0, m1=m1, mrp=mrp,
                rho=rho, drift=rho - rho0, clamp_count=stats.clamp_count,
            )
        )
        if report is not None and state.u > report.u_bound * (1.0 + 1e-12):
            raise NumericalError(
                f"free-ion concentration {state.u:.6g} exceeded the a-priori bound "
                f"{report.u_bound:.6g} at step {state.n}"
            )
        if state.n in snap_set:
            result.snapshots[state.n] = state.f.copy()
    result.final = state
    return result
