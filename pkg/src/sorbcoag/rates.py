"""Sorption rates, coagulation kernels, and the explicit-step stability gate.

The sorption rate has the mass-action form V(u,p,r) = k(p,r)*u - l(p,r)
with nonnegative adsorption k and desorption l, and r -> V non-increasing
for every fixed (u, p).  Kernels a(p,r;p',r') are bounded, nonnegative and
symmetric in the two polymer arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .mesh import GridSpec, TimeSpec

# 2-point Gauss-Legendre abscissae on (0,1), weights 1/2 each.
_GAUSS2 = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))

# Relative slack when checking the monotonicity of sampled velocity tables.
_MONOTONE_RTOL = 1e-12


class RateModel:
    """Base sorption-rate model.

    Subclasses implement k(p,r), l(p,r) as numpy-vectorized callables and
    declare a certified sup bound ``K_rate`` for both rates on the domain.
    ``p_max`` is the size cutoff used for domain validation (inf disables
    the upper check).
    """

    K_rate: float
    p_max: float = math.inf

    def k(self, p, r):
        raise NotImplementedError

    def l(self, p, r):
        raise NotImplementedError

    def velocity(self, u, p, r):
        """V(u,p,r) = k(p,r)*u - l(p,r), affine in u."""
        return self.k(p, r) * u - self.l(p, r)

    def dvelocity_dr(self, u, p, r):
        """d/dr of the velocity; central finite difference by default."""
        h = 1e-7
        lo = np.maximum(np.asarray(r) - h, 0.0)
        hi = np.minimum(np.asarray(r) + h, 1.0)
        return (self.velocity(u, p, hi) - self.velocity(u, p, lo)) / (hi - lo)


@dataclass
class ConstantRates(RateModel):
    """Configuration-independent rates k = k0, l = l0."""

    k0: float = 0.0
    l0: float = 0.0
    p_max: float = math.inf

    def __post_init__(self):
        if self.k0 < 0.0 or self.l0 < 0.0:
            raise ValidationError("constant rates must be nonnegative")
        self.K_rate = max(self.k0, self.l0)

    def k(self, p, r):
        return np.broadcast_arrays(np.full_like(np.asarray(r, dtype=float), self.k0), p)[0]

    def l(self, p, r):
        return np.broadcast_arrays(np.full_like(np.asarray(r, dtype=float), self.l0), p)[0]

    def dvelocity_dr(self, u, p, r):
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(p), np.asarray(r)).shape)


@dataclass
class BilinearRates(RateModel):
    """Adsorption proportional to free capacity, desorption to occupancy.

    k(p,r) = k0*p*(1-r) and l(p,r) = l0*r, so V = k0*p*(1-r)*u - l0*r.
    Sup bound on (0,P)x(0,1): max(k0*P, l0).
    """

    k0: float = 4.0
    l0: float = 1.0
    p_max: float = 1.0

    def __post_init__(self):
        if self.k0 < 0.0 or self.l0 < 0.0:
            raise ValidationError("bilinear rate coefficients must be nonnegative")
        if not np.isfinite(self.p_max) or self.p_max <= 0.0:
            raise ValidationError("bilinear rates need a finite positive size cutoff")
        self.K_rate = max(self.k0 * self.p_max, self.l0)

    def k(self, p, r):
        return self.k0 * np.asarray(p) * (1.0 - np.asarray(r))

    def l(self, p, r):
        return np.broadcast_arrays(self.l0 * np.asarray(r, dtype=float), p)[0]

    def dvelocity_dr(self, u, p, r):
        out = -(self.k0 * np.asarray(p) * np.asarray(u) + self.l0)
        return np.broadcast_arrays(out, r)[0]


@dataclass
class LangmuirRates(RateModel):
    """Langmuir-type power laws k = k0*p^a*(1-r)^a, l = l0*p^b*r^b."""

    k0: float = 1.0
    alpha: float = 1.0
    l0: float = 1.0
    beta: float = 1.0
    p_max: float = 1.0

    def __post_init__(self):
        if min(self.k0, self.l0) < 0.0 or min(self.alpha, self.beta) <= 0.0:
            raise ValidationError("Langmuir rates need k0,l0 >= 0 and alpha,beta > 0")
        if not np.isfinite(self.p_max) or self.p_max <= 0.0:
            raise ValidationError("Langmuir rates need a finite positive size cutoff")
        self.K_rate = max(self.k0 * self.p_max ** self.alpha, self.l0 * self.p_max ** self.beta)

    def k(self, p, r):
        return self.k0 * np.asarray(p) ** self.alpha * (1.0 - np.asarray(r)) ** self.alpha

    def l(self, p, r):
        return self.l0 * np.asarray(p) ** self.beta * np.asarray(r) ** self.beta

    def dvelocity_dr(self, u, p, r):
        p = np.asarray(p, dtype=float)
        r = np.asarray(r, dtype=float)
        dk = -self.alpha * self.k0 * p ** self.alpha * (1.0 - r) ** (self.alpha - 1.0)
        dl = self.beta * self.l0 * p ** self.beta * r ** (self.beta - 1.0)
        return dk * np.asarray(u) - dl


class CallableRates(RateModel):
    """User-supplied rates; the caller must certify the sup bound."""

    def __init__(self, k, l, K_rate: float, p_max: float = math.inf, dvel_dr=None):
        self._k = k
        self._l = l
        self.K_rate = float(K_rate)
        self.p_max = float(p_max)
        self._dvel_dr = dvel_dr

    def k(self, p, r):
        return np.asarray(self._k(p, r), dtype=float)

    def l(self, p, r):
        return np.asarray(self._l(p, r), dtype=float)

    def dvelocity_dr(self, u, p, r):
        if self._dvel_dr is not None:
            return np.asarray(self._dvel_dr(u, p, r), dtype=float)
        return super().dvelocity_dr(u, p, r)


def eval_sorption(model: RateModel, u, p, r):
    """Evaluate V(u,p,r) with domain checks on u >= 0, p in [0,p_max], r in [0,1]."""
    u_arr, p_arr, r_arr = np.asarray(u, dtype=float), np.asarray(p, dtype=float), np.asarray(r, dtype=float)
    if np.any(u_arr < 0.0):
        raise DomainError("free-ion concentration u must be nonnegative")
    if np.any(p_arr < 0.0) or np.any(p_arr > model.p_max):
        raise DomainError(f"polymer size p outside [0, {model.p_max}]")
    if np.any(r_arr < 0.0) or np.any(r_arr > 1.0):
        raise DomainError("ion ratio r outside [0, 1]")
    out = model.velocity(u_arr, p_arr, r_arr)
    if not np.all(np.isfinite(out)):
        raise DomainError("sorption rate evaluated to a non-finite value")
    if np.ndim(u) == 0 and np.ndim(p) == 0 and np.ndim(r) == 0:
        return float(out)
    return out


def interface_velocity_table(model: RateModel, u: float, grid: GridSpec) -> np.ndarray:
    """Velocities at r-interfaces: entry (j,i) = V(u, p-edge(j), r-edge(i)).

    Shape (J+1, I+2); column i sits on the interface below cell i.  The
    table must be non-increasing along i for every j (monotone sorption);
    a violation raises ValidationError.
    """
    vel = eval_sorption(model, u, grid.p_edges[: grid.J + 1, None], grid.r_edges[None, :])
    scale = 1.0 + float(np.max(np.abs(vel)))
    if np.any(np.diff(vel, axis=1) > _MONOTONE_RTOL * scale):
        raise ValidationError("velocity table increases with r; monotone sorption hypothesis broken")
    return vel


class KernelModel:
    """Base coagulation kernel with a certified sup bound ``K_kernel``."""

    K_kernel: float

    def cell_average(self, grid: GridSpec) -> np.ndarray:
        """Dense pairwise table of cell means, shape (J+1, I+1, J+1, I+1)."""
        raise NotImplementedError


@dataclass
class ConstantKernel(KernelModel):
    """a = const; cell means equal the constant exactly."""

    value: float = 1.0

    def __post_init__(self):
        if self.value < 0.0:
            raise ValidationError("coagulation kernel must be nonnegative")
        self.K_kernel = self.value

    def cell_average(self, grid: GridSpec) -> np.ndarray:
        n = grid.shape
        return np.full(n + n, self.value)


class SeparableKernel(KernelModel):
    """a(p,r;p',r') = phi(p,r)*phi(p',r'), symmetric by construction.

    Cell means factor into per-cell means of phi, computed with a
    tensorized 2-point Gauss rule (exact through cubic polynomials).
    """

    def __init__(self, phi, K_kernel: float):
        self._phi = phi
        self.K_kernel = float(K_kernel)

    def cell_means_of_factor(self, grid: GridSpec) -> np.ndarray:
        g = _cell_means_2d(self._phi, grid)
        if np.any(g < 0.0):
            raise ValidationError("separable kernel factor has a negative cell mean")
        return g

    def cell_average(self, grid: GridSpec) -> np.ndarray:
        g = self.cell_means_of_factor(grid)
        return np.einsum("ji,km->jikm", g, g)


class TabulatedKernel(KernelModel):
    """Explicit pairwise table of cell means (test-scale grids)."""

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=float)
        if table.ndim != 4 or table.shape[:2] != table.shape[2:]:
            raise ValidationError("kernel table must have shape (J+1, I+1, J+1, I+1)")
        if np.any(table < 0.0):
            raise ValidationError("kernel table has negative entries")
        sym_gap = np.max(np.abs(table - table.transpose(2, 3, 0, 1)))
        if sym_gap > 1e-12 * (1.0 + np.max(table)):
            raise ValidationError("kernel table is not symmetric under pair exchange")
        self.table = table
        self.K_kernel = float(np.max(table)) if table.size else 0.0

    def cell_average(self, grid: GridSpec) -> np.ndarray:
        if self.table.shape[:2] != grid.shape:
            raise ValidationError("kernel table shape does not match the grid")
        return self.table


class CallableKernel(KernelModel):
    """Analytic kernel averaged per pair by a 16-point tensor Gauss rule."""

    def __init__(self, fn, K_kernel: float):
        self._fn = fn
        self.K_kernel = float(K_kernel)

    def cell_average(self, grid: GridSpec) -> np.ndarray:
        pe, re_ = grid.p_edges, grid.r_edges
        pg = pe[: grid.J + 1, None] + np.multiply.outer(np.ones(grid.J + 1), _GAUSS2) * grid.dp
        rg = re_[: grid.I + 1, None] + np.multiply.outer(np.ones(grid.I + 1), _GAUSS2) * grid.dr
        # Mean of fn over cell x cell: equal-weight average of the 2^4 Gauss nodes.
        acc = np.zeros(grid.shape + grid.shape)
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    for d in range(2):
                        acc += self._fn(
                            pg[:, a][:, None, None, None],
                            rg[:, b][None, :, None, None],
                            pg[:, c][None, None, :, None],
                            rg[:, d][None, None, None, :],
                        )
        out = acc / 16.0
        if np.any(out < 0.0):
            raise ValidationError("kernel cell average has negative entries")
        return out


def _cell_means_2d(fn, grid: GridSpec) -> np.ndarray:
    """Per-cell means of fn(p, r) via the tensorized 2-point Gauss rule."""
    pg = grid.p_edges[: grid.J + 1, None] + np.multiply.outer(np.ones(grid.J + 1), _GAUSS2) * grid.dp
    rg = grid.r_edges[: grid.I + 1, None] + np.multiply.outer(np.ones(grid.I + 1), _GAUSS2) * grid.dr
    acc = np.zeros(grid.shape)
    for a in range(2):
        for b in range(2):
            acc += np.asarray(fn(pg[:, a][:, None], rg[:, b][None, :]), dtype=float)
    return acc / 4.0


def kernel_cell_average(kernel: KernelModel, grid: GridSpec) -> np.ndarray:
    """Dense table a_{j,i;j',i'} of kernel means over cell pairs."""
    table = kernel.cell_average(grid)
    if np.any(table < 0.0):
        raise ValidationError("kernel cell average has negative entries")
    return table


@dataclass(frozen=True)
class StabilityReport:
    """A-priori bounds and time-step limits for the explicit scheme.

    ``u_growth_bound`` is the theoretical exp(K_rate*M_in*T)*u_in envelope;
    ``u_bound`` caps it by the total-ion balance rho0 plus the accumulated
    drift allowance, which is the range actually used for ``v_sup``.  The
    two dt limits implement the strict stability inequalities
    4*(dt/dr)*v_sup < 1 and 2*K_kernel*M_in*(1+P)*dt < 1.

    ``dt_max_column`` is the sharper per-column monotonicity limit
    min over initially occupied rows j of p_j*dr/(V+ + V-), which the
    global bound does not imply when the velocity survives as p -> 0;
    automatic step selection respects it (mass never spreads to smaller
    sizes, so the initially occupied rows are the binding ones for the
    whole run).
    """

    m_in: float
    rho0: float
    u_growth_bound: float
    u_bound: float
    v_sup: float
    dt_max_transport: float
    dt_max_coag: float
    dt_max: float
    dt_max_column: float
    dt: float
    transport_ok: bool
    coag_ok: bool

    @property
    def cfl_ok(self) -> bool:
        return self.transport_ok and self.coag_ok

    @property
    def dt_auto_limit(self) -> float:
        """Binding limit for automatic step selection."""
        return min(self.dt_max, self.dt_max_column)


def stability_bounds(
    model: RateModel,
    kernel: KernelModel,
    f_in_field: np.ndarray,
    u_in: float,
    time: TimeSpec,
    grid: GridSpec,
    velocity_margin: float = 1.0,
) -> StabilityReport:
    """Report-only evaluation of the stability gate for a configured run.

    The velocity sup is taken over u in {0, u_bound} and all interface
    points of the grid, exact for rates affine in u and monotone in r;
    ``velocity_margin`` (>= 1) multiplies it to cover off-grid extrema of
    user-supplied models.
    """
    f = np.asarray(f_in_field, dtype=float)
    if np.any(f < 0.0):
        raise ValidationError("initial field must be nonnegative")
    vol = grid.cell_volume
    m_in = float(f.sum() * vol)
    mrp0 = float((grid.p_centers[:, None] * grid.r_centers[None, :] * f).sum() * vol)
    rho0 = u_in + mrp0

    u_growth = math.exp(model.K_rate * m_in * time.T) * u_in
    # Rigorous alternative envelope: u <= rho + |balance drift|, the drift
    # being first order in dr with the coagulation-corner constant.
    drift_allowance = 4.0 * kernel.K_kernel * grid.P * m_in**2 * time.T * grid.dr
    u_bound = min(u_growth, rho0 + drift_allowance)

    vel0 = interface_velocity_table(model, 0.0, grid)
    vel1 = interface_velocity_table(model, u_bound, grid)
    v_sup = float(max(np.max(np.abs(vel0)), np.max(np.abs(vel1)))) * velocity_margin

    dt_tr = grid.dr / (4.0 * v_sup) if v_sup > 0.0 else math.inf
    coag_scale = 2.0 * kernel.K_kernel * m_in * (1.0 + grid.P)
    dt_cg = 1.0 / coag_scale if coag_scale > 0.0 else math.inf
    dt_col = _column_dt_limit(f, vel0, vel1, grid)
    dt = time.dt
    return StabilityReport(
        m_in=m_in,
        rho0=rho0,
        u_growth_bound=u_growth,
        u_bound=u_bound,
        v_sup=v_sup,
        dt_max_transport=dt_tr,
        dt_max_coag=dt_cg,
        dt_max=min(dt_tr, dt_cg),
        dt_max_column=dt_col,
        dt=dt,
        transport_ok=bool(dt < dt_tr),
        coag_ok=bool(dt < dt_cg),
    )


def _column_dt_limit(f: np.ndarray, vel0: np.ndarray, vel1: np.ndarray, grid: GridSpec) -> float:
    """Per-column monotone-update limit min_j p_j*dr / max_i (V+ + V-).

    Only rows that carry mass count: coagulation moves mass to larger
    sizes and transport never changes the size, so rows empty at t = 0
    stay empty.  The per-cell speed pairs the upwind V+ below with the
    V- above; boundary interfaces never flux and are excluded.
    """
    occupied = f.sum(axis=1) > 0.0
    if not np.any(occupied):
        return math.inf
    worst = 0.0
    for vel in (vel0, vel1):
        vp = np.maximum(vel, 0.0)
        vm = np.maximum(-vel, 0.0)
        eff = vp[:, : grid.I + 1].copy()      # V+ at the lower interface of cell i
        eff[:, 0] = 0.0                       # no flux through the bottom boundary
        upper = vm[:, 1 : grid.I + 2].copy()  # V- at the upper interface
        upper[:, grid.I] = 0.0                # nor through the top one
        speed = (eff + upper).max(axis=1)
        ratio = speed[occupied] / grid.p_centers[occupied]
        worst = max(worst, float(ratio.max()))
    return grid.dr / worst if worst > 0.0 else math.inf
