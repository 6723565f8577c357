"""Conservative binary-coagulation increment on the truncated size grid.

A merging pair of cells (j',i') + (j'',i'') with j'+j'' <= J deposits its
gain in row j'+j'' at the r-cell i# selected by the discrete mixed ratio

    V# = (r-edge(i'+1)*p-edge(j'+1) + r-edge(i''+1)*p-edge(j''+1))
         / (p-edge(j') + p-edge(j''))

via i# = floor(V#/dr) while V# < 1.  The continuous mixed ratio always
lies in (0,1), so V# >= 1 is a pure discretization artifact; the default
``clamp`` policy assigns such pairs to the top cell i = I, which restores
exact first-moment conservation, while ``drop`` discards them as the
formula reads literally and leaks first moment (kept to study the leak).
The pair (j'=j''=0) divides by zero; its V# falls back to cell centers,
(r-center(i') + r-center(i''))/2, which is always in (0,1).

Two code paths compute the same increment: the reordered pair sum
(``coag_increment``) and the corner-flux double difference
(``coag_flux_form``); they are mutual oracles for each other and for the
brute-force reference implementation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .mesh import GridSpec
from .rates import (
    CallableKernel,
    ConstantKernel,
    KernelModel,
    SeparableKernel,
    TabulatedKernel,
    kernel_cell_average,
)

logger = logging.getLogger(__name__)

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

CLAMP = "clamp"
DROP = "drop"

# Precompute pair->target tables up to this many entries; recompute per
# call above it (the table is loop-invariant but O(J^2 I^2 / 2) large).
_AUTO_TARGET_LIMIT = 20_000_000

# Materializing a dense 4-D kernel table beyond this is refused.
_DENSE_KERNEL_LIMIT = 20_000_000


def _check_policy(policy: str) -> None:
    if policy not in (CLAMP, DROP):
        raise ValidationError(f"unknown overflow policy {policy!r}; use 'clamp' or 'drop'")


def _scaled_edge_terms(grid: GridSpec, jp: int, jpp: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair binning terms sa[i1], sb[i2] with i# = int(sa + sb).

    The mixed ratio is binned in units of dr, folding the division by the
    pair denominator into one precomputed scale so every code path (table
    builder, jit loop, scalar lookup, brute-force oracle) evaluates the
    identical float expression; the scaled sum reaching I+1 marks V# >= 1.
    """
    ep, er, rc, dr = grid.p_edges, grid.r_edges, grid.r_centers, grid.dr
    den = ep[jp] + ep[jpp]
    if den > 0.0:
        scale = 1.0 / (den * dr)
        return er[1:] * ep[jp + 1] * scale, er[1:] * ep[jpp + 1] * scale
    # both smallest rows: fall back to cell centers, always below 1
    half = 0.5 / dr
    return rc * half, rc * half


def _target_block(grid: GridSpec, jp: int, policy: str) -> np.ndarray:
    """Flat target indices for all ordered pairs with first row jp.

    Layout: entry [jpp, i1, i2] (flattened C-order, jpp = 0..J-jp) holds
    (jp+jpp)*(I+1) + i# for the pair (jp,i1),(jpp,i2); overflowing pairs
    hold the trash index (J+1)*(I+1) under the drop policy.
    """
    J, I = grid.J, grid.I
    nr = J - jp + 1
    vs = np.empty((nr, I + 1, I + 1))
    for jpp in range(nr):
        sa, sb = _scaled_edge_terms(grid, jp, jpp)
        vs[jpp] = sa[:, None] + sb[None, :]
    # truncation is floor for nonnegative values; min() realizes clamping
    ish = np.minimum(vs.astype(np.int64), I)
    flat = (jp + np.arange(nr))[:, None, None] * (I + 1) + ish
    if policy == DROP:
        flat[vs >= I + 1.0] = (J + 1) * (I + 1)
    return flat.reshape(-1).astype(np.int32)


def vsharp(grid: GridSpec, jp: int, i1: int, jpp: int, i2: int) -> float:
    """Discrete mixed ratio V# for one ordered pair (center fallback at 0+0)."""
    ep, er = grid.p_edges, grid.r_edges
    den = ep[jp] + ep[jpp]
    if den == 0.0:
        return 0.5 * (grid.r_centers[i1] + grid.r_centers[i2])
    return (er[i1 + 1] * ep[jp + 1] + er[i2 + 1] * ep[jpp + 1]) / den


def target_index(grid: GridSpec, jp: int, i1: int, jpp: int, i2: int, policy: str = CLAMP) -> int:
    """Receiving r-cell index for one pair; -1 marks overflow under drop."""
    _check_policy(policy)
    sa, sb = _scaled_edge_terms(grid, jp, jpp)
    vs = sa[i1] + sb[i2]
    if vs >= grid.I + 1.0:
        return grid.I if policy == CLAMP else -1
    return min(int(vs), grid.I)


def precompute_targets(grid: GridSpec, policy: str = CLAMP) -> tuple[np.ndarray, ...]:
    """Pair->target index tables, one flat int32 block per first-row jp."""
    _check_policy(policy)
    return tuple(_target_block(grid, jp, policy) for jp in range(grid.J + 1))


@dataclass(eq=False)
class CoagTables:
    """Kernel cell means plus pair-target bookkeeping for one grid.

    ``kind`` records the kernel structure exploited by the hot loop:
    'constant' (scalar), 'separable' (per-cell factor g with a = g*g'),
    or 'dense' (explicit 4-D table, test-scale grids only).
    """

    policy: str
    kernel: KernelModel
    kind: str
    a_value: float = 0.0
    g: np.ndarray | None = None
    dense: np.ndarray | None = None
    targets: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    @property
    def K_kernel(self) -> float:
        return self.kernel.K_kernel

    def target_block(self, grid: GridSpec, jp: int) -> np.ndarray:
        if self.targets is not None:
            return self.targets[jp]
        return _target_block(grid, jp, self.policy)


def build_coag_tables(
    kernel: KernelModel,
    grid: GridSpec,
    policy: str = CLAMP,
    precompute: bool | str = "auto",
) -> CoagTables:
    """Classify the kernel, average it onto cells, and prepare targets.

    ``precompute`` controls the pair->target tables: True stores them,
    False recomputes per call, 'auto' stores them only while the total
    entry count stays moderate.
    """
    _check_policy(policy)
    if isinstance(kernel, ConstantKernel):
        tabs = CoagTables(policy=policy, kernel=kernel, kind="constant", a_value=kernel.value)
    elif isinstance(kernel, SeparableKernel):
        tabs = CoagTables(policy=policy, kernel=kernel, kind="separable", g=kernel.cell_means_of_factor(grid))
    elif isinstance(kernel, (TabulatedKernel, CallableKernel)):
        n = (grid.J + 1) ** 2 * (grid.I + 1) ** 2
        if n > _DENSE_KERNEL_LIMIT:
            raise ValidationError(
                f"dense kernel table would hold {n} entries; use a constant or separable kernel at this resolution"
            )
        tabs = CoagTables(policy=policy, kernel=kernel, kind="dense", dense=kernel_cell_average(kernel, grid))
    else:
        raise ValidationError(f"unsupported kernel model {type(kernel).__name__}")

    if precompute == "auto":
        n_pairs = (grid.J + 1) * (grid.J + 2) // 2 * (grid.I + 1) ** 2
        precompute = n_pairs <= _AUTO_TARGET_LIMIT
    if precompute:
        tabs.targets = precompute_targets(grid, policy)
    logger.debug(
        "coagulation tables: kind=%s policy=%s targets=%s backend=%s",
        tabs.kind, policy, "stored" if precompute else "recomputed",
        "numba" if _HAVE_NUMBA else "numpy",
    )
    return tabs


# ---------------------------------------------------------------------------
# gain scatter backends
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def _gain_scatter_jit(f, ep, er, rc, pc, dr, vol2, J, I, clamp, aval):
        # out[:ncell] accumulates per-cell gain row-major; out[ncell] holds
        # the gain discarded under the drop policy.
        ncell = (J + 1) * (I + 1)
        out = np.zeros(ncell + 1)
        occupied = np.zeros(J + 1, dtype=np.bool_)
        for j in range(J + 1):
            for i in range(I + 1):
                if f[j, i] != 0.0:
                    occupied[j] = True
                    break
        # per-pair scaled edge terms: floor((a1 + b2)/den/dr) becomes
        # int(sa[i1] + sb[i2]) with overflow at >= I+1
        sa = np.empty(I + 1)
        sb = np.empty(I + 1)
        top = float(I + 1)
        for jp in range(J + 1):
            if not occupied[jp]:
                continue
            base = pc[jp] * aval * vol2
            pe1 = ep[jp + 1]
            for jpp in range(J - jp + 1):
                if not occupied[jpp]:
                    continue
                den = ep[jp] + ep[jpp]
                pe2 = ep[jpp + 1]
                rowoff = (jp + jpp) * (I + 1)
                if den > 0.0:
                    scale = 1.0 / (den * dr)
                    for i in range(I + 1):
                        sa[i] = er[i + 1] * pe1 * scale
                        sb[i] = er[i + 1] * pe2 * scale
                else:
                    half = 0.5 / dr
                    for i in range(I + 1):
                        sa[i] = rc[i] * half
                        sb[i] = rc[i] * half
                for i1 in range(I + 1):
                    w1 = base * f[jp, i1]
                    if w1 == 0.0:
                        continue
                    a1 = sa[i1]
                    for i2 in range(I + 1):
                        f2 = f[jpp, i2]
                        if f2 == 0.0:
                            continue
                        vs = a1 + sb[i2]
                        w = w1 * f2
                        if vs >= top:
                            if clamp:
                                out[rowoff + I] += w
                            else:
                                out[ncell] += w
                        else:
                            t = int(vs)
                            if t > I:
                                t = I
                            out[rowoff + t] += w
        return out


def _gain_weights_block(f: np.ndarray, tables: CoagTables, grid: GridSpec, jp: int) -> np.ndarray:
    """Gain weights for the ordered pairs (jp,i1),(jpp,i2), layout (jpp,i1,i2)."""
    nr = grid.J - jp + 1
    vol2 = grid.cell_volume ** 2
    pc = grid.p_centers
    if tables.kind == "constant":
        w = tables.a_value * pc[jp] * vol2 * (f[jp][None, :, None] * f[:nr, None, :])
    elif tables.kind == "separable":
        u = tables.g * f
        w = pc[jp] * vol2 * (u[jp][None, :, None] * u[:nr, None, :])
    else:
        w = pc[jp] * vol2 * np.einsum("ikm,i,km->kim", tables.dense[jp, :, :nr, :], f[jp], f[:nr])
    return w


def _gain_by_cell_numpy(f, tables: CoagTables, grid: GridSpec) -> tuple[np.ndarray, float]:
    ncell = (grid.J + 1) * (grid.I + 1)
    acc = np.zeros(ncell + 1)
    for jp in range(grid.J + 1):
        w = _gain_weights_block(f, tables, grid, jp)
        acc += np.bincount(tables.target_block(grid, jp), weights=w.ravel(), minlength=ncell + 1)
    return acc[:ncell].reshape(grid.shape), float(acc[ncell])


def _gain_by_cell(f, tables: CoagTables, grid: GridSpec, backend: str | None) -> tuple[np.ndarray, float]:
    if backend is None:
        backend = "numba" if (_HAVE_NUMBA and tables.kind in ("constant", "separable")) else "numpy"
    if backend == "numba" and _HAVE_NUMBA and tables.kind in ("constant", "separable"):
        if tables.kind == "constant":
            fx, aval = f, tables.a_value
        else:
            fx, aval = tables.g * f, 1.0
        out = _gain_scatter_jit(
            np.ascontiguousarray(fx),
            grid.p_edges,
            grid.r_edges,
            grid.r_centers,
            grid.p_centers,
            grid.dr,
            grid.cell_volume ** 2,
            grid.J,
            grid.I,
            tables.policy == CLAMP,
            aval,
        )
        return out[:-1].reshape(grid.shape), float(out[-1])
    return _gain_by_cell_numpy(f, tables, grid)


def _loss_factor(f: np.ndarray, tables: CoagTables, grid: GridSpec) -> np.ndarray:
    """Truncated loss integral L[j,i] = sum_{j'<=J-j, i'} a f' dp dr."""
    vol = grid.cell_volume
    J = grid.J
    if tables.kind == "constant":
        prefix = np.cumsum(f.sum(axis=1)) * vol          # over j' <= m
        return tables.a_value * prefix[J - np.arange(J + 1)][:, None] * np.ones((1, grid.I + 1))
    if tables.kind == "separable":
        prefix = np.cumsum((tables.g * f).sum(axis=1)) * vol
        return tables.g * prefix[J - np.arange(J + 1)][:, None]
    partial = np.einsum("jikm,km->jik", tables.dense, f) * vol    # summed over i', per j'
    prefix = np.cumsum(partial, axis=2)
    return prefix[np.arange(J + 1), :, (J - np.arange(J + 1))]


def _loss_by_cell(f: np.ndarray, tables: CoagTables, grid: GridSpec) -> np.ndarray:
    return grid.p_centers[:, None] * f * grid.cell_volume * _loss_factor(f, tables, grid)


def coag_increment(
    f: np.ndarray,
    tables: CoagTables,
    grid: GridSpec,
    gain_only: bool = False,
    return_dropped: bool = False,
    backend: str | None = None,
):
    """Coagulation increment C[j,i] by the reordered pair sum.

    Under the clamp policy the entries sum to zero in exact arithmetic
    (first-moment neutrality); under drop the sum equals minus the gain
    discarded past the top r-edge, retrievable via ``return_dropped``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValidationError(f"field shape {f.shape} does not match grid {grid.shape}")
    gain, dropped = _gain_by_cell(f, tables, grid, backend)
    c = gain if gain_only else gain - _loss_by_cell(f, tables, grid)
    if return_dropped:
        return c, dropped
    return c


def corner_fluxes(f: np.ndarray, tables: CoagTables, grid: GridSpec) -> np.ndarray:
    """Coagulation corner fluxes C_{j-1/2,i-1/2}, shape (J+2, I+2).

    Entry [jc, ic] collects every pair gain that lands strictly below the
    corner (merged row < jc, target cell < ic) minus the loss already
    committed there; rows jc = 0 and ic = 0 are the zero boundary values.
    """
    f = np.asarray(f, dtype=float)
    J, I = grid.J, grid.I
    ncell = (J + 1) * (I + 1)
    gain = np.zeros(ncell + 1)
    # Reversed block order and an unbuffered scatter keep this assembly
    # independent of the bincount path used by coag_increment.
    for jp in range(J, -1, -1):
        w = _gain_weights_block(f, tables, grid, jp)
        np.add.at(gain, tables.target_block(grid, jp), w.ravel())
    gain_cells = gain[:ncell].reshape(grid.shape)
    loss_cells = _loss_by_cell(f, tables, grid)

    corners = np.zeros((J + 2, I + 2))
    corners[1:, 1:] = np.cumsum(np.cumsum(gain_cells - loss_cells, axis=0), axis=1)
    return corners


def coag_flux_form(f: np.ndarray, tables: CoagTables, grid: GridSpec) -> np.ndarray:
    """Coagulation increment as the double difference of corner fluxes."""
    c = corner_fluxes(f, tables, grid)
    return (c[1:, 1:] - c[1:, :-1]) - (c[:-1, 1:] - c[:-1, :-1])
