"""Deterministic finite-volume simulator for sorbing, coagulating polymers.

A population of water-soluble polymers, described by a cell-averaged
density over (size p, ion ratio r), exchanges metal ions with the solution
through an upwind sorption transport in r and merges pairwise through a
conservative coagulation operator, coupled to the free-ion concentration
u(t).  The explicit scheme preserves nonnegativity, dissipates the zeroth
moment, and conserves the first moment exactly under the clamp policy.
"""

from .coagulation import (
    CLAMP,
    DROP,
    CoagTables,
    build_coag_tables,
    coag_flux_form,
    coag_increment,
    corner_fluxes,
    precompute_targets,
    target_index,
    vsharp,
)
from .diagnostics import (
    ColumnProfile,
    DiagnosticsRecord,
    balance,
    column_profile,
    concentration_distance,
    moments,
    nullcline,
)
from .errors import (
    CflError,
    ConfigError,
    DomainError,
    NumericalError,
    OracleError,
    SimulationError,
    ValidationError,
)
from .mesh import GridSpec, TimeSpec, build_grid
from .rates import (
    BilinearRates,
    CallableKernel,
    CallableRates,
    ConstantKernel,
    ConstantRates,
    KernelModel,
    LangmuirRates,
    RateModel,
    SeparableKernel,
    StabilityReport,
    TabulatedKernel,
    eval_sorption,
    interface_velocity_table,
    kernel_cell_average,
    stability_bounds,
)
from .stepper import RunResult, SimState, discretize_initial, normalize_to_target, run, step, validate_field
from .transport import transport_increment, upwind_fluxes

__version__ = "0.1.0"
