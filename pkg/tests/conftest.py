import numpy as np
import pytest

from sorbcoag import (
    BilinearRates,
    interface_velocity_table,
    transport_increment,
    upwind_fluxes,
)

DEMO_RATES = BilinearRates(k0=4.0, l0=1.0, p_max=1.0)


def demo_density(p, r):
    """Bundled initial data: a bump in (log p, r)."""
    zp = (np.log(p) + 2.0) / 0.4
    zr = (np.asarray(r) - 0.2) / 0.05
    return np.exp(-0.5 * zp**2 - 0.5 * zr**2)


def evolve_pure_transport(model, u_frozen, grid, f0, T, cfl_fraction=0.9):
    """Drive the upwind operators alone with a frozen free-ion level."""
    vel = interface_velocity_table(model, u_frozen, grid)
    vmax = float(np.abs(vel).max())
    if vmax == 0.0:
        return f0.copy()
    n = int(np.ceil(T / (cfl_fraction * grid.dr / (4.0 * vmax))))
    dt = T / n
    pc = grid.p_centers[:, None]
    f = f0.copy()
    for _ in range(n):
        f = f - dt / pc * transport_increment(upwind_fluxes(f, vel, grid), grid)
    return f


@pytest.fixture(scope="session")
def demo_rates():
    return DEMO_RATES
