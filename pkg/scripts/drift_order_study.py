#!/usr/bin/env python3
"""Measure how the total-ion balance drift scales with the mesh width.

Under the drop overflow policy the scheme leaks a first-order-in-dr
amount of the balance rho = u + sum r p f dp dr.  This script runs the
demonstration setup at a ladder of resolutions and prints the measured
max |rho_n - rho_0| next to the a-priori bound 2 K P M_in^2 T dr.

Usage: drift_order_study.py [n1 n2 ...]   (default 25 50 100 cells/axis)
"""
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import sorbcoag as sc
from sorbcoag.mesh import TimeSpec
from sorbcoag.stepper import floor_field

T = 0.5


def demo_density(p, r):
    return np.exp(-((np.log(p) + 2.0) / 0.4) ** 2 / 2 - ((np.asarray(r) - 0.2) / 0.05) ** 2 / 2)


def one_resolution(cells: int) -> tuple[float, float]:
    grid = sc.build_grid(1.0, cells - 1, cells - 1)
    model = sc.BilinearRates(k0=4.0, l0=1.0, p_max=1.0)
    kernel = sc.ConstantKernel(1.0)
    f0 = floor_field(sc.discretize_initial(demo_density, grid), 1e-10)
    f0, _ = sc.normalize_to_target(f0, grid, 0.1)
    report = sc.stability_bounds(model, kernel, f0, 0.9, TimeSpec(T, 1), grid)
    dt = min(0.95 * report.dt_max, 0.9 * report.dt_max_column)
    steps = TimeSpec(T, max(1, int(np.ceil(T / dt))))
    tables = sc.build_coag_tables(kernel, grid, sc.DROP)
    result = sc.run(model, tables, grid, steps, f0, 0.9)
    drift = float(np.abs([row.drift for row in result.series]).max())
    bound = 2.0 * kernel.K_kernel * grid.P * report.m_in**2 * T * grid.dr
    return drift, bound


def main() -> int:
    ladder = [int(a) for a in sys.argv[1:]] or [25, 50, 100]
    drifts = []
    print(f"{'cells':>6} {'dr':>10} {'max|drift|':>12} {'bound':>10} {'seconds':>8}")
    for cells in ladder:
        t0 = time.time()
        drift, bound = one_resolution(cells)
        drifts.append(drift)
        print(f"{cells:>6} {1.0 / cells:>10.4g} {drift:>12.6f} {bound:>10.4f} {time.time() - t0:>8.1f}")
    orders = np.log2(np.array(drifts[:-1]) / np.array(drifts[1:]))
    print("observed orders between consecutive resolutions:", np.round(orders, 3))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
