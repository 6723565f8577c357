import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import bisect

from sorbcoag import (
    BilinearRates,
    CallableKernel,
    CallableRates,
    ConstantKernel,
    ConstantRates,
    DomainError,
    LangmuirRates,
    SeparableKernel,
    TabulatedKernel,
    ValidationError,
    build_grid,
    eval_sorption,
    interface_velocity_table,
    kernel_cell_average,
    stability_bounds,
)
from sorbcoag.mesh import TimeSpec

DEMO = BilinearRates(k0=4.0, l0=1.0, p_max=1.0)


# ---------------------------------------------------------------------------
# sorption evaluation
# ---------------------------------------------------------------------------

def test_demo_rate_at_full_gain():
    assert eval_sorption(DEMO, 0.9, 1.0, 0.0) == pytest.approx(3.6, rel=1e-15)


def test_demo_rate_saturated_is_pure_desorption():
    for u in (0.0, 0.3, 2.0):
        for p in (0.1, 0.5, 1.0):
            assert eval_sorption(DEMO, u, p, 1.0) == pytest.approx(-1.0, rel=1e-15)


def test_demo_rate_root_matches_independent_bisection():
    # independent oracle: 1-D root finder on the closed-form expression
    root = bisect(lambda r: 4 * 0.5 * (1 - r) * 0.9 - r, 0.0, 1.0, xtol=1e-14)
    assert root == pytest.approx(1.8 / 2.8, abs=1e-12)
    assert eval_sorption(DEMO, 0.9, 0.5, root) == pytest.approx(0.0, abs=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_sorption(DEMO, -0.1, 0.5, 0.5)
    with pytest.raises(DomainError):
        eval_sorption(DEMO, 0.9, 1.5, 0.5)
    with pytest.raises(DomainError):
        eval_sorption(DEMO, 0.9, 0.5, 1.2)


@settings(max_examples=60, deadline=None)
@given(
    u=st.floats(min_value=0.0, max_value=50.0),
    p=st.floats(min_value=0.0, max_value=1.0),
    r=st.floats(min_value=0.0, max_value=1.0),
    k0=st.floats(min_value=0.0, max_value=10.0),
    l0=st.floats(min_value=0.0, max_value=10.0),
)
def test_affinity_in_u(u, p, r, k0, l0):
    # V(u) = V(0) + u * (V(1) - V(0)) for every model in the family
    for model in (BilinearRates(k0=k0, l0=l0, p_max=1.0), ConstantRates(k0=k0, l0=l0)):
        v0 = eval_sorption(model, 0.0, p, r)
        v1 = eval_sorption(model, 1.0, p, r)
        vu = eval_sorption(model, u, p, r)
        assert vu == pytest.approx(v0 + u * (v1 - v0), rel=1e-14, abs=1e-12)


def test_langmuir_family_bound():
    m = LangmuirRates(k0=3.0, alpha=2.0, l0=5.0, beta=1.0, p_max=2.0)
    assert m.K_rate == pytest.approx(max(3.0 * 2.0**2, 5.0 * 2.0), rel=1e-15)
    # demo-model bound: max(k0 * P, l0)
    assert DEMO.K_rate == pytest.approx(4.0, rel=1e-15)


# ---------------------------------------------------------------------------
# interface velocity tables
# ---------------------------------------------------------------------------

def test_zero_rates_give_zero_table():
    g = build_grid(1.0, 4, 4)
    vel = interface_velocity_table(ConstantRates(0.0, 0.0), 0.7, g)
    assert vel.shape == (5, 6)
    assert np.all(vel == 0.0)


def test_velocity_table_entry_on_small_grid():
    g = build_grid(1.0, 1, 1)
    vel = interface_velocity_table(DEMO, 0.9, g)
    # (j=1, i=0) sits at (p = 0.5, r = 0): 4*0.5*1*0.9
    assert vel[1, 0] == pytest.approx(1.8, rel=1e-15)


def test_velocity_table_at_zero_u_is_pure_desorption():
    g = build_grid(1.0, 3, 7)
    vel = interface_velocity_table(DEMO, 0.0, g)
    np.testing.assert_allclose(vel, -np.broadcast_to(g.r_edges, vel.shape), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(u=st.floats(min_value=0.0, max_value=20.0), k0=st.floats(min_value=0.0, max_value=8.0))
def test_velocity_table_monotone_in_r(u, k0):
    g = build_grid(1.0, 6, 9)
    vel = interface_velocity_table(BilinearRates(k0=k0, l0=1.0, p_max=1.0), u, g)
    assert np.all(np.diff(vel, axis=1) <= 1e-12 * (1 + np.abs(vel).max()))


def test_increasing_velocity_rejected():
    g = build_grid(1.0, 2, 4)
    rising = CallableRates(k=lambda p, r: np.asarray(r) * 0 + 0.0, l=lambda p, r: -np.asarray(r) + 1.0, K_rate=1.0)
    # l decreasing in r makes V = -l increasing in r
    with pytest.raises(ValidationError):
        interface_velocity_table(rising, 0.0, g)


# ---------------------------------------------------------------------------
# kernel cell averages
# ---------------------------------------------------------------------------

def test_constant_kernel_average_is_exact():
    g = build_grid(1.0, 3, 2)
    table = kernel_cell_average(ConstantKernel(1.0), g)
    assert table.shape == (4, 3, 4, 3)
    assert np.all(table == 1.0)


def test_separable_product_average_matches_analytic_integral():
    # a = p * p' on a 2x1 grid: mean over (0,.5) times mean over (.5,1)
    g = build_grid(1.0, 1, 0)
    ker = SeparableKernel(phi=lambda p, r: np.broadcast_arrays(np.asarray(p, dtype=float), r)[0], K_kernel=1.0)
    table = kernel_cell_average(ker, g)
    exact_01 = (0.5**2 / 2) / 0.5 * ((1.0**2 - 0.5**2) / 2) / 0.5  # analytic cell means
    assert table[0, 0, 1, 0] == pytest.approx(0.1875, rel=1e-14)
    assert table[0, 0, 1, 0] == pytest.approx(exact_01, rel=1e-14)


def test_callable_kernel_matches_separable_on_polynomials():
    g = build_grid(1.0, 2, 2)
    sep = SeparableKernel(phi=lambda p, r: np.asarray(p) * (1.0 + np.asarray(r)), K_kernel=2.0)
    full = CallableKernel(fn=lambda p, r, pp, rr: p * (1 + r) * pp * (1 + rr), K_kernel=2.0)
    np.testing.assert_allclose(kernel_cell_average(sep, g), kernel_cell_average(full, g), rtol=1e-13)


def test_random_tabulated_kernel_symmetry():
    rng = np.random.default_rng(3)
    g = build_grid(1.0, 3, 3)
    raw = rng.random((4, 4, 4, 4))
    sym = 0.5 * (raw + raw.transpose(2, 3, 0, 1))
    table = kernel_cell_average(TabulatedKernel(sym), g)
    gap = np.abs(table - table.transpose(2, 3, 0, 1)).max()
    assert gap <= 1e-14 * (1 + table.max())


def test_asymmetric_tabulated_kernel_rejected():
    raw = np.zeros((2, 2, 2, 2))
    raw[0, 0, 1, 1] = 1.0
    with pytest.raises(ValidationError):
        TabulatedKernel(raw)


# ---------------------------------------------------------------------------
# stability report
# ---------------------------------------------------------------------------

def test_zero_velocity_gives_infinite_transport_bound():
    g = build_grid(1.0, 4, 4)
    f = np.ones(g.shape)
    rep = stability_bounds(ConstantRates(0.0, 0.0), ConstantKernel(0.0), f, 1.0, TimeSpec(1.0, 10), g)
    assert math.isinf(rep.dt_max_transport)
    assert math.isinf(rep.dt_max_coag)
    assert rep.cfl_ok


def test_transport_bound_arithmetic():
    # V_sup = 1 with dr = 0.1 must give dt_max = 0.025
    g = build_grid(1.0, 0, 9)
    f = np.zeros(g.shape)
    rep = stability_bounds(ConstantRates(0.0, 1.0), ConstantKernel(0.0), f, 0.0, TimeSpec(1.0, 10), g)
    assert rep.v_sup == pytest.approx(1.0, rel=1e-15)
    assert rep.dt_max_transport == pytest.approx(0.025, rel=1e-14)


def test_coagulation_bound_arithmetic():
    # K = 1, M_in = 1, P = 1 must give dt_max_coag = 0.25
    g = build_grid(1.0, 4, 4)
    f = np.full(g.shape, 1.0 / (g.cell_volume * 25))
    rep = stability_bounds(ConstantRates(0.0, 0.0), ConstantKernel(1.0), f, 0.0, TimeSpec(1.0, 10), g)
    assert rep.m_in == pytest.approx(1.0, rel=1e-14)
    assert rep.dt_max_coag == pytest.approx(0.25, rel=1e-13)


def test_report_flags_track_the_strict_inequalities():
    g = build_grid(1.0, 9, 9)
    f = np.full(g.shape, 1.0)
    ts_ok = TimeSpec(1.0, 4000)
    ts_bad = TimeSpec(1.0, 2)
    rep_ok = stability_bounds(DEMO, ConstantKernel(1.0), f, 0.9, ts_ok, g)
    rep_bad = stability_bounds(DEMO, ConstantKernel(1.0), f, 0.9, ts_bad, g)
    assert rep_ok.cfl_ok
    assert not rep_bad.cfl_ok
    assert rep_bad.dt_max == min(rep_bad.dt_max_transport, rep_bad.dt_max_coag)
