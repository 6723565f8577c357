import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sorbcoag import ConfigError, TimeSpec, build_grid


def test_reference_resolution_grid():
    g = build_grid(P=1.0, J=99, I=99)
    assert g.dp == pytest.approx(0.01, rel=1e-15)
    assert g.dr == pytest.approx(0.01, rel=1e-15)
    assert g.shape == (100, 100)


def test_single_cell_grid():
    g = build_grid(P=1.0, J=0, I=0)
    assert g.dp == 1.0 and g.dr == 1.0
    assert g.p_centers[0] == 0.5 and g.r_centers[0] == 0.5


def test_rectangular_grid_centers():
    g = build_grid(P=2.0, J=3, I=1)
    assert g.dp == 0.5 and g.dr == 0.5
    np.testing.assert_allclose(g.p_centers, [0.25, 0.75, 1.25, 1.75], rtol=1e-15)


def test_edges_hit_the_domain_corners_exactly():
    g = build_grid(P=1.0, J=99, I=99)
    assert g.p_edges[0] == 0.0 and g.r_edges[0] == 0.0
    assert abs(g.p_edges[-1] - g.P) <= np.finfo(float).eps * g.P
    assert abs(g.r_edges[-1] - 1.0) <= np.finfo(float).eps


def test_nonpositive_cutoff_rejected():
    with pytest.raises(ConfigError):
        build_grid(P=0.0, J=3, I=3)
    with pytest.raises(ConfigError):
        build_grid(P=-1.0, J=3, I=3)


@given(
    P=st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False),
    J=st.integers(min_value=0, max_value=300),
    I=st.integers(min_value=0, max_value=300),
)
def test_centers_are_edge_midpoints(P, J, I):
    g = build_grid(P, J, I)
    mid_p = 0.5 * (g.p_edges[:-1] + g.p_edges[1:])
    mid_r = 0.5 * (g.r_edges[:-1] + g.r_edges[1:])
    np.testing.assert_allclose(g.p_centers, mid_p, rtol=1e-15)
    np.testing.assert_allclose(g.r_centers, mid_r, rtol=1e-15)
    # total volume fills the truncated domain
    total = g.cell_volume * (J + 1) * (I + 1)
    assert math.isclose(total, P * 1.0, rel_tol=1e-12)
    assert np.all(g.p_centers > 0.0)
    assert np.all((g.r_centers > 0.0) & (g.r_centers < 1.0))


def test_timespec_dt_times_n_recovers_t():
    ts = TimeSpec(T=5.0, N=40000)
    assert ts.dt == pytest.approx(1.25e-4, rel=1e-15)
    assert ts.dt * ts.N == pytest.approx(ts.T, rel=1e-15)


def test_timespec_from_dt_rounds_to_nearest_step():
    ts = TimeSpec.from_dt(T=1.0, dt=0.3)
    assert ts.N == 3
    with pytest.raises(ConfigError):
        TimeSpec.from_dt(T=1.0, dt=-0.1)
