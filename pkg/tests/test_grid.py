import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dugks.grid import (
    CFLViolationError,
    DistributionField,
    UniformPeriodicGrid,
    foot_point_value,
    interface_value_and_slope,
    tangential_slope,
)
from dugks.velocity_set import build_d1q3


def test_grid_geometry():
    g = UniformPeriodicGrid(2, 8)
    assert g.dx == 0.125 and g.shape == (8, 8)
    np.testing.assert_allclose(g.coords(), (np.arange(8) + 0.5) / 8)
    c = g.centers()
    assert c.shape == (8, 8, 2)
    assert c[3, 5, 0] == pytest.approx(3.5 / 8) and c[3, 5, 1] == pytest.approx(5.5 / 8)
    assert g.neighbor(7, 1) == 0 and g.neighbor(0, -1) == 7


@pytest.mark.parametrize("args", [(3, 8), (2, 3), (1, 2.5), (2, 0)])
def test_grid_rejects_bad_extents(args):
    with pytest.raises(ValueError):
        UniformPeriodicGrid(*args)


def test_field_dimension_mismatch(d1q3):
    with pytest.raises(ValueError, match="1-D"):
        DistributionField(UniformPeriodicGrid(2, 4), d1q3)


def test_field_views_and_swap(d2q9):
    f = DistributionField(UniformPeriodicGrid(2, 4), d2q9)
    f.values = np.arange(4 * 4 * 9, dtype=float).reshape(4, 4, 9)
    assert f.soa[2, 1, 3] == f.values[1, 3, 2]
    f.new[...] = 7.0
    f.swap_buffers(0.25)
    assert np.all(f.values == 7.0) and f.time == 0.25 and f.steps == 1
    g = f.copy()
    g.values[...] = 0
    assert np.all(f.values == 7.0) and g.steps == 1


def test_face_average_and_slope():
    f = np.array([1.0, 3.0, 4.0, 8.0])
    half, slope = interface_value_and_slope(f, 0.5)
    np.testing.assert_allclose(half, [2.0, 3.5, 6.0, 4.5])
    np.testing.assert_allclose(slope, [4.0, 2.0, 8.0, -14.0])


@given(beta=st.floats(-0.5, 0.5), seed=st.integers(0, 1000))
def test_foot_point_matches_two_point_formula(beta, seed):
    d1q3 = build_d1q3(0.5)
    n, dx = 6, 1 / 6
    f = np.random.default_rng(seed).random((n, 3))
    xi = d1q3.velocities[1, 0]
    dt = 2 * abs(beta) * dx / xi if beta else 0.0
    out = foot_point_value(f, d1q3, dx, dt, 0)
    for k in range(3):
        b = d1q3.velocities[k, 0] * dt / (2 * dx)
        expect = (0.5 - b) * np.roll(f[:, k], -1) + (0.5 + b) * f[:, k]
        np.testing.assert_allclose(out[:, k], expect, atol=1e-14)


def test_foot_point_exact_for_linear_field(d2q9):
    # interior faces only: a linear profile is not periodic
    n = 10
    dx = 1 / n
    dt = 0.4 * dx / d2q9.xi_max
    x = (np.arange(n) + 0.5) * dx
    X, Y = np.meshgrid(x, x, indexing="ij")
    lin = 2.0 + 3.0 * X - 5.0 * Y
    f = np.repeat(lin[..., None], 9, axis=-1)
    xi = d2q9.velocities
    for axis in (0, 1):
        out = foot_point_value(f, d2q9, dx, dt, axis)
        face = [X, Y]
        face[axis] = face[axis] + dx / 2
        for k in range(9):
            xf = face[0] - xi[k, 0] * dt / 2
            yf = face[1] - xi[k, 1] * dt / 2
            exact = 2.0 + 3.0 * xf - 5.0 * yf
            np.testing.assert_allclose(out[1:-2, 1:-2, k], exact[1:-2, 1:-2], atol=1e-12)


def test_tangential_slope_of_sine(d2q9):
    n = 64
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    f = np.sin(2 * np.pi * Y)
    s = tangential_slope(f, 1 / n, axis=0)
    np.testing.assert_allclose(s, 2 * np.pi * np.cos(2 * np.pi * Y), atol=0.02)


def test_cfl_violation(d1q3):
    f = np.ones((8, 3))
    dx = 1 / 8
    with pytest.raises(CFLViolationError):
        foot_point_value(f, d1q3, dx, 1.01 * dx / d1q3.xi_max, 0)
    foot_point_value(f, d1q3, dx, dx / d1q3.xi_max, 0)
