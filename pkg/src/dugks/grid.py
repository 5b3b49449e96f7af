"""Uniform periodic grid, distribution storage and face interpolation."""

from __future__ import annotations

import numpy as np

from .velocity_set import DiscreteVelocitySet


class CFLViolationError(ValueError):
    """Characteristic foot point lies outside the two face-adjacent cells."""


class UniformPeriodicGrid:
    """Unit box ``[0, 1]^dim`` split into ``n`` cells per axis."""

    def __init__(self, dim: int, n: int):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        if int(n) != n or n < 4:
            raise ValueError(f"need at least 4 cells per axis, got {n}")
        self.dim = int(dim)
        self.n = int(n)
        self.dx = 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    def neighbor(self, index: int, offset: int) -> int:
        return (index + offset) % self.n

    def coords(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return (np.arange(self.n) + 0.5) * self.dx

    def centers(self) -> np.ndarray:
        """Cell centers with shape ``(*grid.shape, dim)``; axis 0 is x."""
        x = self.coords()
        mesh = np.meshgrid(*([x] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def __repr__(self):
        return f"UniformPeriodicGrid(dim={self.dim}, n={self.n})"


class DistributionField:
    """Cell-by-velocity distribution values with an old/new buffer pair.

    ``values`` is the current state with shape ``(*grid.shape, q)``;
    ``new`` is the buffer the update writes into before
    :meth:`swap_buffers`. Storage is velocity-major (``soa`` has shape
    ``(q, *grid.shape)``) and both attributes are views onto it.
    """

    def __init__(self, grid: UniformPeriodicGrid, vset: DiscreteVelocitySet, time=0.0):
        if grid.dim != vset.dim:
            raise ValueError(f"{vset.name} is {vset.dim}-D but the grid is {grid.dim}-D")
        self.grid = grid
        self.vset = vset
        self.soa = np.zeros((vset.q,) + grid.shape)
        self.soa_new = np.zeros_like(self.soa)
        self.time = float(time)
        self.steps = 0

    @property
    def values(self) -> np.ndarray:
        return np.moveaxis(self.soa, 0, -1)

    @values.setter
    def values(self, arr):
        self.values[...] = arr

    @property
    def new(self) -> np.ndarray:
        return np.moveaxis(self.soa_new, 0, -1)

    def swap_buffers(self, dt: float):
        self.soa, self.soa_new = self.soa_new, self.soa
        self.time += dt
        self.steps += 1

    def copy(self) -> "DistributionField":
        other = DistributionField(self.grid, self.vset, self.time)
        other.values[...] = self.values
        other.steps = self.steps
        return other


def swap_buffers(field: DistributionField, dt: float):
    field.swap_buffers(dt)


def interface_value_and_slope(f, dx, axis=0):
    """Central average and slope at every face along ``axis``.

    Entry ``j`` along ``axis`` refers to the face between cells ``j`` and
    ``j + 1`` (periodic, so the last face joins cell ``n - 1`` to cell 0).
    """
    right = np.roll(f, -1, axis=axis)
    return 0.5 * (f + right), (right - f) / dx


def tangential_slope(f, dx, axis=0, normal_sign=None):
    """Slope across the tangential axis at every face along ``axis``.

    The central difference is taken in the cell upwind of the face along
    the normal: ``normal_sign`` (one entry per velocity, last axis of ``f``)
    selects the left cell for positive and the right cell for negative
    normal velocity; zero or ``None`` averages the two face cells.
    """
    tang = 1 - axis
    central = (np.roll(f, -1, axis=tang) - np.roll(f, 1, axis=tang)) / (2 * dx)
    right = np.roll(central, -1, axis=axis)
    if normal_sign is None:
        return 0.5 * (central + right)
    s = np.sign(normal_sign)
    return 0.5 * ((1 + s) * central + (1 - s) * right)


def foot_point_value(f, vset: DiscreteVelocitySet, dx, dt, axis=0):
    """Linear reconstruction of ``f`` at ``x_face - xi * dt / 2`` on every face.

    Along the face normal this is ``(1/2 - beta) f[j+1] + (1/2 + beta) f[j]``
    with ``beta = xi_n dt / (2 dx)``. On a 2-D grid the tangential shift uses
    the upwind cell's tangential slope, which keeps collisionless diagonal
    transport stable up to a CFL number of about 0.65 (the face average
    loses stability near 0.37).
    """
    f = np.asarray(f, dtype=np.float64)
    xi = vset.velocities
    beta = xi[:, axis] * dt / (2 * dx)
    if np.any(np.abs(beta) > 0.5 + 1e-14):
        raise CFLViolationError(
            f"foot point leaves the stencil: max |beta| = {np.max(np.abs(beta)):.4g} > 1/2"
        )
    half, slope = interface_value_and_slope(f, dx, axis)
    foot = half - 0.5 * dt * xi[:, axis] * slope
    if vset.dim == 2:
        foot = foot - 0.5 * dt * xi[:, 1 - axis] * tangential_slope(f, dx, axis, xi[:, axis])
    return foot
