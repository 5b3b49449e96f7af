"""DUGKS time stepping and its collision-less variants.

The array functions here are the readable reference path; :func:`step`
dispatches to the fused kernels in :mod:`dugks._kernels` by default. Both
paths implement the same closures:

* face: ``f_face = (2 tau b + dt/2 f_eq(b)) / (2 tau + dt/2)`` with
  ``b`` the foot-point value of ``f + dt/4 Q/eps``;
* cell: ``f_new = (2 tau g + dt f_eq(g)) / (2 tau + dt)`` with
  ``g = f + dt/2 Q/eps - dt/dx * (flux divergence)``.

Both are exact solutions of the trapezoidal implicit relations because the
collision term carries no conserved moments, so ``f_eq`` can be evaluated
from the explicit part before the implicit unknown is known.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import CFLViolationError, DistributionField, UniformPeriodicGrid, foot_point_value
from .kinetics import NonPhysicalFieldError, RelaxationModel, bgk_collision, relax
from .velocity_set import DiscreteVelocitySet


class Reconstruction(enum.Enum):
    DUGKS = "dugks"
    CLR = "clr"
    COLLISIONLESS_LW = "lw"

    @classmethod
    def parse(cls, value) -> "Reconstruction":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown reconstruction {value!r}; expected dugks, clr or lw")

    @property
    def mode(self) -> int:
        return {"dugks": 0, "clr": 1, "lw": 2}[self.value]


def compute_dt(grid: UniformPeriodicGrid, vset: DiscreteVelocitySet, eta: float) -> float:
    """Transport-limited time step ``eta * dx / |xi|_max``."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"CFL number must lie in (0, 1), got {eta}")
    return eta * grid.dx / vset.xi_max


@dataclass(frozen=True)
class SchemeConfig:
    model: RelaxationModel
    cfl: float = 0.5
    reconstruction: Reconstruction = Reconstruction.DUGKS

    def __post_init__(self):
        object.__setattr__(self, "reconstruction", Reconstruction.parse(self.reconstruction))
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"CFL number must lie in (0, 1), got {self.cfl}")

    def dt(self, grid: UniformPeriodicGrid, vset: DiscreteVelocitySet) -> float:
        return compute_dt(grid, vset, self.cfl)


def _closure(explicit, vset, tau_eff, h, where):
    # (2 tau x + h f_eq(x)) / (2 tau + h), written as a conservative relaxation
    return relax(vset, explicit, h / (2.0 * tau_eff + h), where)


def reconstruct_interface_dugks(field: DistributionField, model: RelaxationModel, dt, axis=0):
    """Face values ``f^{n+1/2}`` along ``axis`` including the collision half-step."""
    vset = field.vset
    f = field.values
    b_cells = f + 0.25 * dt * bgk_collision(vset, f, model)
    b = foot_point_value(b_cells, vset, field.grid.dx, dt, axis)
    return _closure(b, vset, model.tau_eff, 0.5 * dt, "face")


def reconstruct_interface_clr(field: DistributionField, dt, axis=0):
    """Face values from free transport only, ``(1/2 - beta) f[j+1] + (1/2 + beta) f[j]``."""
    return foot_point_value(field.values, field.vset, field.grid.dx, dt, axis)


def update_cells(field: DistributionField, fluxes, model: RelaxationModel, dt, reconstruction):
    """Write the updated cell values into ``field.new``.

    ``fluxes[axis]`` holds the face values ``f^{n+1/2}`` along that axis,
    indexed like :func:`dugks.grid.interface_value_and_slope`.
    """
    reconstruction = Reconstruction.parse(reconstruction)
    vset = field.vset
    f = field.values
    div = np.zeros_like(f)
    for axis, face in enumerate(fluxes):
        flux = vset.velocities[:, axis] * face
        div += flux - np.roll(flux, 1, axis=axis)
    g = -(dt / field.grid.dx) * div
    if reconstruction is Reconstruction.COLLISIONLESS_LW:
        field.new[...] = f + g
        if not np.all(np.isfinite(field.new)):
            raise NonPhysicalFieldError("non-finite values after transport update")
        return
    g += f + 0.5 * dt * bgk_collision(vset, f, model)
    field.new[...] = _closure(g, vset, model.tau_eff, dt, "cell")


def _step_numpy(field: DistributionField, config: SchemeConfig, dt):
    rec = config.reconstruction
    fluxes = []
    for axis in range(field.grid.dim):
        if rec is Reconstruction.DUGKS:
            fluxes.append(reconstruct_interface_dugks(field, config.model, dt, axis))
        else:
            fluxes.append(reconstruct_interface_clr(field, dt, axis))
    update_cells(field, fluxes, config.model, dt, rec)


class _Workspace:
    def __init__(self, n):
        self.bp = np.zeros((9, n + 2, n + 2))
        self.h = np.empty((9, n, n))
        self.fx = np.zeros((9, n, n))
        self.fy = np.zeros((9, n, n + 1))


def _raise_kernel(code, where):
    if code != 0:
        raise NonPhysicalFieldError(f"non-physical density at {where}")


def _step_numba(field: DistributionField, config: SchemeConfig, dt):
    vset = field.vset
    model = config.model
    mode = config.reconstruction.mode
    dx = field.grid.dx
    if vset.xi_max * dt > dx + 1e-14 * dx:
        raise CFLViolationError("foot point leaves the stencil")
    if field.grid.dim == 1:
        xi = np.zeros((vset.q, 2))
        xi[:, 0] = vset.velocities[:, 0]
        args = (vset.weights, xi, vset.rt0, model.tau_eff, dt)
        _raise_kernel(_kernels.step_1d(field.values, *args, dx, mode, field.new), "cell/face")
        return
    n = field.grid.n
    ws = getattr(field, "_workspace", None)
    if ws is None or ws.h.shape[1] != n:
        ws = field._workspace = _Workspace(n)
    w = vset.weights
    args = (w[0], w[1], w[5], vset.rt0, model.tau_eff, dt)
    _raise_kernel(_kernels.d2q9_prepare(field.soa, *args, mode, ws.bp, ws.h), "cell")
    _raise_kernel(_kernels.d2q9_faces(ws.bp, *args, dx, mode == 0, ws.fx, ws.fy), "face")
    _raise_kernel(
        _kernels.d2q9_update(ws.h, ws.fx, ws.fy, *args, dx, mode != 2, field.soa_new), "cell"
    )


def step(field: DistributionField, config: SchemeConfig, dt=None, backend="numba"):
    """Advance ``field`` by one time step and swap its buffers."""
    if dt is None:
        dt = config.dt(field.grid, field.vset)
    if backend == "numba":
        _step_numba(field, config, dt)
    elif backend == "numpy":
        _step_numpy(field, config, dt)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    field.swap_buffers(dt)
