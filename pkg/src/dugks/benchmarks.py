"""Taylor-vortex reference solution, error norms and decay-rate fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinetics import MacroState, check_density
from .velocity_set import moments


class DegenerateComparisonError(ValueError):
    """The reference velocity field has zero norm."""


@dataclass(frozen=True)
class TaylorVortexSpec:
    """Decaying periodic vortex ``u_x ~ -cos(Ax) sin(By)``, ``u_y ~ sin(Ax) cos(By)``."""

    nu: float
    a: float = 2 * np.pi
    b: float = 2 * np.pi
    u0: float = 0.01
    rho0: float = 1.0
    rt0: float = 0.5

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if self.u0 / np.sqrt(self.rt0) > 0.05:
            raise ValueError(
                f"u0/sqrt(rt0) = {self.u0 / np.sqrt(self.rt0):.3g} exceeds the low-Mach limit 0.05"
            )

    @classmethod
    def for_epsilon(cls, epsilon, tau=1.0, **kw):
        rt0 = kw.get("rt0", 0.5)
        return cls(nu=epsilon * tau * rt0, **kw)

    @property
    def alpha(self) -> float:
        return self.a**2 + self.b**2

    @property
    def p0(self) -> float:
        return self.rho0 * self.rt0

    def initial_data(self, coords):
        """Macro state and derivatives at ``t = 0`` for Chapman-Enskog initialization."""
        x, y = coords[..., 0], coords[..., 1]
        u, _ = taylor_analytic(self, x, y, 0.0)
        grad_u, dt_u, grad_rho, dt_rho = taylor_derivatives(self, x, y, 0.0)
        rho = np.full(np.shape(x), self.rho0)
        return MacroState(rho, u), grad_u, grad_rho, (dt_rho, dt_u)


def taylor_analytic(spec: TaylorVortexSpec, x, y, t):
    """Velocity (trailing axis of length 2) and pressure at ``(x, y, t)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a, b, u0 = spec.a, spec.b, spec.u0
    decay = np.exp(-spec.nu * spec.alpha * t)
    ux = -(u0 / a) * np.cos(a * x) * np.sin(b * y) * decay
    uy = (u0 / b) * np.sin(a * x) * np.cos(b * y) * decay
    p = spec.p0 - 0.25 * spec.rho0 * u0**2 * (
        np.cos(2 * a * x) / a**2 + np.cos(2 * b * y) / b**2
    ) * decay**2
    return np.stack([ux, uy], axis=-1), p


def taylor_derivatives(spec: TaylorVortexSpec, x, y, t):
    """Exact ``(grad_u, dt_u, grad_rho, dt_rho)``; ``grad_u[..., a, b] = du_a/dx_b``.

    Density is uniform, so its gradient and rate are zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a, b, u0 = spec.a, spec.b, spec.u0
    decay = np.exp(-spec.nu * spec.alpha * t)
    cx, sx = np.cos(a * x), np.sin(a * x)
    cy, sy = np.cos(b * y), np.sin(b * y)
    grad_u = np.empty(x.shape + (2, 2))
    grad_u[..., 0, 0] = u0 * sx * sy * decay
    grad_u[..., 0, 1] = -(u0 * b / a) * cx * cy * decay
    grad_u[..., 1, 0] = (u0 * a / b) * cx * cy * decay
    grad_u[..., 1, 1] = -u0 * sx * sy * decay
    u, _ = taylor_analytic(spec, x, y, t)
    dt_u = -spec.nu * spec.alpha * u
    return grad_u, dt_u, np.zeros(x.shape + (2,)), np.zeros(x.shape)


def t_half(spec: TaylorVortexSpec) -> float:
    """Time for the velocity amplitude to halve, ``ln 2 / (nu alpha)``."""
    return np.log(2.0) / (spec.nu * spec.alpha)


def cell_velocity(field):
    rho, mom = moments(field.vset, field.values)
    check_density(rho)
    return mom / rho[..., None]


def max_speed(field) -> float:
    u = cell_velocity(field)
    return float(np.sqrt(np.max(np.sum(u * u, axis=-1))))


def relative_l2_error(field, spec: TaylorVortexSpec, t=None) -> float:
    """``||u_num - u_ref||_2 / ||u_ref||_2`` over cell centers at time ``t``."""
    if t is None:
        t = field.time
    centers = field.grid.centers()
    ref, _ = taylor_analytic(spec, centers[..., 0], centers[..., 1], t)
    return velocity_error(cell_velocity(field), ref)


def velocity_error(u_num, u_ref) -> float:
    norm = np.sqrt(np.sum(u_ref * u_ref))
    if not norm > 0:
        raise DegenerateComparisonError("reference velocity has zero norm")
    diff = u_num - u_ref
    return float(np.sqrt(np.sum(diff * diff)) / norm)


def fit_decay_viscosity(times, samples, alpha) -> float:
    """Viscosity from a least-squares fit of ``ln(max|u|)`` against time."""
    times = np.asarray(times, dtype=np.float64)
    samples = np.asarray(samples, dtype=np.float64)
    if times.shape != samples.shape or times.size < 10:
        raise ValueError("need matching time and sample arrays with at least 10 entries")
    if np.any(~(samples > 0)):
        raise ValueError("decay samples must be positive")
    slope = np.polyfit(times, np.log(samples), 1)[0]
    return float(-slope / alpha)
