"""Low-Mach equilibrium, BGK collision and Chapman-Enskog initialization.

All functions broadcast over leading cell axes: per-velocity arrays have the
velocity index last, velocity vectors have the spatial component last.
"""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field as dc_field

import numpy as np

from .velocity_set import DiscreteVelocitySet, moments

# smallest density accepted before a field is declared non-physical
RHO_FLOOR = 1e-12


class NonPhysicalFieldError(FloatingPointError):
    """Raised when a density drops below ``RHO_FLOOR`` or turns non-finite."""


@dataclass(frozen=True)
class MacroState:
    rho: np.ndarray | float
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=np.float64))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=np.float64))


@dataclass(frozen=True)
class RelaxationModel:
    """BGK relaxation with collision prefactor ``1 / (epsilon * tau)``.

    With ``tau = 1`` the scaling parameter alone sets the effective
    relaxation time and the shear viscosity is ``epsilon * tau * rt0``.
    """

    epsilon: float
    tau: float = 1.0
    tau_eff: float = dc_field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "tau_eff", self.epsilon * self.tau)

    def viscosity(self, rt0: float) -> float:
        return self.tau_eff * rt0


def check_density(rho, where="field"):
    rho = np.asarray(rho)
    if not np.all(np.isfinite(rho)) or np.any(rho < RHO_FLOOR):
        bad = float(np.nanmin(rho)) if np.any(np.isfinite(rho)) else float("nan")
        raise NonPhysicalFieldError(f"non-physical density in {where} (min {bad:.3e})")


def equilibrium(vset: DiscreteVelocitySet, state: MacroState) -> np.ndarray:
    """Second-order Hermite (low-Mach) expansion of the Maxwellian."""
    rho = state.rho
    u = state.u
    check_density(rho, "equilibrium input")
    rt0 = vset.rt0
    xu = u @ vset.velocities.T
    uu = np.sum(u * u, axis=-1)[..., None]
    return vset.weights * rho[..., None] * (
        1.0 + xu / rt0 + xu * xu / (2 * rt0 * rt0) - uu / (2 * rt0)
    )


def macro_state(vset: DiscreteVelocitySet, f, where="field") -> MacroState:
    rho, mom = moments(vset, f)
    check_density(rho, where)
    return MacroState(rho, mom / rho[..., None])


def remove_conserved_moments(vset: DiscreteVelocitySet, d) -> np.ndarray:
    """Subtract the Hermite projection of ``d`` onto density and momentum.

    Applied to ``f_eq - f``, whose conserved moments vanish analytically, this
    strips the rounding residue so that it cannot accumulate over a run.
    """
    r0, r = moments(vset, d)
    return d - vset.weights * (r0[..., None] + (r @ vset.velocities.T) / vset.rt0)


def relax(vset: DiscreteVelocitySet, g, coef, where="field") -> np.ndarray:
    """``g + coef * (f_eq(g) - g)``, conserving the moments of ``g``."""
    g = np.asarray(g, dtype=np.float64)
    d = equilibrium(vset, macro_state(vset, g, where)) - g
    return g + coef * remove_conserved_moments(vset, d)


def bgk_collision(vset: DiscreteVelocitySet, f, model: RelaxationModel) -> np.ndarray:
    """Scaled collision term ``Q / epsilon = -(f - f_eq) / tau_eff``."""
    f = np.asarray(f, dtype=np.float64)
    d = equilibrium(vset, macro_state(vset, f)) - f
    return remove_conserved_moments(vset, d) / model.tau_eff


def euler_time_derivatives(vset, state, grad_u, grad_rho):
    """Time derivatives of ``(rho, u)`` from the isothermal Euler balance.

    ``grad_u[..., a, b]`` is ``d u_a / d x_b``.
    """
    rho = state.rho
    u = state.u
    div_u = np.trace(grad_u, axis1=-2, axis2=-1)
    u_grad_rho = np.sum(u * grad_rho, axis=-1)
    dt_rho = -(rho * div_u + u_grad_rho)
    adv = np.einsum("...ab,...b->...a", grad_u, u)
    dt_u = -adv - vset.rt0 * grad_rho / rho[..., None]
    return dt_rho, dt_u


def chapman_enskog_f1(vset, state, grad_u, grad_rho, dt_state, model) -> np.ndarray:
    """First-order Chapman-Enskog coefficient ``-tau * D0 f_eq``.

    ``dt_state`` is ``(dt_rho, dt_u)``; the material derivative is pushed
    through the equilibrium's dependence on ``rho`` and ``u`` by the chain
    rule. Multiply by ``epsilon`` to obtain the non-equilibrium part.
    """
    rho = np.asarray(state.rho, dtype=np.float64)
    u = np.asarray(state.u, dtype=np.float64)
    grad_u = np.asarray(grad_u, dtype=np.float64)
    grad_rho = np.asarray(grad_rho, dtype=np.float64)
    dt_rho, dt_u = (np.asarray(a, dtype=np.float64) for a in dt_state)
    dim = vset.dim
    if u.shape[-1] != dim or grad_u.shape[-2:] != (dim, dim) or grad_rho.shape[-1] != dim:
        raise ValueError("gradient shapes do not match the velocity set dimension")

    rt0 = vset.rt0
    xi = vset.velocities
    feq = equilibrium(vset, MacroState(rho, u))
    xu = u @ xi.T
    # d f_eq / d u_a for every velocity, trailing axes (q, dim)
    dfeq_du = (vset.weights * rho[..., None])[..., None] * (
        xi / rt0 + xu[..., None] * xi / (rt0 * rt0) - u[..., None, :] / rt0
    )
    # material derivatives along each discrete velocity
    d_rho = dt_rho[..., None] + grad_rho @ xi.T
    d_u = dt_u[..., None, :] + np.einsum("...ab,qb->...qa", grad_u, xi)
    d_feq = feq / rho[..., None] * d_rho + np.sum(dfeq_du * d_u, axis=-1)
    return -model.tau * d_feq


def init_ce(field, analytic, model: RelaxationModel, time_derivatives="euler"):
    """Fill ``field`` with ``f_eq + epsilon * f1`` at every cell center.

    ``analytic.initial_data(coords)`` must return ``(state, grad_u,
    grad_rho, (dt_rho, dt_u))`` at the given center coordinates. With
    ``time_derivatives="euler"`` the supplied time derivatives are replaced
    by the Euler balance, which keeps ``f1`` free of conserved moments.
    """
    vset = field.vset
    state, grad_u, grad_rho, dt_state = analytic.initial_data(field.grid.centers())
    if time_derivatives == "euler":
        dt_state = euler_time_derivatives(vset, state, grad_u, grad_rho)
    elif time_derivatives != "analytic":
        raise ValueError(f"unknown time derivative source {time_derivatives!r}")
    f = equilibrium(vset, state)
    f = f + model.epsilon * chapman_enskog_f1(vset, state, grad_u, grad_rho, dt_state, model)
    field.values[...] = f
