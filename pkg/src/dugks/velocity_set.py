"""Discrete velocity sets built on three-point Gauss-Hermite quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DiscreteVelocitySet:
    """Quadrature abscissae and weights for a discrete velocity space.

    ``velocities`` has shape ``(q, dim)`` and ``weights`` shape ``(q,)``.
    Both arrays are made read-only on construction.
    """

    name: str
    dim: int
    velocities: np.ndarray
    weights: np.ndarray
    rt0: float
    xi_max: float = field(init=False)

    def __post_init__(self):
        vel = np.array(self.velocities, dtype=np.float64).reshape(-1, self.dim)
        w = np.array(self.weights, dtype=np.float64)
        if vel.shape[0] != w.shape[0]:
            raise ValueError(
                f"{vel.shape[0]} velocities but {w.shape[0]} weights"
            )
        vel.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "xi_max", float(np.max(np.abs(vel))))

    @property
    def q(self) -> int:
        return self.weights.shape[0]

    @property
    def c(self) -> float:
        return float(np.sqrt(3.0 * self.rt0))


def _check_rt0(rt0):
    if not np.isfinite(rt0) or rt0 <= 0:
        raise ValueError(f"rt0 must be positive, got {rt0}")


def build_d2q9(rt0: float) -> DiscreteVelocitySet:
    """D2Q9 set with lattice speed ``c = sqrt(3 rt0)``.

    Ordering: rest, the four axis directions counter-clockwise from +x,
    then the four diagonals counter-clockwise from (+1, +1).
    """
    _check_rt0(rt0)
    c = np.sqrt(3.0 * rt0)
    unit = np.array(
        [
            [0, 0],
            [1, 0], [0, 1], [-1, 0], [0, -1],
            [1, 1], [-1, 1], [-1, -1], [1, -1],
        ],
        dtype=np.float64,
    )
    # rest weight closes the sum: sum(w) == 1 exactly on the stored doubles,
    # any residual biases equilibrium mass and dt/tau amplifies it
    w_axis, w_diag = 1 / 9, 1 / 36
    w_rest = 1.0 - 4 * w_axis - 4 * w_diag
    weights = np.array([w_rest] + [w_axis] * 4 + [w_diag] * 4)
    return DiscreteVelocitySet("D2Q9", 2, c * unit, weights, float(rt0))


def build_d1q3(rt0: float) -> DiscreteVelocitySet:
    """D1Q3 set: velocities ``{0, +c, -c}``, weights ``{2/3, 1/6, 1/6}``."""
    _check_rt0(rt0)
    c = np.sqrt(3.0 * rt0)
    w_rest = 2 / 3
    w_side = (1.0 - w_rest) / 2  # exact, keeps sum(w) == 1 without rounding bias
    return DiscreteVelocitySet(
        "D1Q3", 1, np.array([[0.0], [c], [-c]]), np.array([w_rest, w_side, w_side]), float(rt0)
    )


def build_set(name: str, rt0: float) -> DiscreteVelocitySet:
    builders = {"D2Q9": build_d2q9, "D1Q3": build_d1q3}
    try:
        return builders[name.upper()](rt0)
    except KeyError:
        raise ValueError(f"unknown velocity set {name!r}") from None


def moments(vset: DiscreteVelocitySet, f) -> tuple[np.ndarray, np.ndarray]:
    """Density and momentum of ``f``.

    ``f`` may carry leading cell axes; the last axis indexes velocities.
    Returns ``rho`` with the leading shape and ``momentum`` with an extra
    trailing axis of length ``dim``. Velocity is left to the caller.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != vset.q:
        raise ValueError(
            f"expected {vset.q} values per cell for {vset.name}, got {f.shape[-1]}"
        )
    rho = f.sum(axis=-1)
    mom = f @ vset.velocities
    return rho, mom
