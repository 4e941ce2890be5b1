"""Irrotational Chaplygin-gas flow around the obstacle via its velocity potential.

With pressure ``P = P0 - A / rho`` and the normalization ``A = rho_bar^2``
(unit sound speed at the background), Bernoulli's law
``h(rho) = -(phi_t + |grad phi|^2 / 2)`` with ``h(rho) = 1/2 - A / (2 rho^2)``
inverts in closed form to ``rho = rho_bar / sqrt(1 + 2 phi_t + |grad phi|^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import RadialGrid, normal_derivative
from .initial import make_bump_data
from .nullform import chaplygin_spec
from .solver import RadialProblem


class PhysicalityError(ValueError):
    """The flow left the regime ``rho > A / P0`` (or the Bernoulli radicand vanished)."""


@dataclass(frozen=True)
class GasParameters:
    rho_bar: float = 1.0
    P0: float = 2.0

    def __post_init__(self):
        if self.rho_bar <= 0 or self.P0 <= 0:
            raise ValueError("rho_bar and P0 must be positive")
        if self.P0 - self.A / self.rho_bar <= 0:
            raise ValueError(f"background pressure P0 - A/rho_bar must be positive (P0 > rho_bar = {self.rho_bar})")

    @property
    def A(self) -> float:
        return self.rho_bar**2

    @property
    def rho_floor(self) -> float:
        """``A / P0``: below this density the pressure is negative."""
        return self.A / self.P0

    def pressure(self, rho):
        return self.P0 - self.A / np.asarray(rho, dtype=float)

    def sound_speed(self, rho):
        return np.sqrt(self.A) / np.asarray(rho, dtype=float)

    def enthalpy(self, rho):
        return 0.5 - self.A / (2.0 * np.asarray(rho, dtype=float) ** 2)

    def to_json(self):
        return {"rho_bar": self.rho_bar, "P0": self.P0}


def density_from_potential(dphi, params: GasParameters = GasParameters()):
    """``rho`` from ``dphi = (phi_t, grad phi)`` (trailing axis of length 4)."""
    dphi = np.asarray(dphi, dtype=float)
    radicand = 1.0 + 2.0 * dphi[..., 0] + np.sum(dphi[..., 1:] ** 2, axis=-1)
    if np.any(radicand <= 0):
        raise PhysicalityError("Bernoulli radicand 1 + 2 phi_t + |grad phi|^2 is not positive")
    rho = params.rho_bar / np.sqrt(radicand)
    return float(rho) if rho.ndim == 0 else rho


def bernoulli_residual(dphi, rho, params: GasParameters = GasParameters()):
    dphi = np.asarray(dphi, dtype=float)
    return dphi[..., 0] + 0.5 * np.sum(dphi[..., 1:] ** 2, axis=-1) + params.enthalpy(rho)


def _radial_dphi(ut, ur):
    dphi = np.zeros(np.shape(ut) + (4,))
    dphi[..., 0] = ut
    dphi[..., 3] = ur
    return dphi


@dataclass
class FlowState:
    t: float
    rho: np.ndarray
    velocity: np.ndarray
    rho_min: float
    rho_max: float
    max_speed: float
    slip_residual: float
    physical: bool = True


@dataclass
class FlowReport:
    states: list = field(default_factory=list)
    violation_time: float | None = None

    def series(self, name):
        return np.array([getattr(s, name) for s in self.states])


def flow_state(t, u, ut, ur, grid: RadialGrid, params: GasParameters) -> FlowState:
    rho = density_from_potential(_radial_dphi(ut, ur), params)
    return FlowState(
        t=float(t), rho=rho, velocity=np.asarray(ur, dtype=float).copy(),
        rho_min=float(np.min(rho)), rho_max=float(np.max(rho)),
        max_speed=float(np.max(np.abs(ur))),
        slip_residual=abs(normal_derivative(u, grid.dr)),
        physical=bool(np.min(rho) > params.rho_floor),
    )


def flow_report(snapshots, grid: RadialGrid, params: GasParameters = GasParameters()) -> FlowReport:
    """Density and velocity per snapshot; stops at the first unphysical state."""
    report = FlowReport()
    for snap in snapshots:
        try:
            state = flow_state(snap["t"], snap["u"], snap["du_dt"], snap["du_dr"], grid, params)
        except PhysicalityError:
            report.violation_time = float(snap["t"])
            break
        report.states.append(state)
        if not state.physical:
            report.violation_time = state.t
            break
    return report


def flow_hook(grid: RadialGrid, params: GasParameters):
    """Row hook for :class:`~nullwave.solver.RadialProblem`: density range, speed, mass."""
    def hook(t, u, ut, ur):
        try:
            rho = density_from_potential(_radial_dphi(ut, ur), params)
        except PhysicalityError:
            return {"rho_min": float("nan"), "rho_max": float("nan"), "max_speed": float(np.max(np.abs(ur))),
                    "slip_residual": abs(normal_derivative(u, grid.dr)), "mass_excess": float("nan"),
                    "outer_flux": float("nan")}
        return {
            "rho_min": float(np.min(rho)),
            "rho_max": float(np.max(rho)),
            "max_speed": float(np.max(np.abs(ur))),
            "slip_residual": abs(normal_derivative(u, grid.dr)),
            "mass_excess": grid.integrate(rho - params.rho_bar),
            "outer_flux": float(4 * np.pi * grid.r[-1] ** 2 * rho[-1] * ur[-1]),
        }
    return hook


def mass_balance_residual(rows) -> float:
    """Max ``|d/dt mass + outer flux|`` from consecutive diagnostic rows (centered in time)."""
    t = np.array([row["t"] for row in rows if "mass_excess" in row])
    m = np.array([row["mass_excess"] for row in rows if "mass_excess" in row])
    f = np.array([row["outer_flux"] for row in rows if "mass_excess" in row])
    if t.size < 3:
        return 0.0
    dm = (m[2:] - m[:-2]) / (t[2:] - t[:-2])
    return float(np.max(np.abs(dm + f[1:-1])))


def chaplygin_problem(epsilon, grid: RadialGrid, t_final, *, center_r=3.0, width=1.0, phi0_amp=1.0,
                      phi1_amp=0.0, params: GasParameters = GasParameters(), b_max=None,
                      **kwargs) -> RadialProblem:
    """Radial Chaplygin run with prescribed potential bump data scaled by ``epsilon``."""
    data = make_bump_data(center_r, width, grid, u0_amp=phi0_amp, u1_amp=phi1_amp,
                          epsilon=epsilon, b_max=b_max)
    hooks = list(kwargs.pop("row_hooks", [])) + [flow_hook(grid, params)]
    return RadialProblem(grid, chaplygin_spec(), data, t_final, row_hooks=hooks, **kwargs)
