"""Initial data, compatibility functions and the compatibility-order check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ObstacleShape
from .grid import NeumannStencils, RadialGrid, d_r, d_rr, normal_derivative
from .nullform import NullFormSpec, RadialNonlinearity


class DataError(ValueError):
    pass


class DegeneracyError(ArithmeticError):
    """The coefficient of ``d_t^2 u`` vanishes, so the equation cannot be solved for it."""


def bump(s):
    """``exp(-1/(1 - s^2))`` for ``|s| < 1``, zero elsewhere (C-infinity)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def bump_derivative(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2)
    return out


@dataclass
class InitialData:
    """``(u, u_t)(0) = epsilon (u0, u1)`` on a radial grid."""

    grid: RadialGrid
    u0: np.ndarray
    u1: np.ndarray
    epsilon: float = 1.0
    support_radius: float = np.inf

    @property
    def position(self):
        return self.epsilon * self.u0

    @property
    def velocity(self):
        return self.epsilon * self.u1


def make_bump_data(center_r, width, grid: RadialGrid, *, u0_amp=1.0, u1_amp=0.0,
                   epsilon=1.0, b_max=None, outgoing=False) -> InitialData:
    """Radial bump data ``amp * bump((r - center_r) / width)``, clear of the boundary.

    With ``outgoing=True`` the velocity is ``-(d_r + 1/r) u0`` so that the
    wave ``w(r - t) / r`` travels outward only.
    """
    b_max = grid.r_min if b_max is None else b_max
    if width <= 0:
        raise DataError("bump width must be positive")
    if center_r - width <= b_max:
        raise DataError(
            f"bump support [{center_r - width:g}, {center_r + width:g}] reaches the "
            f"obstacle boundary (max b = {b_max:g})"
        )
    r = grid.r
    s = (r - center_r) / width
    u0 = u0_amp * bump(s)
    if outgoing:
        u1 = -(u0_amp * bump_derivative(s) / width + u0 / r)
    else:
        u1 = u1_amp * bump(s)
    return InitialData(grid, u0, u1, epsilon, center_r + width)


@dataclass
class CompatibilitySequence:
    psis: list
    order: int = 2


def build_psi2(data: InitialData, spec: NullFormSpec, forcing=None) -> CompatibilitySequence:
    """``psi_k = d_t^k u(0)`` for ``k <= 2``, from the equation solved for ``d_t^2 u``.

    ``forcing`` is the source term at ``t = 0`` (array), if any.
    """
    grid = data.grid
    st = NeumannStencils(grid)
    psi0, psi1 = data.position, data.velocity
    lap = st.laplacian(psi0)
    rhs = lap if forcing is None else lap + forcing
    if spec.is_zero:
        return CompatibilitySequence([psi0, psi1, rhs])
    nl = RadialNonlinearity(spec)
    ut, ur = psi1, st.grad(psi0)
    utr = st.grad(psi1)
    urr = st.second(psi0)
    ur_over_r = ur * st.inv_r
    zero = np.zeros_like(ut)
    # N is affine in u_tt: N = N|_{u_tt=0} + c u_tt
    rest = nl(ut, ur, zero, utr, urr, ur_over_r)
    coeff = nl.utt_coefficient(ut, ur)
    denom = 1.0 - coeff
    if np.any(np.abs(denom) < 1e-6):
        raise DegeneracyError("coefficient of d_t^2 u vanishes (sum |Q^ab| <= 1/2 violated)")
    return CompatibilitySequence([psi0, psi1, (rhs + rest) / denom])


def check_compatibility_order(seq: CompatibilitySequence, grid: RadialGrid,
                              tol: float = 1e-10, shape: ObstacleShape | None = None) -> int:
    """Largest ``m <= 3`` with ``d_nu psi_k = 0`` at the boundary for all ``k < m``."""
    if shape is not None and abs(shape.b_const - grid.r_min) > 1e-12:
        raise DataError("radial grid does not start at the obstacle boundary")
    m = 0
    for psi in seq.psis:
        if abs(normal_derivative(psi, grid.dr)) > tol:
            break
        m += 1
    return m


def weighted_data_norm(data: InitialData) -> float:
    """``sum_{|b|<=2} ||<x>^{|b|} D^b u0|| + ||<x>^{1+|b|} D^b u1||`` for radial data."""
    grid = data.grid
    r, dr = grid.r, grid.dr
    jx = np.sqrt(1.0 + r**2)
    total = 0.0
    for f, shift in ((data.position, 0), (data.velocity, 1)):
        fr, frr = d_r(f, dr), d_rr(f, dr)
        hess = np.sqrt(frr**2 + 2.0 * (fr / r) ** 2)
        for k, g in enumerate((f, np.abs(fr), hess)):
            total += grid.l2(jx ** (k + shift) * g)
    return total
