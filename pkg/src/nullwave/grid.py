"""Radial grid and second-order finite-difference stencils."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes ``r_j = r_min + j dr`` on ``[r_min, r_max]``."""

    r_min: float
    r_max: float
    dr: float

    def __post_init__(self):
        if self.dr <= 0:
            raise ValueError("dr must be positive")
        if self.n < 16:
            raise ValueError(f"grid has {self.n} nodes; need at least 16")

    @property
    def n(self) -> int:
        return int(round((self.r_max - self.r_min) / self.dr)) + 1

    @cached_property
    def r(self) -> np.ndarray:
        r = self.r_min + self.dr * np.arange(self.n)
        r.setflags(write=False)
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights for ``int f r^2 dr`` (no 4 pi)."""
        w = np.full(self.n, self.dr)
        w[0] = w[-1] = 0.5 * self.dr
        w = w * self.r**2
        w.setflags(write=False)
        return w

    def integrate(self, f) -> float:
        """``int_O f dx`` for a radial integrand."""
        return float(4.0 * np.pi * np.dot(self.weights, f))

    def l2(self, f) -> float:
        return float(np.sqrt(self.integrate(np.asarray(f) ** 2)))


def d_r(u, dr):
    """First derivative: centered inside, second-order one-sided at both ends."""
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - u[:-2]) / (2 * dr)
    out[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dr)
    out[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dr)
    return out


def d_rr(u, dr):
    """Second derivative: centered inside, second-order one-sided at both ends."""
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / dr**2
    out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / dr**2
    out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / dr**2
    return out


def normal_derivative(u, dr) -> float:
    """One-sided ``d_r u`` at the inner boundary node."""
    return float((-3 * u[0] + 4 * u[1] - u[2]) / (2 * dr))


class NeumannStencils:
    """Solver stencils with the reflection ghost ``u_{-1} = u_1 - 2 dr g``.

    ``g`` is the prescribed ``d_r u`` at ``r_min`` (zero for the homogeneous
    problem).  Beyond the last node the field is taken to be zero, which is
    exact while the outer edge lies outside the domain of dependence.
    """

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        r = grid.r
        dr = grid.dr
        self.inv_r = 1.0 / r
        # flux form (1/r^2) d_r (r^2 d_r u)
        rp = (r + 0.5 * dr) ** 2
        rm = (r - 0.5 * dr) ** 2
        self.cp = rp / (r**2 * dr**2)
        self.cm = rm / (r**2 * dr**2)

    def _padded(self, u, g):
        dr = self.grid.dr
        pad = np.empty(u.size + 2)
        pad[1:-1] = u
        pad[0] = u[1] - 2 * dr * g
        pad[-1] = 0.0
        return pad

    def grad(self, u, g=0.0):
        p = self._padded(u, g)
        return (p[2:] - p[:-2]) / (2 * self.grid.dr)

    def second(self, u, g=0.0):
        p = self._padded(u, g)
        return (p[2:] - 2 * p[1:-1] + p[:-2]) / self.grid.dr**2

    def laplacian(self, u, g=0.0):
        p = self._padded(u, g)
        return self.cp * (p[2:] - p[1:-1]) - self.cm * (p[1:-1] - p[:-2])
