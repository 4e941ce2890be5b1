"""Characteristic-integral solution of the forced radial Neumann problem.

For ``V_tt - V_rr - (2/r) V_r = F1`` on ``r > 1``, ``V_r(t, 1) = F2(t)`` and
``V = 0`` for ``t <= 0``::

    V(t, r) = V0(t - r + 1) / r
              + (1/r) int_1^r int_{r'}^{t - r + 2r'} s F1(t - r + 2r' - s, s) ds dr'
    V0(p)   = e^{-p} int_0^p e^l [ int_1^{l+1} s F1(l + 1 - s, s) ds - F2(l) ] dl

All integrals use composite Simpson.  :func:`validate_oracle` substitutes the
quadrature output back into the PDE and the boundary condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _simpson_nodes(a, b, n):
    """Nodes and weights of composite Simpson on ``[a, b]`` (broadcast over arrays)."""
    if n % 2:
        n += 1
    k = np.arange(n + 1)
    w = np.where(k % 2 == 1, 4.0, 2.0)
    w[0] = w[-1] = 1.0
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    h = (b - a) / n
    return a + h * k, w * h / 3.0


def zero_forcing(t, r):
    return np.zeros(np.broadcast(t, r).shape)


def zero_boundary(t):
    return np.zeros(np.shape(t))


@dataclass(frozen=True)
class SphericalOracleProblem:
    F1: Callable = zero_forcing
    F2: Callable = zero_boundary
    n_quad: int = 160

    def f1(self, t, r):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0.0, self.F1(np.maximum(t, 0.0), r), 0.0)

    def f2(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0.0, self.F2(np.maximum(t, 0.0)), 0.0)


def _incoming(problem, l):
    """``int_1^{l+1} s F1(l + 1 - s, s) ds`` for an array of ``l``."""
    s, w = _simpson_nodes(1.0, l + 1.0, problem.n_quad)
    return np.sum(w * s * problem.f1(l[..., None] + 1.0 - s, s), axis=-1)


def boundary_history(problem: SphericalOracleProblem, p):
    """``V0(p)``; zero for ``p <= 0``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.zeros_like(p)
    pos = p > 0
    if np.any(pos):
        l, w = _simpson_nodes(0.0, p[pos], problem.n_quad)
        integrand = np.exp(l - p[pos][:, None]) * (_incoming(problem, l) - problem.f2(l))
        out[pos] = np.sum(w * integrand, axis=-1)
    return out


def spherical_oracle(problem: SphericalOracleProblem, t, r):
    """``V(t, r)`` at scalar ``t`` and scalar or array ``r >= 1``."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 1.0 - 1e-12):
        raise ValueError("oracle is defined for r >= 1")
    if t < 0:
        return np.zeros_like(r_arr) if np.ndim(r) else 0.0
    out = boundary_history(problem, t - r_arr + 1.0) / r_arr
    # second term: r' in [1, r], s in [r', t - r + 2r'] (empty when the upper end is below r')
    rp, wp = _simpson_nodes(np.ones_like(r_arr), r_arr, problem.n_quad)
    top = t - r_arr[:, None] + 2.0 * rp
    s, ws = _simpson_nodes(rp, np.maximum(top, rp), problem.n_quad)
    inner = np.sum(ws * s * problem.f1(top[..., None] - s, s), axis=-1)
    out = out + np.sum(wp * inner, axis=-1) / r_arr
    return out if np.ndim(r) else float(out[0])


@dataclass
class OracleResidual:
    h: float
    pde: float
    boundary: float


def validate_oracle(problem: SphericalOracleProblem, points, h) -> OracleResidual:
    """Max residual of the PDE at interior ``(t, r)`` points and of the BC at ``r = 1``.

    Second-order differences with step ``h``; the residual should shrink like
    ``h^2`` when the formula is right.
    """
    pde = 0.0
    for t, r in points:
        rr = np.array([r - h, r, r + h])
        v_m, v_0, v_p = (spherical_oracle(problem, tt, rr) for tt in (t - h, t, t + h))
        vtt = (v_p[1] - 2 * v_0[1] + v_m[1]) / h**2
        vrr = (v_0[2] - 2 * v_0[1] + v_0[0]) / h**2
        vr = (v_0[2] - v_0[0]) / (2 * h)
        res = vtt - vrr - 2.0 / r * vr - float(problem.f1(t, r))
        pde = max(pde, abs(res))
    bc = 0.0
    for t, _ in points:
        v = spherical_oracle(problem, t, np.array([1.0, 1.0 + h, 1.0 + 2 * h]))
        vr = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
        bc = max(bc, abs(vr - float(problem.f2(t))))
    return OracleResidual(h, pde, bc)
