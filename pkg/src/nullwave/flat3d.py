"""Linear 3-D Neumann-wave evolution in flattened spherical coordinates.

The exterior of the obstacle is pulled back to ``1 <= |y| <= Y`` by the
flattening map and ``y`` is written in spherical coordinates
``q = (rho, theta, phi)``.  The Laplacian becomes the divergence form
``(1/sqrt g) d_a (sqrt g G^{ab} d_b u)`` with ``G = (dq/dx)(dq/dx)^T``, so the
variable-coefficient terms of the flattened problem and the corrected
boundary operator are both carried by the metric: zero conormal flux
``G^{rho b} d_b u = 0`` at ``rho = 1`` is exactly ``d_nu u = 0`` on the
obstacle.  Cells are centred in every direction; ``theta`` cell centres avoid
the poles and the pole faces carry no flux because ``sqrt g`` vanishes there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import CutoffProfile, FlattenMap, ObstacleShape, jacobian

MAX_CELLS = (64, 32, 64)


class GridConfigError(ValueError):
    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


@dataclass(frozen=True)
class FlatGrid:
    n_rho: int = 48
    n_theta: int = 24
    n_phi: int = 48
    y_max: float = 5.0

    def __post_init__(self):
        for n, cap, name in zip((self.n_rho, self.n_theta, self.n_phi), MAX_CELLS,
                                ("n_rho", "n_theta", "n_phi")):
            if not 4 <= n <= cap:
                raise GridConfigError(f"{name}={n} outside [4, {cap}]")
        if self.n_phi % 2:
            raise GridConfigError("n_phi must be even (pole ghosts use the antipodal meridian)")
        if self.y_max <= 1.0:
            raise GridConfigError("y_max must exceed 1")

    @property
    def d_rho(self):
        return (self.y_max - 1.0) / self.n_rho

    @property
    def d_theta(self):
        return np.pi / self.n_theta

    @property
    def d_phi(self):
        return 2 * np.pi / self.n_phi

    def centers(self, axis):
        if axis == 0:
            return 1.0 + (np.arange(self.n_rho) + 0.5) * self.d_rho
        if axis == 1:
            return (np.arange(self.n_theta) + 0.5) * self.d_theta
        return (np.arange(self.n_phi) + 0.5) * self.d_phi


def _y_of_q(rho, theta, phi):
    st = np.sin(theta)
    return np.stack([rho * st * np.cos(phi), rho * st * np.sin(phi), rho * np.cos(theta)], axis=-1)


def _dq_dy(rho, theta, phi):
    """Rows: gradients of rho, theta, phi with respect to y."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    z = np.zeros_like(rho * theta * phi)
    g_rho = np.stack([st * cp, st * sp, ct + z], axis=-1)
    g_th = np.stack([ct * cp, ct * sp, -st + z], axis=-1) / rho[..., None]
    # 1/sin(theta) is only used at cell centres and rho/phi faces (theta never 0)
    g_ph = np.stack([-sp, cp, z], axis=-1) / (rho * np.where(st == 0, 1.0, st))[..., None]
    return np.stack([g_rho, g_th, g_ph], axis=-2)


@dataclass
class Metric:
    sqrt_g: np.ndarray
    G: np.ndarray
    x: np.ndarray


def metric_at(fmap: FlattenMap, rho, theta, phi) -> Metric:
    rho, theta, phi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho, theta, phi)))
    y = _y_of_q(rho, theta, phi)
    x = fmap.inverse(y)
    dydx = jacobian(fmap, x)
    dqdx = _dq_dy(rho, theta, phi) @ dydx
    G = dqdx @ np.swapaxes(dqdx, -1, -2)
    det_dqdx = np.abs(np.linalg.det(dqdx))
    with np.errstate(divide="ignore"):
        sqrt_g = np.where(det_dqdx > 0, 1.0 / np.where(det_dqdx > 0, det_dqdx, 1.0), 0.0)
    return Metric(sqrt_g, G, x)


class FlatOperator:
    """Finite-volume Laplacian on the flattened grid."""

    def __init__(self, grid: FlatGrid, shape: ObstacleShape, cutoff: CutoffProfile | None = None):
        self.grid = grid
        self.shape = shape
        self.fmap = FlattenMap(shape) if cutoff is None else FlattenMap(shape, cutoff)
        g = grid
        rc, tc, pc = g.centers(0), g.centers(1), g.centers(2)
        rf = 1.0 + np.arange(g.n_rho + 1) * g.d_rho
        tf = np.arange(g.n_theta + 1) * g.d_theta
        pf = np.arange(g.n_phi + 1) * g.d_phi
        cell = metric_at(self.fmap, rc[:, None, None], tc[None, :, None], pc[None, None, :])
        self.x = cell.x
        self.sqrt_g = cell.sqrt_g
        self.cell_volume = cell.sqrt_g * g.d_rho * g.d_theta * g.d_phi
        # face coefficients sqrt(g) G^{a b}, a = face normal direction
        fr = metric_at(self.fmap, rf[:, None, None], tc[None, :, None], pc[None, None, :])
        ft = metric_at(self.fmap, rc[:, None, None], tf[None, :, None], pc[None, None, :])
        fp = metric_at(self.fmap, rc[:, None, None], tc[None, :, None], pf[None, None, :])
        self.flux_coef = [
            fr.sqrt_g[..., None] * fr.G[..., 0, :],
            ft.sqrt_g[..., None] * ft.G[..., 1, :],
            fp.sqrt_g[..., None] * fp.G[..., 2, :],
        ]
        # rho = 1 carries no conormal flux (Neumann); the outer face is reflecting too
        self.flux_coef[0][0] = 0.0
        self.flux_coef[0][-1] = 0.0
        # pole faces: sqrt g = 0 already, enforce exactly
        self.flux_coef[1][:, 0] = 0.0
        self.flux_coef[1][:, -1] = 0.0
        self.has_cross = any(
            np.max(np.abs(np.delete(c, a, axis=-1))) > 1e-12 for a, c in enumerate(self.flux_coef)
        )
        self._stiff = max(
            float(np.max(cell.G[..., a, a])) / d**2
            for a, d in enumerate((g.d_rho, g.d_theta, g.d_phi))
        )

    def max_stable_dt(self, cfl=0.5):
        """Leapfrog bound ``dt <= 2 / sqrt(lambda_max)`` with ``lambda_max <= 4 sum G^aa/dq_a^2``."""
        return cfl * 2.0 / np.sqrt(4.0 * 3.0 * self._stiff)

    def _pad(self, u):
        """Ghost layers: zero-gradient in rho, antipodal across poles, periodic in phi."""
        g = self.grid
        p = np.empty((g.n_rho + 2, g.n_theta + 2, g.n_phi + 2))
        p[1:-1, 1:-1, 1:-1] = u
        half = g.n_phi // 2
        p[1:-1, 0, 1:-1] = np.roll(u[:, 0, :], half, axis=-1)
        p[1:-1, -1, 1:-1] = np.roll(u[:, -1, :], half, axis=-1)
        p[:, :, 0] = p[:, :, -2]
        p[:, :, -1] = p[:, :, 1]
        p[0] = p[1]
        p[-1] = p[-2]
        return p

    def laplacian(self, u):
        g = self.grid
        d = (g.d_rho, g.d_theta, g.d_phi)
        p = self._pad(u)
        c = p[1:-1, 1:-1, 1:-1]
        # centered derivatives at cells (for the tangential parts of face gradients)
        if self.has_cross:
            grad_c = [
                (p[2:, 1:-1, 1:-1] - p[:-2, 1:-1, 1:-1]) / (2 * d[0]),
                (p[1:-1, 2:, 1:-1] - p[1:-1, :-2, 1:-1]) / (2 * d[1]),
                (p[1:-1, 1:-1, 2:] - p[1:-1, 1:-1, :-2]) / (2 * d[2]),
            ]
        div = np.zeros_like(u)
        for a in range(3):
            lo = [slice(1, -1)] * 3
            lo[a] = slice(0, -1)
            hi = [slice(1, -1)] * 3
            hi[a] = slice(1, None)
            normal = (p[tuple(hi)] - p[tuple(lo)]) / d[a]
            coef = self.flux_coef[a]
            flux = coef[..., a] * normal
            if self.has_cross:
                for b in range(3):
                    if b == a:
                        continue
                    gb = self._face_average(grad_c[b], a)
                    flux = flux + coef[..., b] * gb
            first = [slice(None)] * 3
            first[a] = slice(1, None)
            last = [slice(None)] * 3
            last[a] = slice(0, -1)
            div += (flux[tuple(first)] - flux[tuple(last)]) / d[a]
        return div / self.sqrt_g

    @staticmethod
    def _face_average(f, axis):
        """Average a cell field onto the faces normal to ``axis`` (copies at the ends)."""
        shape = list(f.shape)
        shape[axis] += 1
        out = np.empty(shape)
        inner = [slice(None)] * 3
        inner[axis] = slice(1, -1)
        a = [slice(None)] * 3
        a[axis] = slice(1, None)
        b = [slice(None)] * 3
        b[axis] = slice(0, -1)
        out[tuple(inner)] = 0.5 * (f[tuple(a)] + f[tuple(b)])
        e0 = [slice(None)] * 3
        e0[axis] = slice(0, 1)
        e1 = [slice(None)] * 3
        e1[axis] = slice(-1, None)
        out[tuple(e0)] = f[tuple(e0)]
        out[tuple(e1)] = f[tuple(e1)]
        return out

    def integrate(self, f):
        return float(np.sum(f * self.cell_volume))

    def energy(self, u_prev, u, dt):
        """Staggered leapfrog energy ``|u_t|^2 + (-Lap u, u)`` at half steps."""
        ut = (u - u_prev) / dt
        return self.integrate(ut * ut) - 0.5 * (self.integrate(u * self.laplacian(u_prev))
                                                + self.integrate(u_prev * self.laplacian(u)))


@dataclass
class Flat3DResult:
    times: list
    energy: list
    snapshots: list
    operator: FlatOperator
    dt: float


def run_3d_linear(shape: ObstacleShape, grid: FlatGrid, u0: Callable, u1: Callable, t_final: float,
                  *, dt: Optional[float] = None, cfl: float = 0.5, forcing: Optional[Callable] = None,
                  snapshot_times=(), sample_every: float = 0.5,
                  cutoff: Optional[CutoffProfile] = None) -> Flat3DResult:
    """Evolve ``u_tt = Lap u + F`` with Neumann data on the obstacle.

    ``u0``, ``u1`` and ``forcing(t, x)`` are functions of physical points
    ``x`` with shape ``(..., 3)``.
    """
    op = FlatOperator(grid, shape, cutoff)
    dt_max = op.max_stable_dt(cfl)
    if dt is None:
        dt = dt_max
    elif dt > dt_max:
        raise GridConfigError(f"dt={dt:.4g} violates the angular CFL limit; use dt <= {dt_max:.4g}",
                              suggested_dt=dt_max)
    n_steps = int(np.ceil(t_final / dt - 1e-9))
    if n_steps:
        dt = t_final / n_steps
    x = op.x
    u = np.asarray(u0(x), dtype=float)
    v = np.asarray(u1(x), dtype=float)
    src = (lambda t: 0.0) if forcing is None else (lambda t: forcing(t, x))
    acc0 = op.laplacian(u) + src(0.0)
    u_prev = u - dt * v + 0.5 * dt * dt * acc0
    snap_idx = {int(round(ts / dt)): ts for ts in snapshot_times}
    every = max(1, int(round(sample_every / dt)))
    times, energy, snaps = [], [], []
    if 0 in snap_idx:
        snaps.append((0.0, u.copy()))
    for n in range(1, n_steps + 1):
        t = (n - 1) * dt
        u_next = 2 * u - u_prev + dt * dt * (op.laplacian(u) + src(t))
        u_prev, u = u, u_next
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite values at t={n * dt:.4g}")
        if n % every == 0 or n == n_steps:
            times.append(n * dt)
            energy.append(op.energy(u_prev, u, dt))
        if n in snap_idx:
            snaps.append((n * dt, u.copy()))
    return Flat3DResult(times, energy, snaps, op, dt)


def spherical_average(op: FlatOperator, u):
    """Average over the angular cells at each ``rho`` (area weighted)."""
    w = op.cell_volume
    return np.sum(u * w, axis=(1, 2)) / np.sum(w, axis=(1, 2))
