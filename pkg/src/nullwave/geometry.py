"""Obstacle geometry, the cutoff profile and the boundary-flattening map.

The obstacle is ``K = {r w : r < b(w)}`` with ``3/4 < b < 1``.  The flattening
map sends the obstacle surface to the unit sphere and is the identity for
``|x| >= 3``::

    y = x / ((1 - rho(|x|/2)) b(w) + rho(|x|/2))

Normal convention: :func:`outward_normal` returns the outer normal of the
exterior domain, which points *into* the obstacle (``-w`` for a ball).  Only
``d_nu u = 0`` is ever imposed, so the sign never enters a computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import sph_harm_y

B_LOWER = 0.75
B_UPPER = 1.0
FAR_FIELD_RADIUS = 3.0


class GeometryError(ValueError):
    """Invalid obstacle, or a point outside the exterior domain."""


def _as_directions(omega):
    omega = np.asarray(omega, dtype=float)
    norms = np.linalg.norm(omega, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise GeometryError("direction must be a unit vector (|omega| = 1 within 1e-12)")
    return omega


def real_sph_harm(degree: int, order: int, omega):
    """Orthonormal real spherical harmonic ``Y_{l,m}`` at unit direction(s)."""
    omega = np.asarray(omega, dtype=float)
    polar = np.arccos(np.clip(omega[..., 2], -1.0, 1.0))
    azimuth = np.arctan2(omega[..., 1], omega[..., 0])
    m = abs(order)
    y = sph_harm_y(degree, m, polar, azimuth)
    if order == 0:
        return y.real
    sign = (-1) ** m
    if order > 0:
        return np.sqrt(2.0) * sign * y.real
    return np.sqrt(2.0) * sign * y.imag


@dataclass(frozen=True)
class ObstacleShape:
    """Radial profile ``b(w)`` of a star-shaped convex obstacle.

    ``kind="ball"`` uses ``b_const``; ``kind="star"`` adds real spherical
    harmonic perturbations ``(degree, order, coefficient)`` to ``b_const``.
    """

    kind: str = "ball"
    b_const: float = 0.875
    harmonics: tuple = ()

    def __post_init__(self):
        if self.kind not in ("ball", "star"):
            raise GeometryError(f"unknown obstacle kind {self.kind!r}")
        harmonics = tuple(
            (int(l), int(m), float(c)) for l, m, c in self.harmonics
        )
        for l, m, _ in harmonics:
            if l < 0 or abs(m) > l:
                raise GeometryError(f"invalid harmonic (l={l}, m={m})")
        if self.kind == "ball" and any(c != 0.0 for *_, c in harmonics):
            raise GeometryError("ball obstacles take no harmonics")
        object.__setattr__(self, "harmonics", harmonics)
        if not B_LOWER < self.b_const < B_UPPER:
            raise GeometryError(f"b_const={self.b_const} outside (3/4, 1)")
        samples = fibonacci_sphere(400)
        b = self._b(samples)
        if np.any(b <= B_LOWER) or np.any(b >= B_UPPER):
            raise GeometryError("b(omega) leaves (3/4, 1) on sampled directions")
        if not is_convex(self):
            raise GeometryError("star-shaped profile is not convex on sampled points")

    @classmethod
    def ball(cls, b: float = 0.875) -> "ObstacleShape":
        return cls("ball", b)

    @classmethod
    def star(cls, base: float, harmonics) -> "ObstacleShape":
        return cls("star", base, tuple(map(tuple, harmonics)))

    @property
    def is_ball(self) -> bool:
        return self.kind == "ball" or all(c == 0.0 for *_, c in self.harmonics)

    @property
    def b_max(self) -> float:
        if self.is_ball:
            return self.b_const
        return float(np.max(self._b(fibonacci_sphere(2000))))

    def _b(self, omega):
        omega = np.asarray(omega, dtype=float)
        b = np.full(omega.shape[:-1], self.b_const)
        for l, m, c in self.harmonics:
            if c != 0.0:
                b = b + c * real_sph_harm(l, m, omega)
        return b

    def __call__(self, omega):
        return eval_b(self, omega)

    def to_json(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball", "b": self.b_const}
        return {"kind": "star", "base": self.b_const,
                "harmonics": [list(h) for h in self.harmonics]}

    @classmethod
    def from_json(cls, obj: dict) -> "ObstacleShape":
        kind = obj.get("kind", "ball")
        if kind == "ball":
            return cls.ball(float(obj.get("b", 0.875)))
        if kind == "star":
            return cls.star(float(obj.get("base", 0.875)), obj.get("harmonics", []))
        raise GeometryError(f"unknown obstacle kind {kind!r}")


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly uniform unit directions."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + 5.0**0.5) * k
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def eval_b(shape: ObstacleShape, omega):
    omega = _as_directions(omega)
    return shape._b(omega)


def _level_set(shape, x):
    # F(x) = |x| - b(x/|x|); negative inside K
    r = np.linalg.norm(x, axis=-1)
    return r - shape._b(x / r[..., None])


def _level_set_derivatives(shape, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    grad = np.zeros(x.shape)
    hess = np.zeros(x.shape + (3,))
    f0 = _level_set(shape, x)
    eye = np.eye(3)
    for i in range(3):
        fp = _level_set(shape, x + h * eye[i])
        fm = _level_set(shape, x - h * eye[i])
        grad[..., i] = (fp - fm) / (2 * h)
        hess[..., i, i] = (fp - 2 * f0 + fm) / h**2
        for j in range(i + 1, 3):
            fpp = _level_set(shape, x + h * (eye[i] + eye[j]))
            fpm = _level_set(shape, x + h * (eye[i] - eye[j]))
            fmp = _level_set(shape, x - h * (eye[i] - eye[j]))
            fmm = _level_set(shape, x - h * (eye[i] + eye[j]))
            hess[..., i, j] = hess[..., j, i] = (fpp - fpm - fmp + fmm) / (4 * h * h)
    return grad, hess


def outward_normal(shape: ObstacleShape, omega):
    """Outer unit normal of the exterior domain at the surface point ``b(w) w``.

    It points into the obstacle: ``-w`` for a ball.
    """
    omega = _as_directions(omega)
    if shape.is_ball:
        return -omega
    x = shape._b(omega)[..., None] * omega
    grad, _ = _level_set_derivatives(shape, x, h=1e-6)
    return -grad / np.linalg.norm(grad, axis=-1, keepdims=True)


def second_fundamental_form_eigenvalues(shape: ObstacleShape, omega):
    """Principal curvatures (w.r.t. the normal into K) at surface points.

    Nonnegative values everywhere mean the obstacle is convex.
    """
    omega = _as_directions(omega)
    x = shape._b(omega)[..., None] * omega
    grad, hess = _level_set_derivatives(shape, x)
    n = grad / np.linalg.norm(grad, axis=-1, keepdims=True)
    # orthonormal tangent frame
    helper = np.where(np.abs(n[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    t1 = np.cross(n, helper)
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.cross(n, t1)
    frame = np.stack([t1, t2], axis=-2)
    proj = np.einsum("...ai,...ij,...bj->...ab", frame, hess, frame)
    proj /= np.linalg.norm(grad, axis=-1)[..., None, None]
    return np.linalg.eigvalsh(proj)


def is_convex(shape: ObstacleShape, n_samples: int = 500, tol: float = 1e-6) -> bool:
    if shape.is_ball:
        return True
    eig = second_fundamental_form_eigenvalues(shape, fibonacci_sphere(n_samples))
    return bool(np.all(eig >= -tol))


def _step(z):
    z = np.clip(z, 0.0, 1.0)
    return z**3 * (10.0 - 15.0 * z + 6.0 * z * z)


def _step_integral(z):
    z = np.clip(z, 0.0, 1.0)
    return z**4 * (2.5 - 3.0 * z + z * z)


def _step_slope(z):
    inside = (z > 0.0) & (z < 1.0)
    z = np.clip(z, 0.0, 1.0)
    return np.where(inside, 30.0 * z * z * (1.0 - z) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth radial cutoff: 0 for s <= 1, 1 for s >= 3/2.

    The slope is a smoothed trapezoid: it ramps up over ``edge`` with a
    quintic smoothstep, stays flat, and ramps down symmetrically.  That keeps
    the profile C^3 with slope at most ``1 / (1/2 - edge)`` (2.5 by default).
    A slope bounded by 2 is impossible for a smooth profile on an interval of
    length 1/2.
    """

    start: float = 1.0
    stop: float = 1.5
    edge: float = 0.1

    @property
    def max_slope(self) -> float:
        return 1.0 / (self.stop - self.start - self.edge)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        d, m = self.edge, self.max_slope
        a = s - self.start
        rise = d * _step_integral(a / d)
        flat = np.clip(a - d, 0.0, self.stop - self.start - 2 * d)
        fall = d * (0.5 - _step_integral((self.stop - s) / d))
        fall = np.where(s >= self.stop - d, fall, 0.0)
        value = m * (rise + flat + fall)
        return np.where(s <= self.start, 0.0, np.where(s >= self.stop, 1.0, value))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        d = self.edge
        ramp = np.minimum(_step((s - self.start) / d), _step((self.stop - s) / d))
        return self.max_slope * ramp

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        d = self.edge
        up = _step_slope((s - self.start) / d) / d
        down = -_step_slope((self.stop - s) / d) / d
        return self.max_slope * np.where(s < 0.5 * (self.start + self.stop), up, down)


@dataclass(frozen=True)
class FlattenMap:
    shape: ObstacleShape
    cutoff: CutoffProfile = field(default_factory=CutoffProfile)

    def __post_init__(self):
        # d/dr (r / divisor) > 0 on the transition band is the diffeomorphism witness
        r = np.linspace(1.9, 3.1, 241)
        omega = fibonacci_sphere(200)
        b = self.shape._b(omega)
        if np.any(self.radial_derivative(r[:, None], b[None, :]) <= 0.0):
            raise GeometryError("flattening map is not monotone in r for this obstacle")

    def divisor(self, r, b):
        s = self.cutoff(np.asarray(r) / 2.0)
        return (1.0 - s) * b + s

    def radial_derivative(self, r, b):
        """d/dr of r / divisor(r); positive means the map is a diffeomorphism."""
        half = np.asarray(r) / 2.0
        rho, drho = self.cutoff(half), self.cutoff.derivative(half)
        num = b + (1.0 - b) * (rho - 0.5 * r * drho)
        return num / ((1.0 - rho) * b + rho) ** 2

    def forward(self, x):
        return flatten(self, x)

    def inverse(self, y, tol=1e-14, max_iter=60):
        y = np.asarray(y, dtype=float)
        rho = np.linalg.norm(y, axis=-1)
        if np.any(rho < 1.0 - 1e-12):
            raise GeometryError("point inside the unit ball has no preimage")
        omega = y / rho[..., None]
        b = self.shape._b(omega)
        far = rho >= FAR_FIELD_RADIUS
        # Newton on g(r) = r / divisor(r) - rho, started from the scaling guess
        r = np.where(far, rho, np.minimum(rho * b, FAR_FIELD_RADIUS))
        r = np.maximum(r, b)
        for _ in range(max_iter):
            g = r / self.divisor(r, b) - rho
            step = g / self.radial_derivative(r, b)
            r_new = np.clip(r - step, b, FAR_FIELD_RADIUS)
            done = np.all(np.abs(r_new - r) <= tol * np.maximum(1.0, r))
            r = r_new
            if done:
                break
        r = np.where(far, rho, r)
        out = r[..., None] * omega
        return np.where(far[..., None], y, out)

    def jacobian(self, x):
        return jacobian(self, x)


def flatten(fmap: FlattenMap, x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    far = r >= FAR_FIELD_RADIUS
    safe_r = np.where(r > 0, r, 1.0)
    omega = x / safe_r[..., None]
    b = fmap.shape._b(omega)
    if np.any((r < b * (1.0 - 1e-12)) & ~far):
        raise GeometryError("point lies inside the obstacle")
    y = x / fmap.divisor(r, b)[..., None]
    return np.where(far[..., None], x, y)


def _ball_jacobian(fmap, x):
    # y = x / D(r), D = (1 - rho(r/2)) b + rho(r/2)
    r = np.linalg.norm(x, axis=-1)
    b = fmap.shape.b_const
    half = r / 2.0
    d = fmap.divisor(r, b)
    dd = 0.5 * (1.0 - b) * fmap.cutoff.derivative(half)
    omega = x / r[..., None]
    eye = np.eye(3)
    return eye / d[..., None, None] - (
        (r * dd / d**2)[..., None, None] * omega[..., :, None] * omega[..., None, :]
    )


def jacobian(fmap: FlattenMap, x, h=1e-5):
    """Matrix ``dy/dx``; exact identity for ``|x| >= 3``."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    far = r >= FAR_FIELD_RADIUS
    if fmap.shape.is_ball:
        jac = _ball_jacobian(fmap, np.where(far[..., None], 1.0, x))
    else:
        jac = np.zeros(x.shape + (3,))
        eye = np.eye(3)
        for j in range(3):
            xp, xm = x + h * eye[j], x - h * eye[j]
            # keep stencil points outside the obstacle for boundary points
            jac[..., :, j] = (_flatten_unchecked(fmap, xp) - _flatten_unchecked(fmap, xm)) / (2 * h)
    jac = np.where(far[..., None, None], np.eye(3), jac)
    det = np.linalg.det(jac)
    if np.any(det < 1e-8):
        raise GeometryError("flattening Jacobian is (near) singular")
    return jac


def _flatten_unchecked(fmap, x):
    r = np.linalg.norm(x, axis=-1)
    omega = x / r[..., None]
    b = fmap.shape._b(omega)
    return x / fmap.divisor(r, b)[..., None]
