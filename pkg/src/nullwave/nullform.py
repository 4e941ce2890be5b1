"""Quadratic/quasilinear nonlinearities and their structural conditions.

A nonlinearity is stored as constant tensors::

    N(du, d2u) = S[a, b] du_a du_b + Q[a, b, m] du_m d2u_ab + cubic(du, d2u)

with index 0 for time and 1..3 for space.  Both ``S`` and ``Q`` are symmetric
in ``(a, b)``.  The optional cubic hook carries the higher-order terms of
``Q^{ab}(du)`` (quadratic in ``du``), e.g. the Chaplygin remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import ObstacleShape, fibonacci_sphere, outward_normal

DEFAULT_TOL = 1e-12
DEFAULT_SAMPLES = 256
_SEED = 20240611


class NullFormError(ValueError):
    pass


class CubicHook:
    """Higher-order part of ``Q^{ab}(du)``, quadratic in ``du``.

    Subclasses implement :meth:`q_matrix`; everything else derives from it.
    """

    name = "custom"

    def q_matrix(self, du):
        raise NotImplementedError

    def evaluate(self, du, d2u):
        return np.einsum("...ab,...ab->...", self.q_matrix(du), d2u)

    def radial(self, ut, ur, utt, utr, urr, ur_over_r):
        du, d2u = radial_jet_arrays(ut, ur, utt, utr, urr, ur_over_r)
        return self.evaluate(du, d2u)


class ChaplyginCubic(CubicHook):
    """``-d_i phi d_j phi d_ij phi + |grad phi|^2 lap phi``."""

    name = "chaplygin"

    def q_matrix(self, du):
        du = np.asarray(du, dtype=float)
        g = du[..., 1:]
        out = np.zeros(du.shape[:-1] + (4, 4))
        out[..., 1:, 1:] = -g[..., :, None] * g[..., None, :]
        out[..., 1:, 1:] += np.einsum("...i,...i->...", g, g)[..., None, None] * np.eye(3)
        return out

    def radial(self, ut, ur, utt, utr, urr, ur_over_r):
        # -ur^2 urr + ur^2 (urr + 2 ur / r)
        return 2.0 * ur * ur * ur_over_r


def radial_jet_arrays(ut, ur, utt, utr, urr, ur_over_r):
    """Cartesian jets of a radial field on the ray through ``e_3``."""
    ut = np.asarray(ut, dtype=float)
    shape = np.broadcast(ut, ur, utt, utr, urr, ur_over_r).shape
    du = np.zeros(shape + (4,))
    du[..., 0] = ut
    du[..., 3] = ur
    d2u = np.zeros(shape + (4, 4))
    d2u[..., 0, 0] = utt
    d2u[..., 0, 3] = d2u[..., 3, 0] = utr
    d2u[..., 1, 1] = d2u[..., 2, 2] = ur_over_r
    d2u[..., 3, 3] = urr
    return du, d2u


@dataclass(frozen=True, eq=False)
class NullFormSpec:
    S: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    Q: np.ndarray = field(default_factory=lambda: np.zeros((4, 4, 4)))
    cubic: Optional[CubicHook] = None
    name: str = "custom"
    enforce_assume: bool = False
    amplitude: float = 0.1

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        Q = np.array(self.Q, dtype=float)
        if S.shape != (4, 4) or Q.shape != (4, 4, 4):
            raise NullFormError("S must be 4x4 and Q must be 4x4x4")
        if not np.array_equal(S, S.T):
            raise NullFormError("S must be symmetric")
        if not np.array_equal(Q, Q.transpose(1, 0, 2)):
            raise NullFormError("Q must be symmetric in its first two indices")
        S.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)
        if self.enforce_assume:
            if np.any(Q[0, 0, :] != 0.0):
                raise NullFormError("normalization requires Q^{00} = 0")
            bound = coefficient_bound(self, self.amplitude)
            if bound > 0.5:
                raise NullFormError(
                    f"sum |Q^ab| = {bound:.3g} exceeds 1/2 at amplitude {self.amplitude}"
                )

    @property
    def is_zero(self) -> bool:
        return self.cubic is None and not self.S.any() and not self.Q.any()

    @property
    def is_quasilinear(self) -> bool:
        return self.cubic is not None or bool(self.Q.any())

    def q_matrix(self, du):
        """``Q^{ab}(du)`` including the cubic hook."""
        du = np.asarray(du, dtype=float)
        out = np.einsum("abm,...m->...ab", self.Q, du)
        if self.cubic is not None:
            out = out + self.cubic.q_matrix(du)
        return out

    def to_json(self) -> dict:
        if self.name in PRESETS:
            return {"preset": self.name}
        if self.cubic is not None:
            raise NullFormError("custom cubic hooks are not serializable")
        return {"S": self.S.tolist(), "Q": self.Q.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "NullFormSpec":
        if "preset" in obj:
            preset = obj["preset"]
            if preset not in PRESETS:
                raise NullFormError(f"unknown nonlinearity preset {preset!r}")
            return PRESETS[preset]()
        return cls(S=np.array(obj.get("S", np.zeros((4, 4)))),
                   Q=np.array(obj.get("Q", np.zeros((4, 4, 4)))))


def coefficient_bound(spec: NullFormSpec, amplitude: float) -> float:
    """Upper bound of ``sum_ab |Q^ab(p)|`` over ``|p_m| <= amplitude``."""
    linear = np.abs(spec.Q).sum() * amplitude
    if spec.cubic is None:
        return float(linear)
    # cubic hook is quadratic in p: bound by sampling the cube's corners
    corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * 4)).reshape(4, -1).T * amplitude
    return float(linear + np.abs(spec.cubic.q_matrix(corners)).sum(axis=(-1, -2)).max())


@dataclass
class ConditionVerdict:
    holds: bool
    residual: float
    witness: Optional[dict] = None

    def __bool__(self):
        return self.holds


def evaluate_nonlinearity(spec: NullFormSpec, du, d2u):
    du = np.asarray(du, dtype=float)
    d2u = np.asarray(d2u, dtype=float)
    value = np.einsum("ab,...a,...b->...", spec.S, du, du)
    value = value + np.einsum("abm,...m,...ab->...", spec.Q, du, d2u)
    if spec.cubic is not None:
        value = value + spec.cubic.evaluate(du, d2u)
    return value


def _sample_directions(n_samples):
    cube = np.array([(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1)
                     for k in (-1, 0, 1) if (i, j, k) != (0, 0, 0)], dtype=float)
    cube /= np.linalg.norm(cube, axis=1, keepdims=True)
    rng = np.random.default_rng(_SEED)
    extra = rng.normal(size=(max(n_samples - len(cube), 0), 3))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.concatenate([cube, extra])[:max(n_samples, len(cube))]


def null_symbols(spec: NullFormSpec, omega4):
    """Quadratic and cubic null symbols at 4-covectors ``omega4``."""
    sym_s = np.einsum("ab,...a,...b->...", spec.S, omega4, omega4)
    qm = spec.q_matrix(omega4)
    sym_q = np.einsum("...ab,...a,...b->...", qm, omega4, omega4)
    return sym_s, sym_q


def check_null(spec: NullFormSpec, tol: float = DEFAULT_TOL,
               n_samples: int = DEFAULT_SAMPLES) -> ConditionVerdict:
    """Sample both null symbols on the light cone ``omega = (+-1, w)``."""
    if tol <= 0 or n_samples < 64:
        raise NullFormError("need tol > 0 and n_samples >= 64")
    dirs = _sample_directions(n_samples)
    omega4 = np.concatenate([
        np.column_stack([np.ones(len(dirs)), dirs]),
        np.column_stack([-np.ones(len(dirs)), dirs]),
    ])
    sym_s, sym_q = null_symbols(spec, omega4)
    worst = np.maximum(np.abs(sym_s), np.abs(sym_q))
    k = int(np.argmax(worst))
    residual = float(worst[k])
    if residual <= tol:
        return ConditionVerdict(True, residual)
    return ConditionVerdict(False, residual, {
        "omega": omega4[k].tolist(),
        "quadratic_symbol": float(sym_s[k]),
        "quasilinear_symbol": float(sym_q[k]),
    })


def quadratic_null_exact(spec: NullFormSpec, tol: float = DEFAULT_TOL) -> bool:
    """Closed-form test for the ``S`` part: ``S^{0i} = 0`` and ``S^{ij} = -S^{00} delta``."""
    S = spec.S
    return bool(np.all(np.abs(S[0, 1:]) <= tol)
                and np.all(np.abs(S[1:, 1:] + S[0, 0] * np.eye(3)) <= tol))


def check_admissible(spec: NullFormSpec, shape: ObstacleShape, tol: float = DEFAULT_TOL,
                     n_samples: int = DEFAULT_SAMPLES) -> ConditionVerdict:
    """Evaluate ``Q^{ab}(p) nu_a q_b`` for jets tangent to the boundary.

    ``p`` and ``q`` stand for ``dv`` and ``dw`` at a boundary point, so the
    Neumann condition on ``v`` and ``w`` becomes ``nu . p = nu . q = 0``.
    """
    if tol <= 0:
        raise NullFormError("need tol > 0")
    omega = fibonacci_sphere(n_samples)
    nu3 = outward_normal(shape, omega)
    rng = np.random.default_rng(_SEED + 1)
    p = rng.normal(size=(n_samples, 4))
    q = rng.normal(size=(n_samples, 4))
    for jet in (p, q):
        jet[:, 1:] -= np.einsum("ni,ni->n", jet[:, 1:], nu3)[:, None] * nu3
    nu = np.column_stack([np.zeros(n_samples), nu3])
    values = np.einsum("nab,na,nb->n", spec.q_matrix(p), nu, q)
    k = int(np.argmax(np.abs(values)))
    residual = float(abs(values[k]))
    if residual <= tol:
        return ConditionVerdict(True, residual)
    return ConditionVerdict(False, residual, {
        "surface_direction": omega[k].tolist(),
        "nu": nu[k].tolist(),
        "p": p[k].tolist(),
        "q": q[k].tolist(),
        "value": float(values[k]),
    })


def chaplygin_spec(enforce_assume: bool = False, amplitude: float = 0.1) -> NullFormSpec:
    """Potential-flow nonlinearity of a Chaplygin gas with unit sound speed::

        -2 d_i phi d_t d_i phi - d_i phi d_j phi d_ij phi + (2 d_t phi + |grad phi|^2) lap phi
    """
    Q = np.zeros((4, 4, 4))
    for i in range(1, 4):
        Q[0, i, i] = Q[i, 0, i] = -1.0
        Q[i, i, 0] = 2.0
    return NullFormSpec(Q=Q, cubic=ChaplyginCubic(), name="chaplygin",
                        enforce_assume=enforce_assume, amplitude=amplitude)


def null_q0_spec() -> NullFormSpec:
    """Classical null form ``(d_t u)^2 - |grad u|^2``."""
    return NullFormSpec(S=np.diag([1.0, -1.0, -1.0, -1.0]), name="null_q0")


def nonnull_dt2_spec() -> NullFormSpec:
    """``(d_t u)^2``, which violates the null condition."""
    S = np.zeros((4, 4))
    S[0, 0] = 1.0
    return NullFormSpec(S=S, name="nonnull_dt2")


def zero_spec() -> NullFormSpec:
    return NullFormSpec(name="zero")


PRESETS = {
    "chaplygin": chaplygin_spec,
    "null_q0": null_q0_spec,
    "nonnull_dt2": nonnull_dt2_spec,
    "zero": zero_spec,
}


class RadialNonlinearity:
    """``N`` restricted to spherically symmetric fields.

    Works in terms of ``(u_t, u_r, u_tt, u_tr, u_rr, u_r / r)``; raises if
    the spec is not rotation invariant, since radial solutions would then
    not stay radial.
    """

    def __init__(self, spec: NullFormSpec, check_isotropy: bool = True):
        self.spec = spec
        S, Q = spec.S, spec.Q
        self.s_tt, self.s_tr, self.s_rr = S[0, 0], 2.0 * S[0, 3], S[3, 3]
        # rows: multiplier u_t (mu = 0), u_r (mu = 3); cols: utt, utr, urr, ur/r
        self.q = np.array([
            [Q[0, 0, m], 2.0 * Q[0, 3, m], Q[3, 3, m], Q[1, 1, m] + Q[2, 2, m]]
            for m in (0, 3)
        ])
        self.cubic = spec.cubic
        self.is_zero = spec.is_zero
        if check_isotropy and not is_isotropic(spec):
            raise NullFormError("nonlinearity is not rotation invariant; radial mode unavailable")

    def __call__(self, ut, ur, utt, utr, urr, ur_over_r):
        if self.is_zero:
            return np.zeros(np.broadcast(ut, ur).shape)
        q = self.q
        out = ut * (self.s_tt * ut + self.s_tr * ur) + self.s_rr * ur * ur
        out = out + ut * (q[0, 0] * utt + q[0, 1] * utr + q[0, 2] * urr + q[0, 3] * ur_over_r)
        out = out + ur * (q[1, 0] * utt + q[1, 1] * utr + q[1, 2] * urr + q[1, 3] * ur_over_r)
        if self.cubic is not None:
            out = out + self.cubic.radial(ut, ur, utt, utr, urr, ur_over_r)
        return out

    def utt_coefficient(self, ut, ur):
        """Coefficient of ``u_tt`` in ``N`` (it is linear in second derivatives)."""
        c = self.q[0, 0] * ut + self.q[1, 0] * ur
        if self.cubic is not None:
            zero = np.zeros_like(np.asarray(ut, dtype=float))
            c = c + self.cubic.radial(ut, ur, zero + 1.0, zero, zero, zero) - \
                self.cubic.radial(ut, ur, zero, zero, zero, zero)
        return c

    def h_matrix(self, ut, ur):
        """``h^{ab} = -Q^{ab}(du)`` on the ``e_3`` ray."""
        du, _ = radial_jet_arrays(ut, ur, 0.0, 0.0, 0.0, 0.0)
        return -self.spec.q_matrix(du)


def is_isotropic(spec: NullFormSpec, n_trials: int = 8, tol: float = 1e-10) -> bool:
    """Whether ``N`` is invariant under spatial rotations (sampled)."""
    if spec.is_zero:
        return True
    rng = np.random.default_rng(_SEED + 2)
    for _ in range(n_trials):
        a = rng.normal(size=(3, 3))
        rot, _ = np.linalg.qr(a)
        big = np.eye(4)
        big[1:, 1:] = rot
        du = rng.normal(size=4)
        d2u = rng.normal(size=(4, 4))
        d2u = d2u + d2u.T
        base = evaluate_nonlinearity(spec, du, d2u)
        turned = evaluate_nonlinearity(spec, big @ du, big @ d2u @ big.T)
        if abs(base - turned) > tol * max(1.0, abs(base)):
            return False
    return True
