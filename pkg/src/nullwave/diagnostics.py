"""Vector fields, energies and decay functionals measured on radial runs.

Radial fields are evaluated on the ray through ``e_3``.  Rotations kill
radial functions, and every family sum used below (over ``d_a``, ``Omega``
or ordered products of them) is invariant under spatial rotations, so one
ray gives the exact sphere integrals: ``int_O f dx = 4 pi int f r^2 dr``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import CutoffProfile
from .grid import RadialGrid, d_r, d_rr
from .nullform import NullFormSpec

E3 = np.array([0.0, 0.0, 1.0])
_P = np.diag([1.0, 1.0, 0.0])


class StagingError(RuntimeError):
    """Not enough time levels to form the requested derivatives."""


# --------------------------------------------------------------------------
# finite-difference jets


def fd_weights(offsets, order):
    """Weights ``w`` with ``sum w_k f(x + o_k h) ~ h^order f^(order)(x)``."""
    offsets = np.asarray(offsets, dtype=float)
    m = len(offsets)
    vander = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


def d_rrr(u, dr):
    """Third derivative, second-order accurate everywhere."""
    out = np.empty_like(u)
    out[2:-2] = (u[4:] - 2 * u[3:-1] + 2 * u[1:-3] - u[:-4]) / (2 * dr**3)
    w0 = fd_weights(np.arange(5), 3)
    w1 = fd_weights(np.arange(-1, 4), 3)
    out[0] = w0 @ u[:5] / dr**3
    out[1] = w1 @ u[:5] / dr**3
    # mirrored stencils flip the sign of an odd derivative
    out[-1] = -(w0 @ u[::-1][:5]) / dr**3
    out[-2] = -(w1 @ u[::-1][:5]) / dr**3
    return out


def time_derivatives(levels, dt, index, max_order=3):
    """``d_t^k u`` at level ``index`` of a stack of equally spaced levels."""
    levels = np.asarray(levels)
    m = len(levels)
    if m < max_order + 1:
        raise StagingError(f"need at least {max_order + 1} time levels, got {m}")
    offsets = np.arange(m) - index
    out = [levels[index]]
    for k in range(1, max_order + 1):
        w = fd_weights(offsets, k)
        out.append(np.tensordot(w, levels, axes=1) / dt**k)
    return out


@dataclass
class Jet:
    """Cartesian derivatives of a field: value, gradient (4), Hessian, third derivatives."""

    d0: np.ndarray
    d1: np.ndarray
    d2: Optional[np.ndarray] = None
    d3: Optional[np.ndarray] = None

    @property
    def order(self):
        return 1 if self.d2 is None else (2 if self.d3 is None else 3)


def radial_jet(levels, dt, index, grid: RadialGrid, order=3) -> Jet:
    """Cartesian jet on the ``e_3`` ray of a radial field given by time levels."""
    dr = grid.dr
    r = grid.r
    tder = time_derivatives(levels, dt, index, max_order=order)
    u, ut = tder[0], tder[1]
    ur = d_r(u, dr)
    n = u.size
    d1 = np.zeros((n, 4))
    d1[:, 0] = ut
    d1[:, 3] = ur
    if order < 2:
        return Jet(u, d1)
    utt = tder[2]
    utr = d_r(ut, dr)
    urr = d_rr(u, dr)
    d2 = np.zeros((n, 4, 4))
    d2[:, 0, 0] = utt
    d2[:, 0, 3] = d2[:, 3, 0] = utr
    d2[:, 1, 1] = d2[:, 2, 2] = ur / r
    d2[:, 3, 3] = urr
    if order < 3:
        return Jet(u, d1, d2)
    uttt = tder[3]
    uttr = d_r(utt, dr)
    utrr = d_rr(ut, dr)
    urrr = d_rrr(u, dr)
    d3 = np.zeros((n, 4, 4, 4))
    d3[:, 0, 0, 0] = uttt
    # time-time-space
    for perm in set(itertools.permutations((0, 0, 3))):
        d3[(slice(None),) + perm] = uttr
    # time-space-space: utrr w_i w_j + (utr / r) P_ij
    spatial2 = np.zeros((n, 3, 3))
    spatial2[:, 2, 2] = utrr
    spatial2[:, 0, 0] = spatial2[:, 1, 1] = utr / r
    for i in range(3):
        for j in range(3):
            val = spatial2[:, i, j]
            d3[:, 0, i + 1, j + 1] = d3[:, i + 1, 0, j + 1] = d3[:, i + 1, j + 1, 0] = val
    # space^3: urrr w w w + (urr/r - ur/r^2)(P_ij w_k + P_ik w_j + P_jk w_i)
    c = urr / r - ur / r**2
    sym = np.einsum("ij,k->ijk", _P, E3)
    sym = sym + sym.transpose(0, 2, 1) + sym.transpose(2, 1, 0)
    www = np.einsum("i,j,k->ijk", E3, E3, E3)
    d3[:, 1:, 1:, 1:] = urrr[:, None, None, None] * www + c[:, None, None, None] * sym
    return Jet(u, d1, d2, d3)


# --------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class VectorFieldOp:
    """``Translation(a)``, ``Rotation(i, j)``, ``Scaling`` or ``ModifiedScaling``.

    ``Rotation(i, j) = x_i d_j - x_j d_i``; ``Scaling = t d_t + x . grad``;
    ``ModifiedScaling = t d_t + rho(|x|) x . grad`` with the cutoff profile.
    """

    kind: str
    indices: tuple = ()

    @classmethod
    def translation(cls, a):
        return cls("translation", (a,))

    @classmethod
    def rotation(cls, i, j):
        return cls("rotation", (i, j))

    @classmethod
    def scaling(cls):
        return cls("scaling")

    @classmethod
    def modified_scaling(cls):
        return cls("modified_scaling")

    def coefficients(self, t, x, cutoff: CutoffProfile = CutoffProfile()):
        """``a^alpha``, ``d_beta a^alpha`` and ``d_beta d_gamma a^alpha`` at points ``x``."""
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        a = np.zeros((n, 4))
        da = np.zeros((n, 4, 4))  # [beta, alpha]
        d2a = np.zeros((n, 4, 4, 4))  # [beta, gamma, alpha]
        if self.kind == "translation":
            a[:, self.indices[0]] = 1.0
        elif self.kind == "rotation":
            i, j = self.indices
            a[:, j] = x[:, i - 1]
            a[:, i] = -x[:, j - 1]
            da[:, i, j] = 1.0
            da[:, j, i] = -1.0
        elif self.kind == "scaling":
            a[:, 0] = t
            a[:, 1:] = x
            da[:] = np.eye(4)
        elif self.kind == "modified_scaling":
            r = np.linalg.norm(x, axis=1)
            w = x / r[:, None]
            rho, drho, d2rho = cutoff(r), cutoff.derivative(r), cutoff.second_derivative(r)
            a[:, 0] = t
            a[:, 1:] = rho[:, None] * x
            da[:, 0, 0] = 1.0
            da[:, 1:, 1:] = (drho * r)[:, None, None] * np.einsum("ni,nk->nik", w, w) + \
                rho[:, None, None] * np.eye(3)
            proj = np.eye(3) - np.einsum("ni,nj->nij", w, w)
            # d_m d_l (rho x_k) = rho'' w_m w_l x_k + rho' P_ml x_k / r + rho'(w_l d_mk + w_m d_lk)
            term = (d2rho * r)[:, None, None, None] * np.einsum("nm,nl,nk->nmlk", w, w, w)
            term += drho[:, None, None, None] * np.einsum("nml,nk->nmlk", proj, w)
            term += drho[:, None, None, None] * np.einsum("nl,mk->nmlk", w, np.eye(3))
            term += drho[:, None, None, None] * np.einsum("nm,lk->nmlk", w, np.eye(3))
            d2a[:, 1:, 1:, 1:] = term
        else:
            raise ValueError(f"unknown vector field {self.kind!r}")
        return a, da, d2a


Z_FAMILY = tuple(
    [VectorFieldOp.translation(a) for a in range(4)]
    + [VectorFieldOp.rotation(i, j) for i, j in ((1, 2), (1, 3), (2, 3))]
)


def apply_op(op: VectorFieldOp, jet: Jet, t, x, cutoff=CutoffProfile()) -> Jet:
    """Jet of ``Z u`` (one order lower than the jet of ``u``)."""
    a, da, d2a = op.coefficients(t, x, cutoff)
    d0 = np.einsum("na,na->n", a, jet.d1)
    if jet.d2 is None:
        return Jet(d0, np.full_like(jet.d1, np.nan))
    d1 = np.einsum("nba,na->nb", da, jet.d1) + np.einsum("na,nab->nb", a, jet.d2)
    if jet.d3 is None:
        return Jet(d0, d1)
    d2 = np.einsum("nbga,na->nbg", d2a, jet.d1)
    d2 = d2 + np.einsum("nba,nag->nbg", da, jet.d2)
    d2 = d2 + np.einsum("nga,nab->nbg", da, jet.d2)
    d2 = d2 + np.einsum("na,nabg->nbg", a, jet.d3)
    return Jet(d0, d1, d2)


def ray_points(grid: RadialGrid):
    return grid.r[:, None] * E3


def apply_field(ops, levels, dt, grid: RadialGrid, t, index=None, cutoff=CutoffProfile()):
    """Value of ``Z_1 ... Z_k u`` (rightmost applied first) on the ``e_3`` ray.

    ``levels`` are consecutive time levels of a radial field; ``t`` is the
    time of level ``index`` (default: the middle one).  Up to two operators.
    """
    if isinstance(ops, VectorFieldOp):
        ops = [ops]
    ops = list(ops)
    if len(ops) > 2:
        raise ValueError("compositions are capped at order 2")
    if len(levels) < 3:
        raise StagingError("need at least 3 time levels")
    index = len(levels) // 2 if index is None else index
    order = max(1, len(ops))
    jet = radial_jet(levels, dt, index, grid, order=order)
    x = ray_points(grid)
    for op in reversed(ops):
        jet = apply_op(op, jet, t, x, cutoff)
    return jet.d0


# --------------------------------------------------------------------------
# energies


def energy_form_e0(du, h=None):
    """``|du|^2 + 2 h^{0b} du_0 du_b - h^{ab} du_a du_b``."""
    du = np.asarray(du, dtype=float)
    val = np.einsum("...a,...a->...", du, du)
    if h is None:
        return val
    h = np.asarray(h, dtype=float)
    val = val + 2.0 * du[..., 0] * np.einsum("...b,...b->...", h[..., 0, :], du)
    return val - np.einsum("...ab,...a,...b->...", h, du, du)


def energy_by_order(jet: Jet, t, grid: RadialGrid, cap=2, h=None, cutoff=CutoffProfile()):
    """``calE_{mu,nu}`` (modified scaling, time derivatives) and ``E_{mu,nu}`` (L, Z family).

    Returns a dict keyed ``("calE", mu, nu)`` and ``("E", mu, nu)`` for
    ``mu + nu <= cap``.
    """
    if jet.order < cap + 1:
        raise StagingError(f"order-{cap} energies need a jet of order {cap + 1}")
    x = ray_points(grid)

    def integral(j):
        return grid.integrate(energy_form_e0(j.d1, h))

    def chain(ops):
        j = jet
        for op in reversed(ops):
            j = apply_op(op, j, t, x, cutoff)
        return j

    dt0 = VectorFieldOp.translation(0)
    mod = VectorFieldOp.modified_scaling()
    lsc = VectorFieldOp.scaling()
    cache = {}

    def term(ops):
        key = tuple(ops)
        if key not in cache:
            cache[key] = integral(chain(list(ops)))
        return cache[key]

    out = {}
    for mu in range(cap + 1):
        for nu in range(cap + 1 - mu):
            out[("calE", mu, nu)] = sum(
                term([mod] * i + [dt0] * j) for i in range(mu + 1) for j in range(nu + 1)
            )
            total = 0.0
            for i in range(mu + 1):
                for k in range(nu + 1):
                    for zs in itertools.product(Z_FAMILY, repeat=k):
                        total += term([lsc] * i + list(zs))
            out[("E", mu, nu)] = total
    return out


def field_energy(u, ut, grid: RadialGrid, h=None, ur=None):
    """``calE_{0,0} = int e_0(u) dx`` from ``u_t`` and ``u``."""
    ur = d_r(u, grid.dr) if ur is None else ur
    if h is None:
        return grid.integrate(ut * ut + ur * ur)
    du = np.zeros((u.size, 4))
    du[:, 0] = ut
    du[:, 3] = ur
    return grid.integrate(energy_form_e0(du, h))


def local_energy(ut, ur, grid: RadialGrid, radius=5.0):
    """``||du||_{L^2(|x| <= radius)}``."""
    mask = grid.r <= radius + 1e-12
    return float(np.sqrt(4.0 * np.pi * np.dot(grid.weights[mask], (ut * ut + ur * ur)[mask])))


def decay_envelope(u, ut, ur, r, t):
    """``D(t) = max (1 + t + r)(|u| + |du|)``."""
    if u.size == 0:
        return 0.0
    return float(np.max((1.0 + t + r) * (np.abs(u) + np.hypot(ut, ur))))


# --------------------------------------------------------------------------
# KSS time-space functionals


@dataclass
class KSSAccumulator:
    """Running ``int_0^T ||<x>^{-1/2} du||^2 dt`` and ``int_0^T ||Box u|| dt``."""

    grid: RadialGrid
    lhs_sq: float = 0.0
    rhs: float = 0.0
    _last: Optional[tuple] = None
    _weight: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self._weight = 1.0 / np.sqrt(1.0 + self.grid.r**2)

    def add(self, t, ut, ur, box_u):
        a = self.grid.integrate(self._weight * (ut * ut + ur * ur))
        b = self.grid.l2(box_u)
        if self._last is not None:
            t0, a0, b0 = self._last
            self.lhs_sq += 0.5 * (t - t0) * (a + a0)
            self.rhs += 0.5 * (t - t0) * (b + b0)
        self._last = (t, a, b)

    def values(self, T):
        return kss_normalize(self.lhs_sq, T), self.rhs


def kss_normalize(lhs_sq, T):
    return float(math.sqrt(lhs_sq) / math.sqrt(math.log(2.0 + T)))


def kss_functionals(times, ut_history, ur_history, box_history, grid: RadialGrid):
    """``(lhs, rhs)`` from stored histories (trapezoid in time)."""
    acc = KSSAccumulator(grid)
    for t, ut, ur, box in zip(times, ut_history, ur_history, box_history):
        acc.add(t, ut, ur, box)
    return acc.values(times[-1] if len(times) else 0.0)


# --------------------------------------------------------------------------
# decay fits and inequality checks


@dataclass
class DecayFit:
    rate: float
    r_squared: float
    n_points: int
    t_start: float
    t_end: float
    degenerate: bool = False
    truncated: bool = False


def local_energy_decay_fit(times, values, t_start=5.0, t_end=None, floor=1e-14) -> DecayFit:
    """Least-squares exponential rate of ``values(t)`` on ``[t_start, t_end]``.

    The window stops at the first sample below ``floor``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_end = times[-1] if t_end is None else t_end
    sel = (times >= t_start - 1e-12) & (times <= t_end + 1e-12)
    t, v = times[sel], values[sel]
    truncated = False
    below = np.nonzero(v < floor)[0]
    if below.size:
        t, v = t[:below[0]], v[:below[0]]
        truncated = True
    if t.size < 3 or np.any(v <= 0):
        return DecayFit(float("nan"), float("nan"), int(t.size), t_start, float(t_end),
                        degenerate=True, truncated=truncated)
    logv = np.log(v)
    slope, intercept = np.polyfit(t, logv, 1)
    resid = logv - (slope * t + intercept)
    ss_tot = np.sum((logv - logv.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else float("nan")
    return DecayFit(float(-slope), float(r2), int(t.size), float(t[0]), float(t[-1]),
                    degenerate=False, truncated=truncated)


class DegenerateFieldError(ValueError):
    pass


def hardy_ratio(v, grid: RadialGrid, vr=None) -> float:
    """``||v / r|| / ||grad v||`` for a radial field (at most 2 in the exterior)."""
    vr = d_r(v, grid.dr) if vr is None else vr
    num = grid.l2(v / grid.r)
    den = grid.l2(vr)
    if den == 0.0:
        raise DegenerateFieldError("zero gradient: Hardy ratio undefined")
    return num / den


hardy_check = hardy_ratio


@dataclass
class NullBound:
    constant: float
    nodes_used: int
    profile: np.ndarray

    @property
    def degenerate(self):
        return self.nodes_used == 0


def null_bound_check(spec: NullFormSpec, w, v, r, t, rel_floor=0.0) -> NullBound:
    """Worst ``|S^{ab} d_a w d_b v| <r> / (|Gw||dv| + |dw||Gv|)`` over nodes.

    ``w`` and ``v`` are ``(value, d_t, d_r)`` triples of radial fields;
    ``G`` runs over translations, rotations and the scaling field.  Nodes
    whose denominator is below ``1e-14`` or below ``rel_floor`` times its
    maximum are skipped.
    """
    def parts(f):
        _, ft, fr = (np.asarray(a, dtype=float) for a in f)
        du = np.hypot(ft, fr)
        gamma = np.sqrt(ft**2 + fr**2 + (t * ft + r * fr) ** 2)
        return ft, fr, du, gamma

    wt, wr, dw, gw = parts(w)
    vt, vr, dv, gv = parts(v)
    S = spec.S
    form = S[0, 0] * wt * vt + S[0, 3] * (wt * vr + wr * vt) + S[3, 3] * wr * vr
    den = gw * dv + dw * gv
    ok = den > max(1e-14, rel_floor * float(np.max(den, initial=0.0)))
    prof = np.full(np.shape(r), np.nan)
    prof[ok] = np.abs(form[ok]) * np.sqrt(1.0 + r[ok] ** 2) / den[ok]
    if not ok.any():
        return NullBound(float("nan"), 0, prof)
    return NullBound(float(np.nanmax(prof)), int(ok.sum()), prof)
