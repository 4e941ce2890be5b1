"""Leapfrog evolution of the radial Neumann-wave problem.

Solves ``u_tt = u_rr + (2/r) u_r + N(du, d2u) + F`` on ``r >= r_min`` with
``d_r u = g`` at ``r_min`` (``g = 0`` for the obstacle problem).  Each step
is a fixed-point iteration on the new time level: the time derivatives
inside ``N`` are centered, so they depend on the unknown level.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import diagnostics as dg
from .grid import NeumannStencils, RadialGrid
from .initial import InitialData, build_psi2
from .nullform import NullFormSpec, RadialNonlinearity

MAX_CFL = 0.5
# a fixed-point failure after this much growth of sup|du| is counted as blowup
DIVERGENCE_AS_BLOWUP = 10.0


class NonlinearDivergenceError(RuntimeError):
    def __init__(self, t, change):
        super().__init__(f"fixed-point iteration did not converge at t={t:.6g} (change {change:.3g})")
        self.t = t


class BlowupDetected(RuntimeError):
    def __init__(self, t, reason):
        super().__init__(f"blowup at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


@dataclass
class FieldState:
    """Two leapfrog levels ``u(t - dt)`` and ``u(t)``.

    ``ut`` and ``ur`` hold ``(d_t u, d_r u)`` of the *previous* level once a
    step has been taken (the centered time derivative needs both sides);
    ``box`` is ``N + F`` there.
    """

    u_prev: np.ndarray
    u_curr: np.ndarray
    t: float
    dt: float
    ut: Optional[np.ndarray] = None
    ur: Optional[np.ndarray] = None
    box: Optional[np.ndarray] = None
    iterations: int = 0


class RadialStepper:
    def __init__(self, grid: RadialGrid, spec: NullFormSpec, dt: float, *,
                 forcing: Callable | None = None, boundary: Callable | None = None,
                 outer: str = "dod", tol: float = 1e-12, max_iter: int = 25):
        if outer not in ("dod", "sommerfeld"):
            raise ValueError(f"unknown outer boundary {outer!r}")
        if dt > MAX_CFL * grid.dr * (1 + 1e-12):
            raise ValueError(f"dt={dt} violates CFL {MAX_CFL}")
        self.grid = grid
        self.spec = spec
        self.nl = None if spec.is_zero else RadialNonlinearity(spec)
        self.st = NeumannStencils(grid)
        self.dt = dt
        self.forcing = forcing
        self.boundary = boundary
        self.outer = outer
        self.tol = tol
        self.max_iter = max_iter

    def g(self, t):
        return 0.0 if self.boundary is None else float(self.boundary(t))

    def source(self, t):
        if self.forcing is None:
            return None
        return self.forcing(t, self.grid.r)

    def step(self, state: FieldState) -> FieldState:
        dt, st = self.dt, self.st
        up, u = state.u_prev, state.u_curr
        t = state.t
        g_now = self.g(t)
        lin = 2.0 * u - up + dt * dt * st.laplacian(u, g_now)
        src = self.source(t)
        if src is not None:
            lin = lin + dt * dt * src
        ur = st.grad(u, g_now)
        box = np.zeros_like(u) if src is None else src.copy()
        iterations = 0
        if self.nl is None:
            un = lin
        else:
            urr = st.second(u, g_now)
            ur_over_r = ur * st.inv_r
            ur_prev = st.grad(up, self.g(t - dt))
            g_next = self.g(t + dt)
            un = lin
            change = math.inf
            for iterations in range(1, self.max_iter + 1):
                ut = (un - up) / (2 * dt)
                utt = (un - 2 * u + up) / (dt * dt)
                utr = (st.grad(un, g_next) - ur_prev) / (2 * dt)
                nval = self.nl(ut, ur, utt, utr, urr, ur_over_r)
                new = lin + dt * dt * nval
                change = float(np.max(np.abs(new - un)))
                un = new
                if not math.isfinite(change):
                    raise BlowupDetected(t + dt, "non-finite values in the fixed-point iteration")
                if change <= self.tol * max(1.0, float(np.max(np.abs(un)))):
                    break
            else:
                raise NonlinearDivergenceError(t + dt, change)
            box = box + nval
        if self.outer == "sommerfeld":
            # upwind (d_t + d_r + 1/r) u = 0 at the last node
            r_out = self.grid.r[-1]
            lam = dt / self.grid.dr
            un[-1] = u[-1] - lam * (u[-1] - u[-2]) - dt * u[-1] / r_out
        if not np.all(np.isfinite(un)):
            raise BlowupDetected(t + dt, "non-finite field values")
        ut_curr = (un - up) / (2 * dt)
        return FieldState(u, un, t + dt, dt, ut_curr, ur, box, iterations)


def step(state: FieldState, spec: NullFormSpec, grid: RadialGrid, **kwargs) -> FieldState:
    """Advance one leapfrog step (convenience wrapper around :class:`RadialStepper`)."""
    return RadialStepper(grid, spec, state.dt, **kwargs).step(state)


def taylor_start(data: InitialData, spec: NullFormSpec, dt: float, forcing=None):
    """Leapfrog seed ``u(-dt) = psi_0 - dt psi_1 + dt^2/2 psi_2``."""
    f0 = None if forcing is None else forcing(0.0, data.grid.r)
    seq = build_psi2(data, spec, forcing=f0)
    psi0, psi1, psi2 = seq.psis
    return psi0 - dt * psi1 + 0.5 * dt * dt * psi2, seq


@dataclass
class RadialProblem:
    grid: RadialGrid
    spec: NullFormSpec
    data: InitialData
    t_final: float
    cfl: float = MAX_CFL
    forcing: Optional[Callable] = None
    boundary: Optional[Callable] = None
    outer: str = "dod"
    sample_every: float = 0.5
    snapshot_times: tuple = ()
    order_cap: int = 0
    energy_every: float = 0.0
    blowup_factor: float = 1e3
    picard_tol: float = 1e-12
    picard_max: int = 25
    row_hooks: list = field(default_factory=list)
    local_radius: float = 5.0

    @property
    def dt(self):
        return self.cfl * self.grid.dr


@dataclass
class RunResult:
    status: str
    rows: list
    snapshots: list
    dt: float
    grid: RadialGrid
    final: FieldState
    psi: list
    blowup_time: Optional[float] = None
    blowup_reason: Optional[str] = None
    amplification: float = 1.0
    initial_sup_du: float = 0.0
    kss: tuple = (0.0, 0.0)
    message: str = ""

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    @property
    def times(self):
        return self.column("t")


def _sample_indices(t_final, dt, every):
    n = int(round(t_final / dt))
    if every <= 0:
        return {0, n}
    k = int(math.floor(t_final / every + 1e-9))
    idx = {int(round(j * every / dt)) for j in range(k + 1)}
    idx.add(n)
    return {i for i in idx if i <= n}


def run_radial(problem: RadialProblem) -> RunResult:
    """Evolve to ``t_final``; returns diagnostic rows, snapshots and the exit status."""
    grid, spec = problem.grid, problem.spec
    dt = problem.dt
    if problem.cfl > MAX_CFL:
        raise ValueError(f"cfl {problem.cfl} exceeds {MAX_CFL}")
    stepper = RadialStepper(grid, spec, dt, forcing=problem.forcing, boundary=problem.boundary,
                            outer=problem.outer, tol=problem.picard_tol, max_iter=problem.picard_max)
    u_minus, seq = taylor_start(problem.data, spec, dt, problem.forcing)
    psi0, psi1, psi2 = seq.psis
    n_steps = int(round(problem.t_final / dt))
    samples = _sample_indices(problem.t_final, dt, problem.sample_every)
    energy_rows = (samples if problem.energy_every <= 0
                   else _sample_indices(problem.t_final, dt, problem.energy_every))
    snaps = {int(round(ts / dt)) for ts in problem.snapshot_times if 0 <= ts <= problem.t_final + 1e-12}
    pending = sorted(samples | snaps)

    st = stepper.st
    r = grid.r
    ur0 = st.grad(psi0, stepper.g(0.0))
    sup0 = float(np.max(np.hypot(psi1, ur0)))
    box0 = psi2 - st.laplacian(psi0, stepper.g(0.0))
    kss = dg.KSSAccumulator(grid)
    kss_at = {}

    levels = deque(maxlen=5)
    level_idx = deque(maxlen=5)
    levels.append(psi0)
    level_idx.append(0)
    state = FieldState(u_minus, psi0, 0.0, dt)
    status, blow_t, blow_reason, message = "ok", None, None, ""
    amplification = 1.0
    rows, snapshots = [], []

    def account(idx, ut, ur, box):
        nonlocal amplification
        t = idx * dt
        kss.add(t, ut, ur, box)
        if idx in samples:
            kss_at[idx] = kss.values(t)
        sup = float(np.max(np.hypot(ut, ur)))
        if sup0 > 0:
            amplification = max(amplification, sup / sup0)
            if sup > problem.blowup_factor * sup0:
                raise BlowupDetected(t, f"sup|du| grew by more than {problem.blowup_factor:g}x")

    def emit(idx):
        stack = np.array(levels)
        pos = list(level_idx).index(idx)
        t = idx * dt
        cap = problem.order_cap if idx in energy_rows else 0
        jet = dg.radial_jet(stack, dt, pos, grid, order=min(cap + 1, len(stack) - 1))
        u = jet.d0
        ut, ur = jet.d1[:, 0], jet.d1[:, 3]
        if idx in samples:
            h = None
            if spec.is_quasilinear:
                h = stepper.nl.h_matrix(ut, ur)
            row = {"t": t, "E00": dg.field_energy(u, ut, grid, h=h, ur=ur),
                   "flat_energy": dg.field_energy(u, ut, grid, ur=ur)}
            if cap >= 1 and jet.order >= cap + 1:
                for (kind, mu, nu), val in dg.energy_by_order(jet, t, grid, cap=cap, h=h).items():
                    if (mu, nu) != (0, 0) or kind == "E":
                        row[f"{kind}_{mu}_{nu}"] = val
            lhs, rhs = kss_at.get(idx, kss.values(t))
            row.update({
                "kss_lhs": lhs, "kss_rhs": rhs,
                "localE_r5": dg.local_energy(ut, ur, grid, problem.local_radius),
                "envelope_D": dg.decay_envelope(u, ut, ur, r, t),
                "sup_du": float(np.max(np.hypot(ut, ur))),
                "sup_u": float(np.max(np.abs(u))),
                "h_norm": 0.0 if h is None else float(np.abs(h).sum(axis=(-1, -2)).max()),
                "blowup_flag": 0,
            })
            for hook in problem.row_hooks:
                row.update(hook(t, u, ut, ur))
            rows.append(row)
        if idx in snaps:
            snapshots.append({"t": t, "r": r.copy(), "u": u.copy(), "du_dt": ut.copy(),
                              "du_dr": ur.copy()})

    account(0, psi1, ur0, box0)
    total = max(n_steps, 4)
    idx = 0
    try:
        while idx < total:
            state = stepper.step(state)
            idx += 1
            levels.append(state.u_curr)
            level_idx.append(idx)
            if idx - 1 >= 1 and idx - 1 <= n_steps:
                account(idx - 1, state.ut, state.ur, state.box)
            while pending and pending[0] <= idx - 2 and len(levels) == 5:
                emit(pending.pop(0))
        if n_steps >= 1:
            # last level: one-sided derivative from the stored levels
            jet = dg.radial_jet(np.array(levels), dt, list(level_idx).index(n_steps), grid, order=1)
            account_box = state.box if state.box is not None else np.zeros_like(psi0)
            account(n_steps, jet.d1[:, 0], jet.d1[:, 3], account_box)
        while pending:
            emit(pending.pop(0))
    except BlowupDetected as exc:
        status, blow_t, blow_reason = "blowup", exc.t, exc.reason
        message = str(exc)
    except NonlinearDivergenceError as exc:
        blow_t, message = exc.t, str(exc)
        if amplification >= DIVERGENCE_AS_BLOWUP:
            status = "blowup"
            blow_reason = f"fixed-point iteration failed after sup|du| grew {amplification:.3g}x"
        else:
            status = "divergence"
    if status != "ok":
        rows.append({"t": blow_t, "blowup_flag": 1})
    return RunResult(status, rows, snapshots, dt, grid, state, seq.psis, blow_t, blow_reason,
                     amplification, sup0, kss.values(min(state.t, problem.t_final)), message)
