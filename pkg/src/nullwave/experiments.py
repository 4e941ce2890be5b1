"""Reusable numerical experiments: convergence, oracle comparison, sweeps and contrasts.

Each function returns a small result dataclass; file output lives in
:mod:`nullwave.runner`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics as dg
from .chaplygin import GasParameters, chaplygin_problem
from .config import auto_r_max
from .flat3d import FlatGrid, run_3d_linear, spherical_average
from .geometry import ObstacleShape, jacobian
from .grid import RadialGrid
from .initial import InitialData, bump, bump_derivative, make_bump_data
from .nullform import NullFormSpec, nonnull_dt2_spec, null_q0_spec, zero_spec
from .oracle import SphericalOracleProblem, spherical_oracle, validate_oracle
from .solver import RadialProblem, run_radial


# --------------------------------------------------------------------------
# manufactured solution and convergence


@dataclass(frozen=True)
class ManufacturedSolution:
    """``u* = cos(omega t) exp(-(r - r_min)^2) + bump((r - c - t) / w)``.

    The standing part has zero slope at ``r_min``; the travelling bump never
    reaches the boundary, so ``d_r u* = 0`` there for all ``t >= 0``.
    """

    r_min: float = 0.875
    omega: float = 2.0
    center: float = 3.0
    width: float = 1.5

    def _w(self, t, r):
        return (r - self.center - t) / self.width

    def _h(self, r):
        return np.exp(-((r - self.r_min) ** 2))

    def value(self, t, r):
        return math.cos(self.omega * t) * self._h(r) + bump(self._w(t, r))

    def velocity(self, t, r):
        return (-self.omega * math.sin(self.omega * t) * self._h(r)
                - bump_derivative(self._w(t, r)) / self.width)

    def forcing(self, t, r):
        s = r - self.r_min
        h = self._h(r)
        lap_h = (4 * s * s - 2) * h - 4 * s * h / r
        standing = -self.omega**2 * math.cos(self.omega * t) * h - math.cos(self.omega * t) * lap_h
        travelling = -2.0 * bump_derivative(self._w(t, r)) / (self.width * r)
        return standing + travelling


@dataclass
class ConvergenceResult:
    drs: list
    errors: list
    orders: list

    @property
    def mean_order(self) -> float:
        return float(np.mean(self.orders))


def manufactured_error(dr, t_final=10.0, r_min=0.875, r_max=None, cfl=0.5) -> float:
    mms = ManufacturedSolution(r_min=r_min)
    r_max = r_max if r_max is not None else auto_r_max(r_min, mms.center + mms.width, t_final)
    grid = RadialGrid(r_min, r_max, dr)
    data = InitialData(grid, mms.value(0.0, grid.r), mms.velocity(0.0, grid.r))
    problem = RadialProblem(grid, zero_spec(), data, t_final, cfl=cfl, forcing=mms.forcing,
                            sample_every=t_final, snapshot_times=(t_final,))
    res = run_radial(problem)
    u = res.snapshots[-1]["u"]
    exact = mms.value(t_final, grid.r)
    return grid.l2(u - exact) / grid.l2(exact)


def convergence_study(drs=(1 / 50, 1 / 100, 1 / 200), t_final=10.0, r_min=0.875) -> ConvergenceResult:
    drs = sorted(drs, reverse=True)
    errors = [manufactured_error(dr, t_final, r_min) for dr in drs]
    orders = [math.log(errors[i] / errors[i + 1]) / math.log(drs[i] / drs[i + 1])
              for i in range(len(drs) - 1)]
    return ConvergenceResult(list(drs), errors, orders)


# --------------------------------------------------------------------------
# quadrature oracle


def default_oracle_problem(n_quad=120) -> SphericalOracleProblem:
    """Forcing bump centred at ``(t, r) = (2, 2.5)`` and a boundary flux pulse at ``t = 3``."""
    return SphericalOracleProblem(
        F1=lambda t, r: bump((t - 2.0) / 1.5) * bump((r - 2.5) / 1.0),
        F2=lambda t: 0.5 * bump((t - 3.0) / 1.5),
        n_quad=n_quad,
    )


@dataclass
class OracleComparison:
    t: float
    relative_l2: float
    residuals: list
    r: np.ndarray
    fd: np.ndarray
    oracle: np.ndarray

    @property
    def validated(self) -> bool:
        """PDE residual small and boundary residual shrinking like ``h^2``."""
        if len(self.residuals) < 2:
            return False
        coarse, fine = self.residuals[0], self.residuals[-1]
        return fine.pde < 1e-4 and fine.boundary < 0.5 * coarse.boundary


def oracle_compare(problem: Optional[SphericalOracleProblem] = None, t=10.0, dr=1 / 200,
                   validation_h=(0.04, 0.02)) -> OracleComparison:
    problem = problem or default_oracle_problem()
    points = [(5.0, 2.0), (4.0, 1.5), (6.0, 3.0)]
    residuals = [validate_oracle(problem, points, h) for h in validation_h]
    grid = RadialGrid(1.0, auto_r_max(1.0, 4.0, t), dr)
    zero = np.zeros(grid.n)
    run = run_radial(RadialProblem(grid, zero_spec(), InitialData(grid, zero, zero.copy()), t,
                                   forcing=problem.f1, boundary=problem.f2,
                                   sample_every=t, snapshot_times=(t,)))
    fd = run.snapshots[-1]["u"]
    ref = spherical_oracle(problem, t, grid.r)
    return OracleComparison(t, grid.l2(fd - ref) / grid.l2(ref), residuals, grid.r, fd, ref)


# --------------------------------------------------------------------------
# small-data sweeps and the null / non-null contrast


@dataclass
class SweepResult:
    epsilons: list
    sup_envelope: list
    rho_min: list
    statuses: list
    slope: float


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def chaplygin_sweep(epsilons=(0.02, 0.01, 0.005), t_final=100.0, dr=0.01, b=0.875,
                    params: GasParameters = GasParameters(), sample_every=1.0) -> SweepResult:
    sups, rho_mins, statuses = [], [], []
    for eps in epsilons:
        grid = RadialGrid(b, auto_r_max(b, 4.0, t_final), dr)
        res = run_radial(chaplygin_problem(eps, grid, t_final, params=params, sample_every=sample_every))
        statuses.append(res.status)
        ok_rows = [row for row in res.rows if not row["blowup_flag"]]
        sups.append(max(row["envelope_D"] for row in ok_rows))
        rho_mins.append(min(row["rho_min"] for row in ok_rows))
    return SweepResult(list(epsilons), sups, rho_mins, statuses, loglog_slope(epsilons, sups))


@dataclass
class ContrastReport:
    epsilon: float
    null_amplification: float
    nonnull_amplification: float
    null_status: str
    nonnull_status: str
    nonnull_blowup_time: Optional[float]
    degenerate: bool = False

    @property
    def ratio(self) -> float:
        if self.degenerate:
            return float("nan")
        return self.nonnull_amplification / self.null_amplification


# Outgoing data: the linear flow alone never amplifies sup|du|, so any growth is nonlinear.
CONTRAST_DATA = dict(center_r=3.0, width=0.5, u0_amp=3.0, outgoing=True)


def compare_null_vs_nonnull(epsilon=0.1, t_final=100.0, dr=0.01, b=0.875, data=None) -> ContrastReport:
    if not 0 <= epsilon <= 0.2:
        raise ValueError("epsilon must lie in [0, 0.2]")
    opts = dict(CONTRAST_DATA if data is None else data)
    c, w = opts.pop("center_r"), opts.pop("width")
    grid = RadialGrid(b, auto_r_max(b, c + w, t_final), dr)
    init = make_bump_data(c, w, grid, epsilon=epsilon, **opts)
    if epsilon == 0:
        return ContrastReport(0.0, 1.0, 1.0, "ok", "ok", None, degenerate=True)
    out = {}
    for spec in (null_q0_spec(), nonnull_dt2_spec()):
        out[spec.name] = run_radial(RadialProblem(grid, spec, init, t_final, sample_every=1.0))
    null, nonnull = out["null_q0"], out["nonnull_dt2"]
    if null.status == "divergence" and nonnull.status == "divergence":
        raise FloatingPointError("both contrast runs failed numerically")
    return ContrastReport(epsilon, null.amplification, nonnull.amplification, null.status,
                          nonnull.status, nonnull.blowup_time)


# --------------------------------------------------------------------------
# linear decay and KSS


@dataclass
class DecayResult:
    fit: dg.DecayFit
    times: np.ndarray
    values: np.ndarray


def local_energy_decay(dr=0.01, b=0.875, t_final=40.0, center_r=2.0, width=0.75,
                       t_start=5.0, rel_floor=1e-4) -> DecayResult:
    """Fit ``||du||_{L^2(r <= 5)}`` after the data have left the neighbourhood.

    The window ends where the local energy falls below ``rel_floor`` times its
    initial value: below that the discrete solution is dominated by slowly
    moving grid-scale content rather than the continuum tail.
    """
    grid = RadialGrid(b, auto_r_max(b, center_r + width, t_final), dr)
    data = make_bump_data(center_r, width, grid)
    res = run_radial(RadialProblem(grid, zero_spec(), data, t_final, sample_every=0.25))
    t, v = res.column("t"), res.column("localE_r5")
    fit = dg.local_energy_decay_fit(t, v, t_start=t_start, t_end=t_final, floor=rel_floor * v[0])
    return DecayResult(fit, t, v)


def kss_forcing(t, r):
    """Compactly supported source switched on for ``1 <= t <= 4``, centred at ``r = 3``."""
    return bump((t - 2.5) / 1.5) * bump((r - 3.0) / 1.0)


@dataclass
class KSSResult:
    times: list
    lhs: list
    rhs: list

    @property
    def ratios(self):
        return [l / r for l, r in zip(self.lhs, self.rhs)]


def kss_growth(times=(10.0, 100.0), dr=0.01, b=0.875) -> KSSResult:
    t_final = max(times)
    grid = RadialGrid(b, auto_r_max(b, 4.0, t_final), dr)
    zero = np.zeros(grid.n)
    res = run_radial(RadialProblem(grid, zero_spec(), InitialData(grid, zero, zero.copy()), t_final,
                                   forcing=kss_forcing, sample_every=min(times)))
    rows = {round(row["t"], 9): row for row in res.rows}
    lhs = [rows[round(T, 9)]["kss_lhs"] for T in times]
    rhs = [rows[round(T, 9)]["kss_rhs"] for T in times]
    return KSSResult(list(times), lhs, rhs)


# --------------------------------------------------------------------------
# 3-D cross-check


@dataclass
class CrossCheck:
    relative_l2: float
    min_jacobian_det: float
    energy_drift: float
    rho: np.ndarray = field(repr=False)
    average: np.ndarray = field(repr=False)
    reference: np.ndarray = field(repr=False)


def cross_check_3d(b=0.875, grid: FlatGrid = FlatGrid(64, 32, 64, 5.0), t_final=1.5,
                   center_r=2.0, width=1.0, ref_dr=0.002) -> CrossCheck:
    shape = ObstacleShape.ball(b)
    prof = lambda x: bump((np.linalg.norm(x, axis=-1) - center_r) / width)
    res = run_3d_linear(shape, grid, prof, lambda x: np.zeros(x.shape[:-1]), t_final,
                        snapshot_times=(t_final,))
    op = res.operator
    u = res.snapshots[-1][1]
    rgrid = RadialGrid(b, auto_r_max(b, center_r + width, t_final), ref_dr)
    ref = run_radial(RadialProblem(rgrid, zero_spec(), make_bump_data(center_r, width, rgrid), t_final,
                                   sample_every=t_final, snapshot_times=(t_final,)))
    r3 = np.linalg.norm(op.x, axis=-1)
    u_ref = np.interp(r3, rgrid.r, ref.snapshots[-1]["u"])
    err = math.sqrt(op.integrate((u - u_ref) ** 2) / op.integrate(u_ref**2))
    det = float(np.min(np.linalg.det(jacobian(op.fmap, op.x))))
    drift = abs(res.energy[-1] - res.energy[0]) / abs(res.energy[0])
    return CrossCheck(err, det, drift, grid.centers(0), spherical_average(op, u),
                      spherical_average(op, u_ref))
