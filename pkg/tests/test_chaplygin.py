import numpy as np
import pytest

from nullwave.chaplygin import (
    GasParameters, PhysicalityError, bernoulli_residual, chaplygin_problem, density_from_potential,
    flow_report, mass_balance_residual,
)
from nullwave.grid import RadialGrid
from nullwave.solver import run_radial


def test_static_background():
    assert density_from_potential(np.zeros(4)) == 1.0
    assert density_from_potential(np.zeros(4), GasParameters(rho_bar=1.3, P0=2.0)) == 1.3


def test_density_from_small_time_derivative():
    rho = density_from_potential([-0.005, 0.0, 0.0, 0.0])
    assert rho == pytest.approx(1.0 / np.sqrt(0.99), abs=1e-15)
    assert rho == pytest.approx(1.00504, abs=1e-5)


def test_round_trip_through_enthalpy():
    params = GasParameters()
    for rho in (0.6, 0.9, 1.0, 1.2, 3.0):
        phi_t = -float(params.enthalpy(rho))
        dphi = [phi_t, 0.0, 0.0, 0.0]
        back = density_from_potential(dphi, params)
        assert back == pytest.approx(rho, abs=1e-14)
        assert abs(bernoulli_residual(dphi, back, params)) < 1e-14


def test_vacuum_raises():
    with pytest.raises(PhysicalityError):
        density_from_potential([-0.6, 0.0, 0.0, 0.0])


def test_parameters_validated():
    with pytest.raises(ValueError):
        GasParameters(rho_bar=1.0, P0=0.5)
    p = GasParameters()
    assert p.rho_floor == 0.5
    assert p.pressure(p.rho_floor) == 0.0
    assert p.sound_speed(1.0) == 1.0


def test_zero_amplitude_run_is_static():
    grid = RadialGrid(0.875, 10.0, 0.05)
    res = run_radial(chaplygin_problem(0.0, grid, 2.0, snapshot_times=(2.0,)))
    snap = res.snapshots[-1]
    assert not snap["u"].any()
    rep = flow_report(res.snapshots, grid)
    assert np.all(rep.states[-1].rho == 1.0)
    assert not rep.states[-1].velocity.any()
    assert rep.violation_time is None


def test_small_flow_keeps_slip_and_mass_balance():
    slips = []
    for dr in (0.02, 0.01):
        grid = RadialGrid(0.875, 14.0, dr)
        res = run_radial(chaplygin_problem(0.01, grid, 6.0, sample_every=0.25))
        assert res.status == "ok"
        assert min(res.column("rho_min")) > GasParameters().rho_floor
        # mass changes only through the outer edge, which the wave never reaches
        scale = np.abs(res.column("mass_excess")).max()
        assert mass_balance_residual(res.rows) < 0.1 * scale
        slips.append(max(res.column("slip_residual")) / max(res.column("max_speed")))
    # one-sided d_r at the wall is a truncation-error measurement of the exact ghost condition
    assert slips[1] < 5e-3
    assert slips[0] / slips[1] > 3.0


def test_unphysical_snapshot_flagged():
    grid = RadialGrid(0.875, 2.0, 0.05)
    bad = {"t": 1.0, "u": np.zeros(grid.n), "du_dt": np.full(grid.n, 2.0), "du_dr": np.zeros(grid.n)}
    rep = flow_report([bad], grid)
    assert rep.violation_time == 1.0
