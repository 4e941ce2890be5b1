import numpy as np
import pytest

from nullwave.flat3d import FlatGrid, FlatOperator, GridConfigError, run_3d_linear, spherical_average
from nullwave.geometry import ObstacleShape
from nullwave.initial import bump

SMALL = FlatGrid(16, 8, 16, 4.0)


def _radial_bump(x):
    return bump((np.linalg.norm(x, axis=-1) - 2.0) / 0.8)


def _zero(x):
    return np.zeros(x.shape[:-1])


def test_zero_data_stay_zero():
    res = run_3d_linear(ObstacleShape.ball(), SMALL, _zero, _zero, 0.5, snapshot_times=(0.5,))
    assert not res.snapshots[-1][1].any()


def test_grid_limits():
    with pytest.raises(GridConfigError):
        FlatGrid(128, 8, 16)
    with pytest.raises(GridConfigError):
        FlatGrid(16, 8, 15)


def test_cfl_violation_suggests_dt():
    op = FlatOperator(SMALL, ObstacleShape.ball())
    limit = op.max_stable_dt(0.5)
    with pytest.raises(GridConfigError) as info:
        run_3d_linear(ObstacleShape.ball(), SMALL, _radial_bump, _zero, 0.5, dt=10 * limit)
    assert info.value.suggested_dt == pytest.approx(limit)


def test_laplacian_annihilates_constants():
    for shape in (ObstacleShape.ball(), ObstacleShape.star(0.875, [(2, 0, 0.01)])):
        op = FlatOperator(SMALL, shape)
        assert np.max(np.abs(op.laplacian(np.ones(op.x.shape[:-1])))) < 1e-10


def test_energy_conserved_star_obstacle():
    shape = ObstacleShape.star(0.875, [(2, 0, 0.01)])
    res = run_3d_linear(shape, SMALL, _radial_bump, _zero, 1.0, sample_every=0.25)
    e = np.array(res.energy)
    assert np.max(np.abs(e - e[0])) / e[0] < 1e-2


def test_spherical_data_stay_spherical_on_ball():
    res = run_3d_linear(ObstacleShape.ball(), SMALL, _radial_bump, _zero, 0.8, snapshot_times=(0.8,))
    op, u = res.operator, res.snapshots[-1][1]
    avg = spherical_average(op, u)
    spread = np.max(np.abs(u - avg[:, None, None]))
    assert spread < 1e-10 * max(1.0, np.max(np.abs(u)))
