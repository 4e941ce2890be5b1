import math

import numpy as np
import pytest

from nullwave.geometry import (
    CutoffProfile, FlattenMap, GeometryError, ObstacleShape, eval_b, fibonacci_sphere, flatten,
    is_convex, jacobian, outward_normal,
)

POLE = np.array([0.0, 0.0, 1.0])


def test_ball_profile_is_constant():
    shape = ObstacleShape.ball(7 / 8)
    assert np.allclose(eval_b(shape, fibonacci_sphere(50)), 7 / 8, atol=0, rtol=0)


def test_star_with_zero_harmonics_reduces_to_ball():
    shape = ObstacleShape.star(7 / 8, [(2, 0, 0.0), (3, 1, 0.0)])
    assert shape.is_ball
    assert np.all(eval_b(shape, fibonacci_sphere(50)) == 7 / 8)


def test_star_degree_two_pole_value():
    shape = ObstacleShape.star(7 / 8, [(2, 0, 0.01)])
    # Y_20 at the pole: sqrt(5 / 4pi) * (3 cos^2(0) - 1) / 2
    expected = 7 / 8 + 0.01 * math.sqrt(5.0 / (4.0 * math.pi))
    assert eval_b(shape, POLE) == pytest.approx(expected, abs=1e-14)


def test_non_unit_direction_rejected():
    with pytest.raises(GeometryError):
        eval_b(ObstacleShape.ball(), [0.0, 0.0, 2.0])


@pytest.mark.parametrize("b", [0.75, 1.0, 0.5, 1.2])
def test_radius_outside_band_rejected(b):
    with pytest.raises(GeometryError):
        ObstacleShape.ball(b)


def test_large_harmonic_breaks_convexity_or_band():
    with pytest.raises(GeometryError):
        ObstacleShape.star(7 / 8, [(6, 0, 0.05)])


@pytest.mark.parametrize("omega", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
def test_ball_normal_is_radial(omega):
    nu = outward_normal(ObstacleShape.ball(), omega)
    assert np.allclose(np.abs(nu), np.abs(omega), atol=1e-15)
    assert np.dot(nu, omega) == pytest.approx(-1.0)


def test_star_normal_orthogonal_to_tangents():
    shape = ObstacleShape.star(7 / 8, [(2, 0, 0.01), (2, 1, 0.005)])
    omega = np.array([0.3, 0.2, 0.0])
    omega[2] = math.sqrt(1 - omega[0] ** 2 - omega[1] ** 2)
    nu = outward_normal(shape, omega)

    def surface(w):
        w = w / np.linalg.norm(w)
        return eval_b(shape, w) * w

    h = 1e-6
    for e in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        tangent = (surface(omega + h * e) - surface(omega - h * e)) / (2 * h)
        assert abs(np.dot(nu, tangent)) / np.linalg.norm(tangent) < 1e-8


def test_small_star_is_convex():
    assert is_convex(ObstacleShape.star(7 / 8, [(2, 0, 0.01)]))


def test_cutoff_plateaus_and_monotone():
    rho = CutoffProfile()
    s = np.linspace(0.0, 2.0, 2001)
    v = rho(s)
    assert np.all(v[s <= 1.0] == 0.0)
    assert np.all(v[s >= 1.5] == 1.0)
    assert np.all(np.diff(v) >= -1e-15)
    assert np.max(rho.derivative(s)) == pytest.approx(rho.max_slope)


def test_cutoff_derivative_matches_finite_differences():
    rho = CutoffProfile()
    s = np.linspace(0.95, 1.55, 301)
    h = 1e-6
    fd = (rho(s + h) - rho(s - h)) / (2 * h)
    assert np.max(np.abs(fd - rho.derivative(s))) < 1e-6
    fd2 = (rho.derivative(s + h) - rho.derivative(s - h)) / (2 * h)
    assert np.max(np.abs(fd2 - rho.second_derivative(s))) < 1e-4


def test_flatten_boundary_goes_to_unit_sphere():
    fmap = FlattenMap(ObstacleShape.ball(7 / 8))
    x = np.array([7 / 8, 0.0, 0.0])
    y = flatten(fmap, x)
    assert np.allclose(y, x / (7 / 8), atol=1e-15)
    assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-15)


def test_flatten_is_identity_far_out():
    fmap = FlattenMap(ObstacleShape.star(7 / 8, [(2, 0, 0.01)]))
    x = 4.0 * fibonacci_sphere(20)
    assert np.array_equal(flatten(fmap, x), x)


def test_flatten_transition_value_and_round_trip():
    fmap = FlattenMap(ObstacleShape.ball(7 / 8))
    x = np.array([0.0, 2.5, 0.0])
    s = float(fmap.cutoff(1.25))
    y = flatten(fmap, x)
    assert np.allclose(y, x / ((1 - s) * 7 / 8 + s), atol=1e-15)
    assert np.allclose(fmap.inverse(y), x, atol=1e-12)


def test_inverse_round_trip_star():
    fmap = FlattenMap(ObstacleShape.star(7 / 8, [(2, 0, 0.01), (3, 2, 0.004)]))
    dirs = fibonacci_sphere(40)
    radii = np.linspace(1.0, 3.4, 40)
    y = radii[:, None] * dirs
    assert np.allclose(flatten(fmap, fmap.inverse(y)), y, atol=1e-11)


def test_point_inside_obstacle_rejected():
    with pytest.raises(GeometryError):
        flatten(FlattenMap(ObstacleShape.ball()), np.array([0.5, 0.0, 0.0]))


def test_jacobian_identity_far_out():
    fmap = FlattenMap(ObstacleShape.ball())
    assert np.array_equal(jacobian(fmap, np.array([0.0, 4.0, 0.0])), np.eye(3))


def test_jacobian_pure_scaling_at_boundary():
    fmap = FlattenMap(ObstacleShape.ball(7 / 8))
    jac = jacobian(fmap, np.array([7 / 8, 0.0, 0.0]))
    assert np.allclose(jac, (8 / 7) * np.eye(3), atol=1e-14)


@pytest.mark.parametrize("shape", [ObstacleShape.ball(7 / 8), ObstacleShape.star(7 / 8, [(2, 0, 0.01)])])
def test_jacobian_matches_finite_differences(shape):
    fmap = FlattenMap(shape)
    x = np.array([1.1, 0.3, 0.2])
    h = 1e-6
    fd = np.column_stack([
        (flatten(fmap, x + h * e) - flatten(fmap, x - h * e)) / (2 * h) for e in np.eye(3)
    ])
    assert np.max(np.abs(jacobian(fmap, x) - fd)) < 1e-6


def test_jacobian_determinant_positive_across_band():
    fmap = FlattenMap(ObstacleShape.ball(7 / 8))
    radii = np.linspace(7 / 8, 3.2, 200)
    x = radii[:, None] * fibonacci_sphere(200)[:1]
    assert np.all(np.linalg.det(jacobian(fmap, x)) > 0)


def test_json_round_trip():
    shape = ObstacleShape.star(0.86, [(2, 0, 0.01)])
    assert ObstacleShape.from_json(shape.to_json()) == shape
    assert ObstacleShape.from_json({"kind": "ball", "b": 0.8}) == ObstacleShape.ball(0.8)
