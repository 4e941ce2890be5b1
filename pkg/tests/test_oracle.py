import numpy as np
import pytest

from nullwave.initial import bump
from nullwave.oracle import (
    SphericalOracleProblem, boundary_history, spherical_oracle, validate_oracle,
)

F1 = lambda t, r: bump((t - 2.0) / 1.5) * bump((r - 2.5) / 1.0)
# nested Simpson at n_quad = 160 and 320 agree to 1e-9 here
FROZEN_V_5_2 = 0.18860731


def test_zero_forcing_gives_zero():
    p = SphericalOracleProblem()
    assert np.all(spherical_oracle(p, 4.0, np.linspace(1, 5, 9)) == 0.0)
    assert np.all(boundary_history(p, np.linspace(-1, 5, 7)) == 0.0)


def test_causality_before_start():
    p = SphericalOracleProblem(F1=F1, F2=lambda t: np.ones_like(t))
    assert spherical_oracle(p, -0.5, 2.0) == 0.0
    assert np.all(boundary_history(p, [-1.0, 0.0]) == 0.0)
    # a boundary signal emitted at t = 0 has not reached r = 3 by t = 1.5
    q = SphericalOracleProblem(F2=lambda t: bump((t - 0.5) / 0.4))
    assert spherical_oracle(q, 1.5, 3.0) == 0.0


def test_domain_check():
    with pytest.raises(ValueError):
        spherical_oracle(SphericalOracleProblem(), 1.0, 0.5)


def test_pde_residual_small():
    # the residual already sits at the quadrature floor, amplified by 1/h^2 under differencing
    p = SphericalOracleProblem(F1=F1)
    pts = [(5.0, 2.0), (4.0, 1.5)]
    for h in (0.08, 0.04, 0.02):
        assert validate_oracle(p, pts, h).pde < 1e-5


def test_boundary_residual_with_flux():
    p = SphericalOracleProblem(F1=F1, F2=lambda t: 0.5 * bump((t - 3.0) / 1.5))
    coarse, fine = validate_oracle(p, [(5.0, 2.0)], 0.04), validate_oracle(p, [(5.0, 2.0)], 0.02)
    assert 3.0 < coarse.boundary / fine.boundary < 5.0


def test_frozen_point_value():
    p = SphericalOracleProblem(F1=F1)
    assert spherical_oracle(p, 5.0, 2.0) == pytest.approx(FROZEN_V_5_2, abs=1e-8)
    coarse = SphericalOracleProblem(F1=F1, n_quad=80)
    assert spherical_oracle(coarse, 5.0, 2.0) == pytest.approx(FROZEN_V_5_2, abs=1e-7)


def test_vectorized_matches_scalar():
    p = SphericalOracleProblem(F1=F1)
    r = np.array([1.0, 1.7, 2.9])
    vec = spherical_oracle(p, 4.5, r)
    assert np.allclose(vec, [spherical_oracle(p, 4.5, x) for x in r], rtol=0, atol=1e-15)
