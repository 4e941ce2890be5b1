"""Quasilinear Neumann-wave laboratory for the exterior of a convex obstacle."""

from .geometry import CutoffProfile, FlattenMap, ObstacleShape, eval_b, flatten, jacobian, outward_normal
from .nullform import (NullFormSpec, chaplygin_spec, check_admissible, check_null, evaluate_nonlinearity,
                       nonnull_dt2_spec, null_q0_spec, zero_spec)
from .grid import RadialGrid
from .initial import InitialData, build_psi2, check_compatibility_order, make_bump_data
from .solver import FieldState, RadialProblem, run_radial, step
from .oracle import SphericalOracleProblem, spherical_oracle
from .chaplygin import GasParameters, density_from_potential, flow_report
from .config import ScenarioConfig, parse_config
from .runner import RunSummary, chaplygin_scenario, run_scenario

__version__ = "0.1.0"
