"""Scenario configuration: JSON parsing, defaults and cross-field validation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .chaplygin import GasParameters
from .geometry import GeometryError, ObstacleShape
from .nullform import NullFormSpec, RadialNonlinearity
from .solver import MAX_CFL

SCENARIOS = (
    "linear_radial", "null_radial", "nonnull_radial", "chaplygin_radial",
    "linear_3d", "oracle_compare", "convergence_study", "epsilon_sweep",
)

DEFAULT_NONLINEARITY = {
    "linear_radial": "zero", "null_radial": "null_q0", "nonnull_radial": "nonnull_dt2",
    "chaplygin_radial": "chaplygin", "linear_3d": "zero", "oracle_compare": "zero",
    "convergence_study": "zero", "epsilon_sweep": "chaplygin",
}


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path} {message}" if path else message)
        self.path = path


@dataclass
class GridConfig:
    dr: float = 0.005
    cfl: float = 0.5
    r_max: object = "auto"
    outer: str = "dod"
    n_rho: int = 48
    n_theta: int = 24
    n_phi: int = 48
    y_max: float = 5.0


@dataclass
class DataConfig:
    center_r: float = 3.0
    width: float = 1.0
    u0_amp: float = 1.0
    u1_amp: float = 0.0
    epsilon: float = 1.0
    outgoing: bool = False


@dataclass
class DiagnosticsConfig:
    order_cap: int = 2
    sample_every: float = 0.5
    energy_every: float = 5.0
    snapshot_times: list = field(default_factory=list)


@dataclass
class OutputConfig:
    dir: str = "nullwave_out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class ScenarioConfig:
    scenario: str
    t_final: float
    obstacle: ObstacleShape = field(default_factory=ObstacleShape.ball)
    nonlinearity: NullFormSpec = None
    data: DataConfig = field(default_factory=DataConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    gas: Optional[GasParameters] = None
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    epsilons: list = field(default_factory=lambda: [0.02, 0.01, 0.005])
    drs: list = field(default_factory=lambda: [1 / 50, 1 / 100, 1 / 200])

    @property
    def r_max(self) -> float:
        if self.grid.r_max != "auto":
            return float(self.grid.r_max)
        return auto_r_max(self.obstacle.b_const, self.data.center_r + self.data.width, self.t_final)

    def to_json(self) -> dict:
        out = {
            "scenario": self.scenario,
            "t_final": self.t_final,
            "obstacle": self.obstacle.to_json(),
            "nonlinearity": self.nonlinearity.to_json(),
            "data": asdict(self.data),
            "grid": asdict(self.grid),
            "diagnostics": asdict(self.diagnostics),
            "output": asdict(self.output),
            "seed": self.seed,
            "epsilons": list(self.epsilons),
            "drs": list(self.drs),
        }
        if self.gas is not None:
            out["gas"] = self.gas.to_json()
        return out


def auto_r_max(r_min, support_radius, t_final) -> float:
    """Outer edge far enough that nothing reaches it before ``t_final``."""
    return float(math.ceil(max(support_radius, r_min) + 1.2 * t_final + 2.0))


def _section(raw, key, cls, path):
    obj = raw.get(key, {})
    if not isinstance(obj, dict):
        raise ConfigError(path, "must be an object")
    names = set(cls.__dataclass_fields__)
    unknown = set(obj) - names
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "is not a known field")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None


def _positive(value, path, allow_zero=False):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(path, "must be a finite number")
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigError(path, "must be positive")
    return float(value)


def config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a JSON object")
    allowed = {"scenario", "t_final", "obstacle", "nonlinearity", "data", "grid", "diagnostics",
               "gas", "output", "seed", "epsilons", "drs"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(sorted(unknown)[0], "is not a known field")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"must be one of {', '.join(SCENARIOS)}")
    t_final = _positive(raw.get("t_final", 10.0), "t_final", allow_zero=True)

    try:
        obstacle = ObstacleShape.from_json(raw["obstacle"]) if "obstacle" in raw else ObstacleShape.ball()
    except (GeometryError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError("obstacle", str(exc)) from None

    nl_raw = raw.get("nonlinearity", {"preset": DEFAULT_NONLINEARITY[scenario]})
    try:
        spec = NullFormSpec.from_json(nl_raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("nonlinearity", str(exc)) from None

    grid = _section(raw, "grid", GridConfig, "grid")
    data = _section(raw, "data", DataConfig, "data")
    diag = _section(raw, "diagnostics", DiagnosticsConfig, "diagnostics")
    output = _section(raw, "output", OutputConfig, "output")

    _positive(grid.dr, "grid.dr")
    _positive(grid.cfl, "grid.cfl")
    if grid.cfl > MAX_CFL:
        raise ConfigError("grid.cfl", f"exceeds {MAX_CFL}")
    if grid.outer not in ("dod", "sommerfeld"):
        raise ConfigError("grid.outer", "must be 'dod' or 'sommerfeld'")
    if grid.r_max != "auto":
        _positive(grid.r_max, "grid.r_max")
    _positive(data.width, "data.width")
    _positive(data.epsilon, "data.epsilon", allow_zero=True)
    if not isinstance(diag.order_cap, int) or not 0 <= diag.order_cap <= 2:
        raise ConfigError("diagnostics.order_cap", "must be 0, 1 or 2")
    _positive(diag.sample_every, "diagnostics.sample_every")
    _positive(diag.energy_every, "diagnostics.energy_every")
    for fmt in output.formats:
        if fmt not in ("csv", "json"):
            raise ConfigError("output.formats", f"unsupported format {fmt!r}")

    # bump support must stay clear of the obstacle
    if data.center_r - data.width <= obstacle.b_max:
        raise ConfigError(
            "data",
            f"bump support [{data.center_r - data.width:g}, {data.center_r + data.width:g}] "
            f"overlaps the obstacle (max b = {obstacle.b_max:g})",
        )
    if scenario == "linear_3d" and not spec.is_zero:
        raise ConfigError("nonlinearity", "linear_3d accepts only the zero nonlinearity")
    if scenario != "linear_3d" and not obstacle.is_ball:
        raise ConfigError("obstacle", f"{scenario} is radial and needs a ball obstacle")
    if scenario != "linear_3d" and not spec.is_zero:
        try:
            RadialNonlinearity(spec)
        except ValueError as exc:
            raise ConfigError("nonlinearity", str(exc)) from None

    gas = None
    if "gas" in raw:
        try:
            gas = GasParameters(**raw["gas"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("gas", str(exc)) from None
    elif scenario in ("chaplygin_radial", "epsilon_sweep"):
        gas = GasParameters()

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "must be an integer")
    cfg = ScenarioConfig(scenario, t_final, obstacle, spec, data, grid, diag, gas, output, seed)
    if "epsilons" in raw:
        eps = raw["epsilons"]
        if not isinstance(eps, list) or len(eps) < 2:
            raise ConfigError("epsilons", "needs at least two values")
        cfg.epsilons = [_positive(e, f"epsilons[{i}]") for i, e in enumerate(eps)]
    if "drs" in raw:
        drs = raw["drs"]
        if not isinstance(drs, list) or len(drs) < 2:
            raise ConfigError("drs", "needs at least two values")
        cfg.drs = [_positive(d, f"drs[{i}]") for i, d in enumerate(drs)]
    if scenario != "linear_3d" and cfg.r_max < obstacle.b_const + 15 * grid.dr:
        raise ConfigError("grid.r_max", "too close to the obstacle for the grid spacing")
    if grid.r_max != "auto" and grid.outer == "dod":
        need = auto_r_max(obstacle.b_const, data.center_r + data.width, t_final)
        if cfg.r_max < need - 1.0:
            raise ConfigError("grid.r_max", f"must be at least {need - 1.0:g} for the domain-of-dependence edge")
    return cfg


def parse_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    return config_from_dict(raw)
