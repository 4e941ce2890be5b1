"""Scenario dispatch and artifact writing (CSV time series, JSON summary, manifest)."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from .chaplygin import GasParameters, flow_hook
from .config import ScenarioConfig
from .flat3d import FlatGrid, run_3d_linear, spherical_average
from .grid import RadialGrid
from .initial import bump, bump_derivative, make_bump_data
from .solver import RadialProblem, run_radial

EXIT_OK = 0
EXIT_BLOWUP = 2
EXIT_CONFIG = 3
EXIT_DIVERGENCE = 4

_STATUS_CODES = {"ok": EXIT_OK, "blowup": EXIT_BLOWUP, "divergence": EXIT_DIVERGENCE}
DIAGNOSTIC_COLUMNS = ["t", "E00", "kss_lhs", "kss_rhs", "localE_r5", "envelope_D", "sup_du", "blowup_flag"]


@dataclass
class RunSummary:
    exit_status: int
    scenario: str
    status: str = "ok"
    blowup_time: Optional[float] = None
    amplification: Optional[float] = None
    energy_drift: Optional[float] = None
    decay_rate: Optional[float] = None
    decay_r_squared: Optional[float] = None
    convergence_orders: Optional[list] = None
    sweep_slope: Optional[float] = None
    extra: dict = field(default_factory=dict)
    manifest: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k not in ("extra", "manifest")}
        out.update(self.extra)
        out["manifest"] = list(self.manifest)
        return jsonable(out)


def jsonable(obj):
    """Plain-JSON copy of ``obj``: numpy scalars unwrapped, non-finite floats as ``None``."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _fmt(v):
    if v is None or (isinstance(v, str) and v == ""):
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, rows, columns=None):
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])
    return path


def _diag_columns(rows):
    cols = list(DIAGNOSTIC_COLUMNS)
    extra = []
    for row in rows:
        extra.extend(k for k in row if k not in cols and k not in extra)
    energy = sorted(k for k in extra if k.startswith(("E_", "calE_")))
    rest = [k for k in extra if k not in energy]
    return cols[:2] + energy + cols[2:] + rest


class ArtifactWriter:
    def __init__(self, out_dir, formats=("csv", "json")):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.formats = set(formats)
        self.files = []

    def csv(self, name, rows, columns=None):
        if "csv" in self.formats:
            self.files.append(write_csv(self.dir / name, rows, columns).name)

    def json(self, name, obj):
        if "json" in self.formats:
            path = self.dir / name
            path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True))
            self.files.append(path.name)

    def finish(self, summary: RunSummary):
        summary.manifest = list(self.files)
        self.json("summary.json", summary.to_json())
        summary.manifest = list(self.files)
        # manifest last, via rename, so a present manifest means a complete run
        tmp = self.dir / ".manifest.json.tmp"
        tmp.write_text(json.dumps({"files": summary.manifest, "exit_status": summary.exit_status},
                                  indent=2))
        os.replace(tmp, self.dir / "manifest.json")
        return summary


def _radial_grid(cfg: ScenarioConfig, dr=None) -> RadialGrid:
    return RadialGrid(cfg.obstacle.b_const, cfg.r_max, cfg.grid.dr if dr is None else dr)


def _radial_problem(cfg: ScenarioConfig, epsilon=None, dr=None) -> RadialProblem:
    grid = _radial_grid(cfg, dr)
    d = cfg.data
    data = make_bump_data(d.center_r, d.width, grid, u0_amp=d.u0_amp, u1_amp=d.u1_amp,
                          epsilon=d.epsilon if epsilon is None else epsilon,
                          b_max=cfg.obstacle.b_max, outgoing=d.outgoing)
    hooks = []
    if cfg.gas is not None and cfg.scenario in ("chaplygin_radial", "epsilon_sweep"):
        hooks.append(flow_hook(grid, cfg.gas))
    return RadialProblem(
        grid, cfg.nonlinearity, data, cfg.t_final, cfl=cfg.grid.cfl, outer=cfg.grid.outer,
        sample_every=cfg.diagnostics.sample_every, energy_every=cfg.diagnostics.energy_every,
        snapshot_times=tuple(cfg.diagnostics.snapshot_times), order_cap=cfg.diagnostics.order_cap,
        row_hooks=hooks,
    )


def _radial(cfg: ScenarioConfig, writer: ArtifactWriter) -> RunSummary:
    res = run_radial(_radial_problem(cfg))
    summary = RunSummary(_STATUS_CODES[res.status], cfg.scenario, res.status, res.blowup_time,
                         res.amplification)
    ok_rows = [row for row in res.rows if not row.get("blowup_flag")]
    if cfg.nonlinearity.is_zero and len(ok_rows) > 1:
        e = np.array([row["E00"] for row in ok_rows])
        summary.energy_drift = float(np.max(np.abs(e - e[0])) / e[0]) if e[0] > 0 else 0.0
    if cfg.t_final >= 40 and cfg.nonlinearity.is_zero:
        fit = ex.dg.local_energy_decay_fit([r["t"] for r in ok_rows], [r["localE_r5"] for r in ok_rows],
                                           floor=1e-4 * ok_rows[0]["localE_r5"])
        summary.decay_rate, summary.decay_r_squared = fit.rate, fit.r_squared
    if ok_rows:
        summary.extra["sup_envelope_D"] = max(row["envelope_D"] for row in ok_rows)
        if "rho_min" in ok_rows[0]:
            summary.extra["rho_min"] = min(row["rho_min"] for row in ok_rows)
            summary.extra["rho_floor"] = cfg.gas.rho_floor
    if res.message:
        summary.extra["message"] = res.message
    if res.blowup_reason:
        summary.extra["blowup_reason"] = res.blowup_reason
    writer.csv("diagnostics.csv", res.rows, _diag_columns(res.rows))
    if "rho_min" in (ok_rows[0] if ok_rows else {}):
        writer.csv("flow.csv", ok_rows, ["t", "rho_min", "rho_max", "max_speed", "slip_residual"])
    for snap in res.snapshots:
        rows = [{"r": r, "u": u, "du_dt": ut, "du_dr": ur}
                for r, u, ut, ur in zip(snap["r"], snap["u"], snap["du_dt"], snap["du_dr"])]
        writer.csv(f"snapshot_t{snap['t']:.4f}.csv", rows, ["r", "u", "du_dt", "du_dr"])
    return summary


def _linear_3d(cfg: ScenarioConfig, writer: ArtifactWriter) -> RunSummary:
    g = cfg.grid
    grid = FlatGrid(g.n_rho, g.n_theta, g.n_phi, g.y_max)
    d = cfg.data
    u0 = lambda x: d.epsilon * d.u0_amp * bump((np.linalg.norm(x, axis=-1) - d.center_r) / d.width)
    u1 = lambda x: d.epsilon * d.u1_amp * bump((np.linalg.norm(x, axis=-1) - d.center_r) / d.width)
    res = run_3d_linear(cfg.obstacle, grid, u0, u1, cfg.t_final, cfl=cfg.grid.cfl,
                        snapshot_times=tuple(cfg.diagnostics.snapshot_times) or (cfg.t_final,),
                        sample_every=cfg.diagnostics.sample_every)
    e = np.array(res.energy)
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e.size and e[0] != 0 else 0.0
    summary = RunSummary(EXIT_OK, cfg.scenario, energy_drift=drift, extra={"dt": res.dt})
    writer.csv("diagnostics.csv", [{"t": t, "energy": v} for t, v in zip(res.times, res.energy)],
               ["t", "energy"])
    rho = grid.centers(0)
    for t, u in res.snapshots:
        avg = spherical_average(res.operator, u)
        writer.csv(f"snapshot_t{t:.4f}.csv", [{"rho": a, "u_mean": b} for a, b in zip(rho, avg)],
                   ["rho", "u_mean"])
    return summary


def _oracle(cfg: ScenarioConfig, writer: ArtifactWriter) -> RunSummary:
    cmp = ex.oracle_compare(t=cfg.t_final, dr=cfg.grid.dr)
    summary = RunSummary(EXIT_OK, cfg.scenario, extra={
        "relative_l2": cmp.relative_l2, "oracle_validated": cmp.validated,
        "residuals": [{"h": r.h, "pde": r.pde, "boundary": r.boundary} for r in cmp.residuals],
    })
    writer.csv("oracle_compare.csv", [{"r": r, "fd": a, "oracle": b}
                                      for r, a, b in zip(cmp.r, cmp.fd, cmp.oracle)],
               ["r", "fd", "oracle"])
    return summary


def _convergence(cfg: ScenarioConfig, writer: ArtifactWriter, drs=None) -> RunSummary:
    conv = ex.convergence_study(drs or cfg.drs, t_final=cfg.t_final, r_min=cfg.obstacle.b_const)
    summary = RunSummary(EXIT_OK, cfg.scenario, convergence_orders=conv.orders,
                         extra={"errors": conv.errors, "drs": conv.drs, "mean_order": conv.mean_order})
    writer.csv("convergence.csv", [{"dr": d, "error": e} for d, e in zip(conv.drs, conv.errors)],
               ["dr", "error"])
    return summary


def _sweep_one(args):
    cfg, eps = args
    res = run_radial(_radial_problem(cfg, epsilon=eps))
    ok = [row for row in res.rows if not row.get("blowup_flag")]
    return {
        "epsilon": eps, "status": res.status, "blowup_time": res.blowup_time,
        "sup_envelope_D": max(row["envelope_D"] for row in ok),
        "rho_min": min(row["rho_min"] for row in ok) if ok and "rho_min" in ok[0] else None,
        "amplification": res.amplification,
    }


def sweep_workers(n_jobs: int) -> int:
    try:
        cap = int(os.environ.get("NULLWAVE_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_jobs))


def _sweep(cfg: ScenarioConfig, writer: ArtifactWriter, epsilons=None) -> RunSummary:
    eps = list(epsilons or cfg.epsilons)
    jobs = [(cfg, e) for e in eps]
    workers = sweep_workers(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    sups = [r["sup_envelope_D"] for r in results]
    slope = ex.loglog_slope(eps, sups)
    statuses = [r["status"] for r in results]
    worst = "ok" if all(s == "ok" for s in statuses) else ("divergence" if "divergence" in statuses else "blowup")
    summary = RunSummary(_STATUS_CODES[worst], cfg.scenario, worst, sweep_slope=slope,
                         extra={"runs": results})
    writer.csv("sweep.csv", results, ["epsilon", "status", "blowup_time", "sup_envelope_D", "rho_min",
                                      "amplification"])
    return summary


def run_scenario(cfg: ScenarioConfig, out_dir=None, *, epsilons=None, drs=None) -> RunSummary:
    """Run ``cfg`` and write its artifacts; the returned summary carries the exit status."""
    writer = ArtifactWriter(out_dir or cfg.output.dir, cfg.output.formats)
    writer.json("config.json", cfg.to_json())
    kind = cfg.scenario
    if kind in ("linear_radial", "null_radial", "nonnull_radial", "chaplygin_radial"):
        summary = _radial(cfg, writer)
    elif kind == "linear_3d":
        summary = _linear_3d(cfg, writer)
    elif kind == "oracle_compare":
        summary = _oracle(cfg, writer)
    elif kind == "convergence_study":
        summary = _convergence(cfg, writer, drs)
    elif kind == "epsilon_sweep":
        summary = _sweep(cfg, writer, epsilons)
    else:  # pragma: no cover - parse_config rejects unknown scenarios
        raise ValueError(kind)
    return writer.finish(summary)


def chaplygin_scenario(epsilon, data: Optional[dict] = None, params: GasParameters = GasParameters(),
                       t_final=100.0, **overrides) -> ScenarioConfig:
    """Chaplygin potential-flow scenario config (slip condition = Neumann data for the potential)."""
    from .config import config_from_dict
    raw = {"scenario": "chaplygin_radial", "t_final": t_final,
           "nonlinearity": {"preset": "chaplygin"},
           "data": dict(data or {}, epsilon=epsilon), "gas": params.to_json()}
    raw.update(overrides)
    return config_from_dict(raw)
