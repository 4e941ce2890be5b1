"""Command-line front end: ``nullwave run|check-null|check-admissible|sweep|converge|contrast``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .geometry import GeometryError, ObstacleShape
from .nullform import NullFormSpec, check_admissible, check_null
from .runner import EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_OK, jsonable, run_scenario


def _floats(text):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if len(values) < 2:
        raise argparse.ArgumentTypeError("need at least two values")
    return values


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(str(path), f"is not readable JSON ({exc})") from None


def _load_config(args):
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _default(obj):
    return jsonable(obj.tolist()) if hasattr(obj, "tolist") else jsonable(float(obj))


def _print(obj):
    print(json.dumps(jsonable(obj), indent=2, sort_keys=True, default=_default))


def _verdict(v):
    return {"holds": bool(v.holds), "residual": float(v.residual), "witness": v.witness}


def cmd_run(args):
    cfg = _load_config(args)
    summary = run_scenario(cfg, args.out)
    _print(summary.to_json())
    return summary.exit_status


def cmd_sweep(args):
    cfg = _load_config(args)
    if cfg.scenario not in ("epsilon_sweep",):
        cfg = dataclasses.replace(cfg, scenario="epsilon_sweep")
    summary = run_scenario(cfg, args.out, epsilons=args.epsilons)
    _print(summary.to_json())
    return summary.exit_status


def cmd_converge(args):
    cfg = _load_config(args)
    cfg = dataclasses.replace(cfg, scenario="convergence_study")
    summary = run_scenario(cfg, args.out, drs=args.dr)
    _print(summary.to_json())
    return summary.exit_status


def cmd_check_null(args):
    spec = NullFormSpec.from_json(_load_json(args.spec))
    verdict = check_null(spec, tol=args.tol, n_samples=args.samples)
    _print(_verdict(verdict))
    return EXIT_OK


def cmd_check_admissible(args):
    spec = NullFormSpec.from_json(_load_json(args.spec))
    shape = ObstacleShape.from_json(_load_json(args.obstacle))
    verdict = check_admissible(spec, shape, tol=args.tol, n_samples=args.samples)
    _print(_verdict(verdict))
    return EXIT_OK


def cmd_contrast(args):
    from .experiments import compare_null_vs_nonnull
    try:
        rep = compare_null_vs_nonnull(args.epsilon, args.t_final, dr=args.dr)
    except FloatingPointError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DIVERGENCE
    out = dataclasses.asdict(rep)
    out["ratio"] = rep.ratio
    _print(out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nullwave", description="Exterior Neumann-wave laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--out", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(func=cmd_run)

    cn = sub.add_parser("check-null", help="test the null condition of a nonlinearity")
    cn.add_argument("spec")
    cn.add_argument("--tol", type=float, default=1e-12)
    cn.add_argument("--samples", type=int, default=256)
    cn.set_defaults(func=cmd_check_null)

    ca = sub.add_parser("check-admissible", help="test the boundary admissibility condition")
    ca.add_argument("spec")
    ca.add_argument("obstacle")
    ca.add_argument("--tol", type=float, default=1e-12)
    ca.add_argument("--samples", type=int, default=256)
    ca.set_defaults(func=cmd_check_admissible)

    sw = sub.add_parser("sweep", help="epsilon sweep of a radial scenario")
    sw.add_argument("config")
    sw.add_argument("--epsilons", type=_floats, default=None)
    sw.add_argument("--out", default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.set_defaults(func=cmd_sweep)

    cv = sub.add_parser("converge", help="manufactured-solution convergence ladder")
    cv.add_argument("config")
    cv.add_argument("--dr", type=_floats, default=None)
    cv.add_argument("--out", default=None)
    cv.add_argument("--seed", type=int, default=None)
    cv.set_defaults(func=cmd_converge)

    ct = sub.add_parser("contrast", help="null vs non-null amplification")
    ct.add_argument("--epsilon", type=float, default=0.1)
    ct.add_argument("--t-final", type=float, default=100.0)
    ct.add_argument("--dr", type=float, default=0.01)
    ct.set_defaults(func=cmd_contrast)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
