"""Shared helpers for the experiment scripts."""

import argparse
import json
from pathlib import Path

from nullwave.runner import jsonable, write_csv


def parser(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", default="results", help="output directory")
    return p


def save(out, name, summary, rows=None, columns=None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if rows is not None:
        write_csv(out / f"{name}.csv", rows, columns)
    (out / f"{name}.json").write_text(json.dumps(jsonable(summary), indent=2, sort_keys=True))
    print(json.dumps(jsonable(summary), indent=2, sort_keys=True))
