"""CSV and JSON persistence with exact float round-trips.

Floats are written with 17 significant digits, which is enough to recover
every double bitwise.  Nothing time- or host-dependent is recorded, so
identical runs give identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Branch, SolutionPair, UpsilonCurve

SCHEMA_VERSION = 1

BRANCH_COLUMNS = ("lambda", "gamma", "sup_u", "sup_v", "eta", "residual")
PROFILE_COLUMNS = ("r", "u", "v")
UPSILON_COLUMNS = ("sigma", "lambda_star", "gamma_star", "bracket_width")
VERDICT_COLUMNS = ("name", "value", "passed", "guaranteed")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_csv(path):
    """Rows as dicts; numeric-looking fields are parsed back to float."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        parsed = {}
        for k, v in row.items():
            try:
                parsed[k] = float(v)
            except ValueError:
                parsed[k] = v
        out.append(parsed)
    return out


def branch_rows(branch: Branch):
    return [(pt.lam, pt.gamma, pt.sup_u, pt.sup_v, pt.eta, pt.residual) for pt in branch.points]


def profile_rows(sol: SolutionPair):
    return list(zip(sol.mesh.nodes, sol.u, sol.v))


def upsilon_rows(curve: UpsilonCurve):
    return [(s.sigma, s.lambda_star, s.gamma_star, s.bracket_width) for s in curve.samples]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def write_json(path, record: dict) -> Path:
    """JSON with a schema version; NaN and infinities use the JavaScript literals."""
    path = Path(path)
    body = {"schema_version": SCHEMA_VERSION, **_jsonable(record)}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    rec = json.loads(Path(path).read_text())
    if rec.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {rec.get('schema_version')!r}")
    return rec

