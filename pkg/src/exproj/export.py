"""CSV and JSON serialization of trajectories, results and audit reports.

Floats are written with ``repr`` so a trajectory read back from CSV is
bit-identical to the one written, and re-auditing it reproduces the report.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .model import Trajectory

TRAJECTORY_COLUMNS = ("t", "rx", "ry", "rz", "vx", "vy", "vz", "m",
                      "Tx", "Ty", "Tz", "Tmag", "sigma", "tilt_deg")
_CONTROL_COLUMNS = TRAJECTORY_COLUMNS[8:]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """One row per node ``i = 0..N``; control columns are blank on the final node."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mag, tilt = traj.thrust, np.degrees(traj.tilt)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for i in range(traj.N + 1):
            row = [traj.t[i], *traj.r[i], *traj.v[i], traj.m[i]]
            cells = [_fmt(x) for x in row]
            if i < traj.N:
                cells += [_fmt(x) for x in (*traj.T[i], mag[i], traj.sigma[i], tilt[i])]
            else:
                cells += [""] * len(_CONTROL_COLUMNS)
            writer.writerow(cells)
    return path


def read_trajectory_csv(path: str | Path) -> Trajectory:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in TRAJECTORY_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two nodes, found {len(rows)}")

    def col(name: str, n: int) -> np.ndarray:
        try:
            return np.array([float(r[name]) for r in rows[:n]])
        except ValueError as exc:
            raise ValueError(f"{path}: bad value in column {name!r}: {exc}") from exc

    n_nodes, N = len(rows), len(rows) - 1
    t = col("t", n_nodes)
    r = np.column_stack([col(c, n_nodes) for c in ("rx", "ry", "rz")])
    v = np.column_stack([col(c, n_nodes) for c in ("vx", "vy", "vz")])
    m = col("m", n_nodes)
    T = np.column_stack([col(c, N) for c in ("Tx", "Ty", "Tz")])
    sigma = col("sigma", N)
    if np.any(m <= 0):
        raise ValueError(f"{path}: masses must be positive")
    return Trajectory(t=t, r=r, v=v, m=m, z=np.log(m), u=T / m[:-1, None], sigma=sigma, T=T)


def to_jsonable(obj: Any) -> Any:
    """Dataclasses, numpy values and non-finite floats in a JSON-safe form."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=False) + "\n")
    return path


def write_rows_csv(rows: Iterable[dict[str, Any]], path: str | Path) -> Path:
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if not rows:
            return path
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) if isinstance(v, (float, np.floating)) else v
                             for k, v in row.items()})
    return path
