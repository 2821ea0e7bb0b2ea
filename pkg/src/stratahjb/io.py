"""CSV grid dumps, trajectory dumps and JSON reports."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .solver import ValueGrid
from .trajectories import Trajectory


def saved_levels(n_levels: int, save_every: int | None) -> list[int]:
    """Level indices written to disk: every save_every-th, always the first and the last."""
    if not save_every or save_every < 1:
        save_every = max(1, (n_levels - 1) // 10)
    keep = list(range(0, n_levels, save_every))
    if keep[-1] != n_levels - 1:
        keep.append(n_levels - 1)
    return keep


def grid_rows(V: ValueGrid, level: int) -> np.ndarray:
    """Rows (t, x1..xd, stratumId, layerId, value) for one stored level."""
    X = V.grid.nodes
    ns = V.grid.node_stratum
    vals = V.values[level]
    if V.layered:
        nodes, layers = V.pair_node, V.pair_stratum
        pts, sids = X[nodes], ns[nodes]
    else:
        pts, sids, layers = X, ns, ns
    t = np.full(pts.shape[0], V.times[level])
    return np.column_stack([t, pts, sids, layers, vals])


def write_grid_csv(V: ValueGrid, path, save_every: int | None = None) -> Path:
    path = Path(path)
    d = V.grid.d
    header = ",".join(["t", *[f"x{k + 1}" for k in range(d)], "stratumId", "layerId", "value"])
    fmt = ["%.17g"] * (d + 1) + ["%d", "%d", "%.17g"]
    with path.open("w", newline="\n") as fh:
        fh.write(header + "\n")
        for n in saved_levels(V.times.size, save_every):
            np.savetxt(fh, grid_rows(V, n), fmt=fmt, delimiter=",")
    return path


def read_grid_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    d = traj.states.shape[1]
    header = ",".join(["time", *[f"x{k + 1}" for k in range(d)], "stratumId", "controlIndex", "eta"])
    rows = np.column_stack([traj.times, traj.states, traj.strata, traj.controls, traj.eta])
    fmt = ["%.17g"] * (d + 1) + ["%d", "%d", "%.17g"]
    with path.open("w", newline="\n") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, rows, fmt=fmt, delimiter=",")
        for ev in traj.events:
            fh.write(f"# event time={ev.time:.17g} from={ev.from_stratum} to={ev.to_stratum}\n")
    return path


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return path
