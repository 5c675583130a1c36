"""JSON and CSV formats. Every float is written with 17 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .measure import DiscreteMeasure
from .metric import PointCloud, as_points


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot serialise non-finite float {x}")
    return format(x, ".17g")


def _encode(obj) -> str:
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return "null"
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with full-precision floats (non-finite floats become null)."""
    return _encode(obj)


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# clouds

def cloud_to_json(cloud: PointCloud) -> list:
    return cloud.points.tolist()


def cloud_from_json(data, dim: int | None = None) -> PointCloud:
    return PointCloud(as_points(data, dim))


def write_cloud_csv(path, cloud: PointCloud):
    header = [f"x{k}" for k in range(cloud.dim)]
    write_csv(path, header, ([float(v) for v in p] for p in cloud.points))


def read_cloud_csv(path) -> PointCloud:
    _, rows = read_csv(path)
    return PointCloud(np.array(rows, dtype=float))


# measures

def measure_to_json(mu: DiscreteMeasure) -> dict:
    return {"atoms": [[p.tolist(), float(w)] for p, w in zip(mu.points, mu.weights)]}


def measure_from_json(data) -> DiscreteMeasure:
    atoms = data["atoms"]
    pts = np.array([np.atleast_1d(np.asarray(a[0], dtype=float)) for a in atoms])
    w = np.array([float(a[1]) for a in atoms])
    return DiscreteMeasure(pts, w)


def write_measure_csv(path, mu: DiscreteMeasure):
    header = [f"x{k}" for k in range(mu.dim)] + ["weight"]
    write_csv(path, header, ([*map(float, p), float(w)] for p, w in zip(mu.points, mu.weights)))


def read_measure_csv(path) -> DiscreteMeasure:
    _, rows = read_csv(path)
    arr = np.array(rows, dtype=float)
    return DiscreteMeasure(arr[:, :-1], arr[:, -1])


# traces, plans, potentials

def write_trace_csv(path, trace, name="distance"):
    write_csv(path, ["step", name], ((k + 1, float(v)) for k, v in enumerate(trace)))


def read_trace_csv(path) -> list[float]:
    _, rows = read_csv(path)
    return [float(r[1]) for r in rows]


def write_plan_csv(path, plan: np.ndarray):
    write_csv(path, ["i", "j", "mass"], ((int(i), int(j), float(m)) for i, j, m in plan))


def read_plan_csv(path) -> np.ndarray:
    _, rows = read_csv(path)
    return np.array(rows, dtype=float).reshape(-1, 3)


def write_potentials_csv(path, values):
    write_csv(path, ["atom", "potential"], ((k, float(v)) for k, v in enumerate(values)))


def read_potentials_csv(path) -> np.ndarray:
    _, rows = read_csv(path)
    return np.array([float(r[1]) for r in rows])
