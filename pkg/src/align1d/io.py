"""Serialization helpers: deterministic JSON and trajectory CSV files."""

import json
import math

import numpy as np


def _clean(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "unbounded" if obj > 0 else "-unbounded"
        if math.isnan(obj):
            return None
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps_json(obj):
    """Deterministic JSON; infinities become the string "unbounded"."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def fmt(x):
    """Shortest decimal string that round-trips the float."""
    return repr(float(x))


def trajectory_header(n, with_gap=False):
    cols = ["t"]
    for block in ("X", "V", "q", "rho"):
        cols += [f"{block}_{i}" for i in range(n)]
    cols += ["psi_drift", "min_separation"]
    if with_gap:
        cols.append("order_gap")
    return cols


def write_trajectory_csv(fh, record):
    n = record.X.shape[1]
    with_gap = record.order_gap is not None
    fh.write(",".join(trajectory_header(n, with_gap)) + "\n")
    for k, t in enumerate(record.times):
        row = [t, *record.X[k], *record.V[k], *record.q[k], *record.rho[k],
               record.psi_drift[k], record.min_separation[k]]
        if with_gap:
            row.append(record.order_gap[k])
        fh.write(",".join(map(fmt, row)) + "\n")


def read_trajectory_csv(path):
    """Column blocks of a trajectory CSV as a dict of arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = sum(1 for c in header if c.startswith("X_"))
    expected = trajectory_header(n, header[-1] == "order_gap")
    if header != expected:
        raise ValueError(f"{path}: unexpected trajectory columns")
    out = {"times": data[:, 0]}
    for j, block in enumerate(("X", "V", "q", "rho")):
        out[block] = data[:, 1 + j * n:1 + (j + 1) * n]
    out["psi_drift"] = data[:, 1 + 4 * n]
    out["min_separation"] = data[:, 2 + 4 * n]
    out["order_gap"] = data[:, 3 + 4 * n] if header[-1] == "order_gap" else None
    return out


def _restore(obj):
    if obj == "unbounded":
        return math.inf
    if obj == "-unbounded":
        return -math.inf
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    return obj


def loads_json(text):
    return _restore(json.loads(text))
