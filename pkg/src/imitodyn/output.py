"""Artifact writers: trajectory CSV and report JSON.

Both the stochastic engine and the ODE integrator emit the same CSV shape
(header ``t,x_0,...,x_{m-1}``, one row per recorded point) so downstream
tooling treats them interchangeably.  Output is byte-deterministic: floats
print with repr (shortest round-trip form), JSON keys are sorted, and no
timestamps or hostnames appear anywhere.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .engine import Trajectory

__all__ = [
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_json",
    "run_summary",
    "ensure_dir",
]


def write_trajectory_csv(path: str, times: np.ndarray, states: np.ndarray) -> None:
    """states has one row per time, one column per action (fractions)."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] != times.size:
        raise ValueError(f"states shape {states.shape} does not match {times.size} times")
    m = states.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t," + ",".join(f"x_{j}" for j in range(m)) + "\n")
        for i in range(times.size):
            row = ",".join(repr(float(v)) for v in states[i])
            fh.write(f"{float(times[i])!r},{row}\n")


def read_trajectory_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1:]


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _jsonable(v):
    if v is None or isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    raise TypeError(f"cannot serialize {type(v).__name__}")


def run_summary(traj: Trajectory) -> dict:
    """Per-run summary record for the ensemble summary file."""
    return {
        "seed": _jsonable(traj.meta.get("seed")),
        "n": traj.n,
        "absorbed_at": traj.absorbed_at,
        "absorbing_action": traj.absorbing_action,
        "final_state": [float(v) for v in traj.fractions[-1]],
        "event_count": traj.event_count,
    }


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
