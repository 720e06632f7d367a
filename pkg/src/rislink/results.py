"""CSV and JSON persistence for traces, constellations and run summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .optimizer import Constellation, OptimizationTrace, TraceStep

TRACE_COLUMNS = ["loop", "pixel", "goal_before", "goal_after", "accepted"]
CONSTELLATION_COLUMNS = ["symbol_index", "bits", "ideal_re", "ideal_im", "rx_re", "rx_im", "sigma_k"]


def write_trace_csv(path, trace: OptimizationTrace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in trace.steps:
            w.writerow([s.loop, s.pixel, repr(s.goal_before), repr(s.goal_after), int(s.accepted)])


def read_trace_csv(path) -> list[TraceStep]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [TraceStep(int(r["loop"]), int(r["pixel"]), float(r["goal_before"]),
                      float(r["goal_after"]), r["accepted"] == "1") for r in rows]


def write_constellation_csv(path, c: Constellation):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONSTELLATION_COLUMNS)
        for k in range(c.sigma.size):
            w.writerow([k, f"{c.bits[k, 0]}{c.bits[k, 1]}",
                        repr(float(c.ideal[k].real)), repr(float(c.ideal[k].imag)),
                        repr(float(c.received[k].real)), repr(float(c.received[k].imag)),
                        repr(float(c.sigma[k]))])


def read_constellation_csv(path) -> Constellation:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    bits = np.array([[int(r["bits"][0]), int(r["bits"][1])] for r in rows], dtype=np.uint8)
    ideal = np.array([complex(float(r["ideal_re"]), float(r["ideal_im"])) for r in rows])
    rx = np.array([complex(float(r["rx_re"]), float(r["rx_im"])) for r in rows])
    sigma = np.array([float(r["sigma_k"]) for r in rows])
    return Constellation(bits.reshape(-1, 2), ideal, rx, sigma)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v) or np.isinf(v):
            return None
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_summary(path, summary: dict):
    text = json.dumps(_jsonable(summary), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")


def load_summary(path) -> dict:
    return json.loads(Path(path).read_text())
