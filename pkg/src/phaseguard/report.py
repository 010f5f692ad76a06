"""Run artifacts: ``trace.csv``, ``events.csv`` and ``summary.json``.

The summary is self-contained: it echoes the fully resolved configuration and
embeds a decimated profile, so plots can be rebuilt from it alone.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .discharge import NeverReachedSafe, discharge_metrics
from .engine import Trace, write_event_csv, write_trace_csv
from .metrics import MetricsReport, isolation_time, NotIsolated

SUMMARY_VERSION = 1
PROFILE_POINTS = 2000


def _latency(trace: Trace, det) -> tuple[int | None, float | None]:
    best = None
    for idx, ev in enumerate(trace.config.faults):
        if ev.fault_class == det.kind and ev.t_start <= det.t_trip + 1e-12:
            if best is None or ev.t_start >= trace.config.faults[best].t_start:
                best = idx
    if best is None:
        return None, None
    return best, max(0.0, det.t_trip - trace.config.faults[best].t_start)


def _profile(trace: Trace) -> dict:
    ticks = trace.ticks
    n = len(ticks["t"])
    stride = max(1, math.ceil(n / PROFILE_POINTS))
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    c_dc = trace.config.circuit.c_dc
    v = np.asarray(ticks["v_dc"], dtype=float)
    return {
        "t": ticks["t"][idx].tolist(),
        "v_dc": v[idx].tolist(),
        "v_meas": np.asarray(ticks["v_meas"], dtype=float)[idx].tolist(),
        "tj_max": ticks["tj_max"][idx].tolist(),
        "t_res": ticks["t_res"][idx].tolist(),
        "e_cap": (0.5 * c_dc * v[idx] ** 2).tolist(),
        "mode": ticks["mode"][idx].tolist(),
    }


def build_summary(trace: Trace, report: MetricsReport) -> dict:
    dets = []
    for det in sorted(trace.detections, key=lambda d: (d.t_trip, d.detector_id)):
        event, latency = _latency(trace, det)
        dets.append({**det.to_dict(), "event": event, "latency_s": latency})
    try:
        discharge = discharge_metrics(trace).to_dict()
    except NeverReachedSafe:
        discharge = None
    try:
        iso = isolation_time(trace)
    except NotIsolated:
        iso = None
    return {
        "summary_version": SUMMARY_VERSION,
        "scenario": trace.config.name,
        "config": trace.config.to_dict(),
        "calibration": trace.calibration.to_dict(),
        "detections": dets,
        "transitions": [{"t": tr.t, "from": tr.src, "to": tr.dst} for tr in trace.transitions],
        "isolation_times_s": iso,
        "metrics": report.to_dict(),
        "discharge": discharge,
        "energy": {**trace.energy, "audit_error": report.energy_error},
        "commanded_shoot_through_steps": trace.commanded_shoot_through,
        "profile": _profile(trace),
    }


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_csv(writer, trace: Trace, path: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        writer(trace, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_run(trace: Trace, report: MetricsReport, out_dir: Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = build_summary(trace, report)
    _atomic_csv(write_trace_csv, trace, out_dir / "trace.csv")
    if trace.event_windows:
        _atomic_csv(write_event_csv, trace, out_dir / "events.csv")
    atomic_write_text(out_dir / "summary.json", dumps(summary))
    return summary
