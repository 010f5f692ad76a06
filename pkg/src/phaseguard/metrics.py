"""Evaluation metrics computed from a finished trace.

The protection-efficiency score is a weighted blend of detection speed,
availability and thermal overshoot:

    score = w1*(1 - t_detect/t_detect_max) + w2*availability
            + w3*(1 - overshoot/headroom)

with ``w = (0.4, 0.4, 0.2)`` and ``t_detect_max = 0.25 s`` by default.
``overshoot`` is how far the hottest junction went past its limit and
``headroom`` is the limit minus ambient.  Each term is clamped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .detection import FAST_DETECTOR, detection_latency
from .discharge import NeverReachedSafe, discharge_metrics

DEFAULT_WEIGHTS = (0.4, 0.4, 0.2)
T_DETECT_MAX = 0.25
UNAVAILABLE_MODES = ("Discharging", "SafeState")


class MissingMetrics(KeyError):
    pass


class NotIsolated(RuntimeError):
    pass


@dataclass(frozen=True)
class FaultMetrics:
    fault_class: str | None
    t_start: float
    t_detect_fast: float | None
    t_detect_supervisory: float | None
    t_isolate: float | None
    detected: bool

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class MetricsReport:
    faults: list[FaultMetrics]
    t_discharge: float | None
    e_dissipated: float | None
    peak_thermal: float
    peak_t_res: float
    thermal_overshoot: float
    thermal_headroom: float
    availability: float
    energy_error: float
    efficiency: dict[str, float] = field(default_factory=dict)

    def for_class(self, cls: str) -> FaultMetrics:
        for fm in self.faults:
            if fm.fault_class == cls:
                return fm
        raise MissingMetrics(cls)

    def to_dict(self) -> dict:
        return {
            "faults": [fm.to_dict() for fm in self.faults],
            "t_discharge": self.t_discharge,
            "e_dissipated": self.e_dissipated,
            "peak_thermal": self.peak_thermal,
            "peak_t_res": self.peak_t_res,
            "thermal_overshoot": self.thermal_overshoot,
            "thermal_headroom": self.thermal_headroom,
            "availability": self.availability,
            "energy_error": self.energy_error,
            "efficiency": dict(self.efficiency),
            "efficiency_definition": {
                "formula": "w1*(1 - t_detect_sup/t_detect_max) + w2*availability + w3*(1 - overshoot/headroom)",
                "weights": list(DEFAULT_WEIGHTS),
                "t_detect_max": T_DETECT_MAX,
            },
        }


def availability(trace, power_threshold_fraction: float = 0.6) -> float:
    """Fraction of time the drive delivers at least the threshold fraction of
    reference power, with Discharging and SafeState counted as unavailable."""
    ticks = trace.ticks
    dt = np.asarray(ticks["block_dt"], dtype=float)
    total = dt.sum()
    if total <= 0:
        return 1.0
    power = np.nan_to_num(np.asarray(ticks["power"], dtype=float), nan=-math.inf)
    ok = power >= power_threshold_fraction * trace.calibration.p_reference
    ok &= ~np.isin(ticks["block_mode"], UNAVAILABLE_MODES)
    return float(np.clip(dt[ok].sum() / total, 0.0, 1.0))


def isolation_time(trace) -> list[float]:
    """Per isolation episode, the time from trip to entering Degraded."""
    out = []
    t_iso = None
    for tr in trace.transitions:
        if tr.dst.startswith("Isolating"):
            t_iso = tr.t
        elif tr.dst.startswith("Degraded") and t_iso is not None:
            out.append(tr.t - t_iso)
            t_iso = None
    if t_iso is not None:
        raise NotIsolated(f"isolation started at t={t_iso:.6f} s never completed")
    return out


def _isolation_for(trace, t_start: float) -> float | None:
    t_iso = None
    for tr in trace.transitions:
        if tr.t < t_start - 1e-12:
            continue
        if tr.dst.startswith("Isolating") and t_iso is None:
            t_iso = tr.t
        elif tr.dst.startswith("Degraded") and t_iso is not None:
            return tr.t - t_iso
    return None


def efficiency_score(m: MetricsReport, cls: str, weights=DEFAULT_WEIGHTS, t_detect_max: float = T_DETECT_MAX) -> float:
    fm = m.for_class(cls)
    w1, w2, w3 = weights
    t_det = fm.t_detect_supervisory
    detect = 0.0 if t_det is None else float(np.clip(1.0 - t_det / t_detect_max, 0.0, 1.0))
    avail = float(np.clip(m.availability, 0.0, 1.0))
    thermal = float(np.clip(1.0 - m.thermal_overshoot / m.thermal_headroom, 0.0, 1.0))
    return float(np.clip(w1 * detect + w2 * avail + w3 * thermal, 0.0, 1.0))


def compute_metrics(trace) -> MetricsReport:
    cfg = trace.config
    events = list(cfg.faults)
    fast = detection_latency(events, trace.detections, [FAST_DETECTOR])
    sup_ids = sorted({d.detector_id for d in trace.detections} - {FAST_DETECTOR})
    sup = detection_latency(events, trace.detections, sup_ids)
    faults = []
    for ev, f, s in zip(events, fast, sup):
        faults.append(FaultMetrics(ev.fault_class, ev.t_start, f, s, _isolation_for(trace, ev.t_start),
                                   f is not None or s is not None))

    try:
        dm = discharge_metrics(trace)
        t_dis, e_dis = dm.t_discharge, dm.e_dissipated
    except NeverReachedSafe:
        t_dis = e_dis = None

    tp = cfg.thermal
    peak = float(np.max(trace.ticks["tj_max"]))
    from .engine import energy_audit

    report = MetricsReport(
        faults=faults,
        t_discharge=t_dis,
        e_dissipated=e_dis,
        peak_thermal=peak,
        peak_t_res=float(np.max(trace.ticks["t_res"])),
        thermal_overshoot=max(0.0, peak - tp.t_limit_switch),
        thermal_headroom=tp.t_limit_switch - tp.t_ambient,
        availability=availability(trace),
        energy_error=energy_audit(trace),
    )
    for fm in faults:
        if fm.fault_class is not None and fm.fault_class not in report.efficiency:
            report.efficiency[fm.fault_class] = efficiency_score(report, fm.fault_class)
    return report
