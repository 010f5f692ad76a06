"""SVG figures rebuilt from run summaries only.

Output bytes are deterministic: the SVG id salt is fixed and the creation
date is omitted.
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .detection import FAULT_CLASSES, OVERCURRENT, OVERVOLTAGE, SHORT_CIRCUIT, THERMAL  # noqa: E402

FIGURES = (
    "fig4_sim_vs_measured.svg",
    "fig5_detection_times.svg",
    "fig6_isolation_time.svg",
    "fig7_discharge.svg",
    "fig8_efficiency.svg",
)
CLASS_LABELS = {SHORT_CIRCUIT: "Short circuit", OVERCURRENT: "Overcurrent",
                OVERVOLTAGE: "Overvoltage", THERMAL: "Thermal"}


class PlotInputError(ValueError):
    pass


def _save(fig, path: Path) -> None:
    buf = io.StringIO()
    with plt.rc_context({"svg.hashsalt": "phaseguard", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    Path(path).write_text(buf.getvalue())


# Scenario used for each class when several summaries carry that class.
PREFERRED = {SHORT_CIRCUIT: "short_circuit", OVERCURRENT: "overcurrent",
             OVERVOLTAGE: "overvoltage", THERMAL: "thermal"}


def _class_metrics(summaries: Sequence[dict]) -> dict[str, dict]:
    """One single-fault scenario per fault class, preferring the suite names."""
    out = {}
    ordered = sorted(summaries, key=lambda s: s["scenario"] not in PREFERRED.values())
    for s in ordered:
        faults = s["metrics"]["faults"]
        classes = {f["fault_class"] for f in faults}
        if len(faults) != 1 or None in classes:
            continue
        cls = faults[0]["fault_class"]
        if cls in FAULT_CLASSES and cls not in out:
            out[cls] = {"fault": faults[0], "efficiency": s["metrics"]["efficiency"].get(cls)}
    return out


def fig_sim_vs_measured(summaries, path) -> bool:
    cands = [s for s in summaries if s["config"]["engine"]["noise"]["enabled"]] or list(summaries)
    if not cands:
        return False
    s = cands[0]
    p = s["profile"]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(p["t"], p["v_meas"], lw=0.6, color="tab:orange", label="measured (with noise)")
    ax.plot(p["t"], p["v_dc"], lw=1.4, color="tab:blue", label="simulated")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("DC-link voltage [V]")
    ax.set_title(f"Simulated vs measured link voltage ({s['scenario']})")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    _save(fig, path)
    return True


def fig_detection_times(summaries, path) -> bool:
    cm = _class_metrics(summaries)
    classes = [c for c in FAULT_CLASSES if c in cm and cm[c]["fault"]["t_detect_supervisory"] is not None]
    if not classes:
        return False
    values = [cm[c]["fault"]["t_detect_supervisory"] for c in classes]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    bars = ax.bar([CLASS_LABELS[c] for c in classes], values, color="tab:blue")
    for bar, v in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, v, f"{v:.3f} s", ha="center", va="bottom")
    fast = cm.get(SHORT_CIRCUIT, {}).get("fault", {}).get("t_detect_fast")
    if fast is not None:
        ax.set_title(f"Supervisory detection time (fast short-circuit trip: {fast * 1e6:.1f} us)")
    else:
        ax.set_title("Supervisory detection time")
    ax.set_ylabel("detection time [s]")
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)
    return True


def fig_isolation(summaries, path) -> bool:
    pts = []
    for s in summaries:
        for f in s["metrics"]["faults"]:
            if f["t_isolate"] is not None:
                pts.append((f["t_start"], f["t_isolate"]))
    if not pts:
        return False
    pts = sorted(set(pts))
    sched = summaries[0]["config"]["fsm"]["schedule"]
    lam = math.log(sched["t0_delay"] / sched["t_final_delay"]) / sched["t_final"]
    t = np.linspace(0.0, max(1.0, pts[-1][0]), 200)
    curve = np.maximum(sched["t0_delay"] * np.exp(-lam * t), sched["t_final_delay"])
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(t, curve * 1e3, color="tab:gray", label="schedule")
    ax.plot([a for a, _ in pts], [b * 1e3 for _, b in pts], "o", color="tab:red", label="simulated")
    ax.set_xlabel("fault start time [s]")
    ax.set_ylabel("isolation time [ms]")
    ax.set_title("Isolation time vs fault time")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    _save(fig, path)
    return True


def fig_discharge(summaries, path) -> bool:
    cands = [s for s in summaries if s.get("discharge") and s["config"]["discharge"]["active_enabled"]]
    cands = cands or [s for s in summaries if s.get("discharge")]
    if not cands:
        return False
    s = cands[0]
    p = s["profile"]
    t0 = s["discharge"]["t_start"]
    t1 = t0 + s["discharge"]["t_discharge"]
    t = np.asarray(p["t"])
    sel = (t >= t0) & (t <= t1 + 0.1 * max(t1 - t0, 1e-3))
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(t[sel], np.asarray(p["e_cap"])[sel], color="tab:blue", label="capacitor energy")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("stored energy [J]", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(t[sel], np.asarray(p["t_res"])[sel], color="tab:red", lw=0.8, label="resistor temperature")
    ax2.set_ylabel("discharge resistor [degC]", color="tab:red")
    ax.set_title(f"Discharge energy and thermal stress ({s['scenario']})")
    ax.grid(alpha=0.3)
    _save(fig, path)
    return True


def fig_efficiency(summaries, path) -> bool:
    cm = _class_metrics(summaries)
    classes = [c for c in FAULT_CLASSES if c in cm and cm[c]["efficiency"] is not None]
    if not classes:
        return False
    values = [cm[c]["efficiency"] for c in classes]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    bars = ax.bar([CLASS_LABELS[c] for c in classes], values, color="tab:green")
    for bar, v in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, v, f"{v:.3f}", ha="center", va="bottom")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("efficiency score")
    ax.set_title("Protection efficiency by fault class")
    ax.grid(axis="y", alpha=0.3)
    _save(fig, path)
    return True


_BUILDERS = (fig_sim_vs_measured, fig_detection_times, fig_isolation, fig_discharge, fig_efficiency)


def validate_summary(s) -> None:
    if not isinstance(s, dict):
        raise PlotInputError("summary must be a JSON object")
    for key in ("scenario", "config", "metrics", "profile"):
        if key not in s:
            raise PlotInputError(f"summary is missing {key!r}")
    for key in ("t", "v_dc", "v_meas", "t_res", "e_cap"):
        if key not in s["profile"]:
            raise PlotInputError(f"summary profile is missing {key!r}")


def render_all(summaries: Sequence[dict], out_dir) -> list[str]:
    """Write every figure the summaries have data for; returns file names."""
    for s in summaries:
        validate_summary(s)
    summaries = sorted(summaries, key=lambda s: (s["scenario"], json.dumps(s["config"]["faults"], sort_keys=True)))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, build in zip(FIGURES, _BUILDERS):
        try:
            if build(summaries, out_dir / name):
                written.append(name)
        except (KeyError, TypeError, ValueError) as exc:
            raise PlotInputError(f"{name}: malformed summary ({exc})") from None
    return written
