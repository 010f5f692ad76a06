"""Hybrid DC-link discharge: permanent bleed resistor plus a switched branch.

The switched branch is driven bang-bang on the discharge resistor
temperature so that it never cooks itself; the bleed resistor alone sets the
slow fallback time constant ``r_bleed * c_dc``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .circuit import CircuitParams


class NeverReachedSafe(RuntimeError):
    pass


@dataclass(frozen=True)
class DischargeConfig:
    r_active: float = 50.0
    v_safe: float = 60.0
    t_target: float = 5.0
    hysteresis: float = 10.0
    active_enabled: bool = True

    def __post_init__(self):
        if not self.r_active > 0:
            raise ValueError("r_active must be > 0")
        if not self.v_safe > 0 or not self.hysteresis > 0:
            raise ValueError("v_safe and hysteresis must be > 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def passive_discharge_tau(p: CircuitParams) -> float:
    return p.r_bleed * p.c_dc


def active_discharge_command(v_dc: float, t_res: float, cfg: DischargeConfig, prev_cmd: bool,
                             t_limit_res: float = 120.0) -> bool:
    """Hysteretic on/off decision for the switched discharge branch."""
    if not cfg.active_enabled or v_dc <= cfg.v_safe:
        return False
    if t_res >= t_limit_res:
        return False
    if prev_cmd:
        return True
    return t_res <= t_limit_res - cfg.hysteresis


@dataclass(frozen=True)
class DischargeMetrics:
    t_start: float
    t_discharge: float
    e_dissipated: float
    peak_t_res: float

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def discharge_metrics(trace, v_safe: float | None = None) -> DischargeMetrics:
    """Discharge time, dissipated energy and peak resistor temperature.

    The interval starts at the first ``Discharging`` tick and ends when the
    link first reaches ``v_safe``.
    """
    v_safe = trace.config.discharge.v_safe if v_safe is None else v_safe
    ticks = trace.ticks
    modes = ticks["mode"]
    idx = np.flatnonzero(modes == "Discharging")
    if idx.size == 0:
        raise NeverReachedSafe("trace has no Discharging interval")
    start = int(idx[0])
    v = ticks["v_dc"]
    below = np.flatnonzero(v[start:] <= v_safe)
    if below.size == 0:
        raise NeverReachedSafe(f"v_dc never fell to {v_safe} V within the horizon")
    end = start + int(below[0])
    t = ticks["t"]
    e_bleed = ticks["e_bleed"]
    e_active = ticks["e_active"]
    e = (e_bleed[end] - e_bleed[start]) + (e_active[end] - e_active[start])
    return DischargeMetrics(
        t_start=float(t[start]),
        t_discharge=float(t[end] - t[start]),
        e_dissipated=float(e),
        peak_t_res=float(ticks["t_res"][start:end + 1].max()),
    )
