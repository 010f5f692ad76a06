"""Fault events and their application to the plant.

Physical fault kinds perturb the plant itself; ``SensorSpoof`` and
``GateInjection`` model attacks on the measurement chain and on the gate
command path respectively.  An event is active on ``[t_start, t_clear)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np
from numba import njit

from .circuit import GATE_BY_NAME, GATE_NAMES, CircuitParams, Gate

NEVER = math.inf


@dataclass(frozen=True)
class SwitchShortCircuit:
    leg: int
    which: str = "Low"  # "High" or "Low"


@dataclass(frozen=True)
class PhaseOpen:
    leg: int


@dataclass(frozen=True)
class Overcurrent:
    load_r_drop_factor: float


@dataclass(frozen=True)
class Overvoltage:
    source_surge_volts: float


@dataclass(frozen=True)
class ThermalOverload:
    r_th_multiplier: float


@dataclass(frozen=True)
class SensorSpoof:
    channel: str  # "v_dc", "i<k>" or "t_junction"
    offset: float


@dataclass(frozen=True)
class GateInjection:
    leg: int
    forced: Gate


FaultKind = Union[
    SwitchShortCircuit, PhaseOpen, Overcurrent, Overvoltage, ThermalOverload, SensorSpoof, GateInjection
]
KINDS = {
    cls.__name__: cls
    for cls in (SwitchShortCircuit, PhaseOpen, Overcurrent, Overvoltage, ThermalOverload, SensorSpoof, GateInjection)
}


@dataclass(frozen=True)
class FaultEvent:
    kind: FaultKind
    t_start: float
    t_clear: float = NEVER

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_clear

    @property
    def leg(self) -> int | None:
        return getattr(self.kind, "leg", None)

    @property
    def fault_class(self) -> str | None:
        return fault_class(self.kind)

    def to_dict(self) -> dict:
        d = {"kind": type(self.kind).__name__}
        for key, value in vars(self.kind).items():
            d[key] = GATE_NAMES[value] if isinstance(value, Gate) else value
        d["t_start"] = self.t_start
        d["t_clear"] = None if math.isinf(self.t_clear) else self.t_clear
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FaultEvent":
        d = dict(d)
        try:
            kind_cls = KINDS[d.pop("kind")]
        except KeyError as exc:
            raise ValueError(f"unknown fault kind {exc.args[0]!r}") from None
        t_start = float(d.pop("t_start"))
        t_clear = d.pop("t_clear", None)
        t_clear = NEVER if t_clear is None else float(t_clear)
        if kind_cls is GateInjection and isinstance(d.get("forced"), str):
            if d["forced"] not in GATE_BY_NAME:
                raise ValueError(f"unknown gate state {d['forced']!r}")
            d["forced"] = GATE_BY_NAME[d["forced"]]
        try:
            kind = kind_cls(**d)
        except TypeError as exc:
            raise ValueError(f"{kind_cls.__name__}: {exc}") from None
        return cls(kind, t_start, t_clear)


def fault_class(kind: FaultKind) -> str | None:
    """Detector class a fault should be reported under, if any."""
    if isinstance(kind, SwitchShortCircuit):
        return "ShortCircuit"
    if isinstance(kind, PhaseOpen):
        return "PhaseOpen"
    if isinstance(kind, Overcurrent):
        return "Overcurrent"
    if isinstance(kind, Overvoltage):
        return "Overvoltage"
    if isinstance(kind, ThermalOverload):
        return "Thermal"
    if isinstance(kind, GateInjection):
        if kind.forced == Gate.BOTH_ON:
            return "ShortCircuit"
        if kind.forced == Gate.BOTH_OFF:
            return "PhaseOpen"
    return None


_CURRENT_CHANNEL = re.compile(r"^i(\d+)$")


def _overlap(a: FaultEvent, b: FaultEvent) -> bool:
    return a.t_start < b.t_clear and b.t_start < a.t_clear


def validate_scenario(events: Sequence[FaultEvent], p: CircuitParams) -> list[str]:
    """Return a list of human-readable problems; empty means the scenario is valid."""
    errors = []
    for idx, ev in enumerate(events):
        tag = f"fault[{idx}] {type(ev.kind).__name__}"
        k = ev.kind
        if not (math.isfinite(ev.t_start) and ev.t_start >= 0):
            errors.append(f"{tag}: t_start must be finite and >= 0")
        if ev.t_clear <= ev.t_start:
            errors.append(f"{tag}: t_clear must be after t_start")
        if ev.leg is not None and not (isinstance(ev.leg, int) and 0 <= ev.leg < p.n_phases):
            errors.append(f"{tag}: leg out of range ({ev.leg}, n_phases={p.n_phases})")
        if isinstance(k, SwitchShortCircuit) and k.which not in ("High", "Low"):
            errors.append(f"{tag}: which must be 'High' or 'Low'")
        if isinstance(k, Overcurrent) and not k.load_r_drop_factor > 0:
            errors.append(f"{tag}: load_r_drop_factor must be > 0")
        if isinstance(k, ThermalOverload) and not k.r_th_multiplier > 0:
            errors.append(f"{tag}: r_th_multiplier must be > 0")
        if isinstance(k, Overvoltage) and not math.isfinite(k.source_surge_volts):
            errors.append(f"{tag}: source_surge_volts must be finite")
        if isinstance(k, GateInjection) and not isinstance(k.forced, Gate):
            errors.append(f"{tag}: forced must be a gate state")
        if isinstance(k, SensorSpoof):
            m = _CURRENT_CHANNEL.match(k.channel)
            if k.channel not in ("v_dc", "t_junction") and not (m and int(m.group(1)) < p.n_phases):
                errors.append(f"{tag}: unknown measurement channel {k.channel!r}")
            if not math.isfinite(k.offset):
                errors.append(f"{tag}: offset must be finite")
    for a_idx, a in enumerate(events):
        for b_idx in range(a_idx + 1, len(events)):
            b = events[b_idx]
            if not _overlap(a, b):
                continue
            if a.leg is not None and a.leg == b.leg:
                errors.append(
                    f"fault[{a_idx}] and fault[{b_idx}]: contradictory overlapping faults on leg {a.leg}"
                )
            elif a.fault_class is not None and a.fault_class == b.fault_class:
                errors.append(
                    f"fault[{a_idx}] and fault[{b_idx}]: overlapping {a.fault_class} faults cannot be told apart"
                )
    return errors


# -- application -------------------------------------------------------------


@njit(cache=True)
def effective_leg(cmd, forced, open_leg, high_short, low_short):
    """Leg state after gate injection, gate-driver loss and shorted switches."""
    g = cmd
    if forced >= 0:
        g = forced
    if open_leg:
        g = 2
    high = g == 1 or g == 3 or high_short
    low = g == 0 or g == 3 or low_short
    if high and low:
        return 3
    if high:
        return 1
    if low:
        return 0
    return 2


@dataclass(frozen=True)
class Measurements:
    v_dc: float
    i_phase: np.ndarray
    t_junction: np.ndarray


def active_events(t: float, events: Sequence[FaultEvent]) -> list[FaultEvent]:
    return [ev for ev in events if ev.active(t)]


def apply_active_faults(
    t: float,
    events: Sequence[FaultEvent],
    base: CircuitParams,
    gates: Sequence[int],
    measurements: Measurements,
) -> tuple[CircuitParams, tuple[Gate, ...], Measurements]:
    """Effective plant parameters, leg states and sensor readings at ``t``.

    Spoofing only touches the returned measurement copy.  Thermal overload
    is exposed separately through :func:`r_th_multiplier`.
    """
    active = active_events(t, events)
    n = base.n_phases
    surge = sum(ev.kind.source_surge_volts for ev in active if isinstance(ev.kind, Overvoltage))
    r_div = math.prod(ev.kind.load_r_drop_factor for ev in active if isinstance(ev.kind, Overcurrent))
    params = base
    if surge or r_div != 1.0:
        params = replace(base, v_source=base.v_source + surge, r_load=base.r_load / r_div)

    forced = [-1] * n
    open_leg = [False] * n
    high_short = [False] * n
    low_short = [False] * n
    for ev in active:
        k = ev.kind
        if isinstance(k, GateInjection):
            forced[k.leg] = int(k.forced)
        elif isinstance(k, PhaseOpen):
            open_leg[k.leg] = True
        elif isinstance(k, SwitchShortCircuit):
            (high_short if k.which == "High" else low_short)[k.leg] = True
    eff = tuple(
        Gate(effective_leg(int(gates[j]), forced[j], open_leg[j], high_short[j], low_short[j])) for j in range(n)
    )

    v_dc = measurements.v_dc
    i_meas = np.array(measurements.i_phase, dtype=float)
    t_j = np.array(measurements.t_junction, dtype=float)
    for ev in active:
        k = ev.kind
        if isinstance(k, SensorSpoof):
            if k.channel == "v_dc":
                v_dc += k.offset
            elif k.channel == "t_junction":
                t_j = t_j + k.offset
            else:
                i_meas[int(k.channel[1:])] += k.offset
    return params, eff, Measurements(v_dc, i_meas, t_j)


def r_th_multiplier(t: float, events: Sequence[FaultEvent]) -> float:
    return math.prod(ev.kind.r_th_multiplier for ev in active_events(t, events) if isinstance(ev.kind, ThermalOverload))
