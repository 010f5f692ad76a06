"""Protection state machine.

Short circuits and lost phases are handled by clamping the faulty leg
(active short circuit) and continuing on the healthy legs.  Classes listed in
``shutdown_classes`` open the DC contactor and discharge the link instead.
After the triggering fault clears, the machine passes through ``Recovering``
before it re-enables normal operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .circuit import CircuitParams, Gate
from .detection import OVERCURRENT, OVERVOLTAGE, PHASE_OPEN, SHORT_CIRCUIT, THERMAL, Detection


class IllegalTransition(RuntimeError):
    pass


class TooFewPhases(ValueError):
    pass


@dataclass(frozen=True)
class IsolationSchedule:
    """Isolation actuation delay ``t0 * exp(-lam * t)`` floored at ``t_final``."""

    t0_delay: float = 40.00e-3
    t_final_delay: float = 11.37e-3
    t_final: float = 1.0

    @property
    def lam(self) -> float:
        return math.log(self.t0_delay / self.t_final_delay) / self.t_final


def isolation_delay(t_fault: float, sched: IsolationSchedule = IsolationSchedule()) -> float:
    if t_fault < 0:
        raise ValueError("t_fault must be >= 0")
    return max(sched.t0_delay * math.exp(-sched.lam * t_fault), sched.t_final_delay)


def asc_gate_override(leg: int, n: int | None = None, side: str = "Low") -> dict[int, Gate]:
    """Clamp ``leg`` through one of its switches; the other legs are untouched."""
    if n is not None and not 0 <= leg < n:
        raise ValueError(f"leg {leg} out of range")
    return {leg: Gate.HIGH_ON if side == "High" else Gate.LOW_ON}


def reconfigure_references(healthy_set: Iterable[int], p: CircuitParams) -> np.ndarray:
    """Per-leg modulation amplitudes for degraded operation.

    Surviving legs keep their phase angle and are scaled by ``n/len(healthy)``
    (clipped to 1); isolated legs get 0.
    """
    healthy = sorted(set(healthy_set))
    if len(healthy) < 2:
        raise TooFewPhases(f"{len(healthy)} healthy phase(s) cannot carry the load")
    refs = np.zeros(p.n_phases)
    refs[healthy] = min(p.mod_index * p.n_phases / len(healthy), 1.0)
    return refs


@dataclass(frozen=True)
class FsmConfig:
    enabled: bool = True
    hold_off: float = 50e-3
    schedule: IsolationSchedule = field(default_factory=IsolationSchedule)
    # "auto" clamps through the switch that is already conducting in the fault.
    asc_side: str = "auto"
    isolate_classes: tuple[str, ...] = (SHORT_CIRCUIT, PHASE_OPEN)
    shutdown_classes: tuple[str, ...] = (OVERVOLTAGE, OVERCURRENT, THERMAL)
    auto_restart_classes: tuple[str, ...] = (OVERVOLTAGE, THERMAL)
    thermal_restart_margin: float = 10.0
    operator_stop: float | None = None

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["schedule"] = {f.name: getattr(self.schedule, f.name) for f in fields(self.schedule)}
        for key in ("isolate_classes", "shutdown_classes", "auto_restart_classes"):
            d[key] = list(d[key])
        return d


# -- states --------------------------------------------------------------------
# ``via`` lists transient states passed through during the step that produced
# the state, so that the engine can log every transition.


@dataclass(frozen=True)
class Normal:
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class Detected:
    fault: str
    t: float
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class Isolating:
    leg: int
    t_started: float
    delay: float
    isolated: tuple[tuple[int, str, str], ...]  # (leg, side, class)
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class Degraded:
    healthy_set: frozenset[int]
    isolated: tuple[tuple[int, str, str], ...]
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class Discharging:
    t_started: float
    trigger: str
    leg: int = -1
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class SafeState:
    trigger: str
    leg: int = -1
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class Recovering:
    t_started: float
    duration: float
    via: tuple[str, ...] = ()


ProtectionState = Normal | Detected | Isolating | Degraded | Discharging | SafeState | Recovering

LEGAL = {
    "Normal": {"Detected", "Discharging"},
    "Detected": {"Isolating", "Normal", "Discharging"},
    "Isolating": {"Degraded", "Discharging"},
    "Degraded": {"Isolating", "Recovering", "Discharging"},
    "Discharging": {"SafeState", "Recovering"},
    "SafeState": {"Recovering"},
    "Recovering": {"Normal", "Detected", "Isolating", "Discharging"},
}


def mode(state: ProtectionState) -> str:
    return type(state).__name__


def describe(state: ProtectionState) -> str:
    if isinstance(state, Isolating):
        return f"Isolating[{state.leg}]"
    if isinstance(state, Degraded):
        return "Degraded[" + "".join(str(k) for k in sorted(state.healthy_set)) + "]"
    if isinstance(state, Detected):
        return f"Detected[{state.fault}]"
    return mode(state)


@dataclass(frozen=True)
class FsmMeasurements:
    v_dc: float
    tj_max: float
    t_limit_switch: float
    # (class, leg) of every fault currently present in the plant.
    active_faults: tuple[tuple[str | None, int], ...] = ()
    attack_active: bool = False
    v_safe: float = 60.0


def _cleared(meas: FsmMeasurements, fault: str, leg: int) -> bool:
    if meas.attack_active:
        return False
    for cls, f_leg in meas.active_faults:
        if cls == fault and (leg < 0 or f_leg < 0 or f_leg == leg):
            return False
    return True


def _asc_side(det: Detection, cfg: FsmConfig) -> str:
    if cfg.asc_side in ("High", "Low"):
        return cfg.asc_side
    return "High" if det.switch == "High" else "Low"


def gate_override(state: ProtectionState, n: int) -> dict[int, Gate]:
    if isinstance(state, (Isolating, Degraded)):
        out = {}
        for leg, side, _ in state.isolated:
            out.update(asc_gate_override(leg, n, side))
        return out
    if isinstance(state, (Discharging, SafeState)):
        return {k: Gate.BOTH_OFF for k in range(n)}
    return {}


def contactor_closed(state: ProtectionState) -> bool:
    return not isinstance(state, (Discharging, SafeState))


def _check(path: Sequence[str]):
    for a, b in zip(path, path[1:]):
        if b not in LEGAL[a]:
            raise IllegalTransition(f"{a} -> {b}")


def fsm_step(state: ProtectionState, detections: Sequence[Detection], meas: FsmMeasurements,
             t: float, cfg: FsmConfig, n: int) -> tuple[ProtectionState, dict[int, Gate], bool]:
    """Advance the machine by one control tick.

    Returns the new state, the per-leg gate override and the discharge
    command.  The new state's ``via`` field names any states passed through.
    """
    new = _next(state, detections, meas, t, cfg, n)
    if new is not state:
        _check([mode(state), *new.via, mode(new)])
    return new, gate_override(new, n), isinstance(new, Discharging)


def _next(state, detections, meas, t, cfg, n):
    if not cfg.enabled:
        return state

    def shutdown(trigger, leg, via=()):
        return Discharging(t, trigger, leg, via=tuple(via))

    if cfg.operator_stop is not None and t >= cfg.operator_stop and not isinstance(state, (Discharging, SafeState)):
        return shutdown("OperatorStop", -1, ["Detected"] if isinstance(state, Normal) else [])

    if not isinstance(state, (Discharging, SafeState)):
        for det in detections:
            if det.kind in cfg.shutdown_classes:
                via = ["Detected"] if isinstance(state, Normal) else []
                return shutdown(det.kind, det.leg, via)

    if isinstance(state, (Normal, Recovering)):
        for det in detections:
            if det.kind in cfg.isolate_classes:
                if det.leg < 0:
                    # Not localised to a leg: logged, nothing to isolate.
                    if isinstance(state, Normal):
                        return Normal(via=("Detected",))
                    continue
                iso = ((det.leg, _asc_side(det, cfg), det.kind),)
                return Isolating(det.leg, t, isolation_delay(t, cfg.schedule), iso,
                                 via=("Detected",) if isinstance(state, Normal) else ())
            return Detected(det.kind, t, via=())
        if isinstance(state, Recovering) and t >= state.t_started + state.duration - 1e-12:
            return Normal()
        return state

    if isinstance(state, Detected):
        if _cleared(meas, state.fault, -1):
            return Normal()
        return state

    if isinstance(state, Isolating):
        if t >= state.t_started + state.delay - 1e-12:
            isolated_legs = {leg for leg, _, _ in state.isolated}
            healthy = frozenset(range(n)) - isolated_legs
            if len(healthy) < 2:
                return shutdown(state.isolated[-1][2], state.leg)
            return Degraded(healthy, state.isolated)
        return state

    if isinstance(state, Degraded):
        for det in detections:
            if det.kind in cfg.isolate_classes and det.leg >= 0 and det.leg in state.healthy_set:
                iso = state.isolated + ((det.leg, _asc_side(det, cfg), det.kind),)
                return Isolating(det.leg, t, isolation_delay(t, cfg.schedule), iso)
        if all(_cleared(meas, cls, leg) for leg, _, cls in state.isolated):
            return Recovering(t, isolation_delay(t, cfg.schedule) + cfg.hold_off)
        return state

    if isinstance(state, (Discharging, SafeState)):
        restart = (
            state.trigger in cfg.auto_restart_classes
            and _cleared(meas, state.trigger, state.leg)
            and (state.trigger != THERMAL or meas.tj_max < meas.t_limit_switch - cfg.thermal_restart_margin)
        )
        if restart:
            return Recovering(t, isolation_delay(t, cfg.schedule) + cfg.hold_off)
        if isinstance(state, Discharging) and meas.v_dc <= meas.v_safe:
            return SafeState(state.trigger, state.leg)
        return state

    raise IllegalTransition(f"unknown state {state!r}")
