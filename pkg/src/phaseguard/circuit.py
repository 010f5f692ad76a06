"""Electrical model of an N-phase two-level inverter.

The plant is a stiff DC source behind ``r_source`` feeding a DC-link
capacitor with a passive bleed resistor, an N-leg inverter built from ideal
switches with on-resistance ``r_on`` and a star-connected RL load with a
sinusoidal back-EMF per phase.  Phase ``k`` is displaced by ``2*pi*k/n``.

Leg states are small integers so that the compiled kernel can use them
directly (see :class:`Gate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import IntEnum
from typing import Sequence

import numpy as np
from numba import njit


class Gate(IntEnum):
    """Command (or effective state) of one inverter leg."""

    LOW_ON = 0
    HIGH_ON = 1
    BOTH_OFF = 2
    # Only legal as an injected fault state; normal modulation never emits it.
    BOTH_ON = 3


GATE_NAMES = {
    Gate.LOW_ON: "LowOn",
    Gate.HIGH_ON: "HighOn",
    Gate.BOTH_OFF: "BothOff",
    Gate.BOTH_ON: "BothOn",
}
GATE_BY_NAME = {v: k for k, v in GATE_NAMES.items()}

@dataclass(frozen=True)
class CircuitParams:
    n_phases: int = 5
    v_source: float = 400.0
    r_source: float = 50e-3
    c_dc: float = 500e-6
    esr_dc: float = 10e-3
    r_on: float = 5e-3
    r_load: float = 0.5
    l_load: float = 200e-6
    emf_amplitude: float = 100.0
    emf_freq: float = 100.0
    r_bleed: float = 10e3
    f_pwm: float = 10e3
    mod_index: float = 0.8
    # Switching energy per commutation, booked on the switch turning on.  A
    # thermal source term only: the electrical model keeps ideal switches.
    e_switch: float = 8e-3

    def __post_init__(self):
        if int(self.n_phases) != self.n_phases or self.n_phases < 3:
            raise ValueError(f"n_phases must be an integer >= 3, got {self.n_phases}")
        for name in ("r_source", "c_dc", "esr_dc", "r_on", "r_load", "l_load", "r_bleed", "f_pwm"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if not 0.0 <= self.mod_index <= 1.0:
            raise ValueError(f"mod_index must lie in [0, 1], got {self.mod_index}")
        if self.emf_amplitude < 0 or self.emf_freq < 0:
            raise ValueError("emf_amplitude and emf_freq must be non-negative")
        if self.e_switch < 0:
            raise ValueError("e_switch must be non-negative")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class PlantState:
    t: float
    i_phase: np.ndarray
    v_dc: float
    t_junction: np.ndarray = field(default=None)
    t_discharge_resistor: float = 25.0

    def __post_init__(self):
        self.i_phase = np.asarray(self.i_phase, dtype=float)
        if self.t_junction is None:
            self.t_junction = np.full(2 * len(self.i_phase), 25.0)
        else:
            self.t_junction = np.asarray(self.t_junction, dtype=float)

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.i_phase).all()
            and np.isfinite(self.t_junction).all()
            and math.isfinite(self.v_dc)
            and math.isfinite(self.t_discharge_resistor)
            and math.isfinite(self.t)
        )


# -- compiled primitives shared with the simulation kernel -------------------


@njit(cache=True)
def carrier(t, f_pwm):
    """Symmetric triangle in [-1, 1]; -1 at every period boundary."""
    phase = (t * f_pwm) % 1.0
    return 1.0 - 4.0 * abs(phase - 0.5)


@njit(cache=True)
def leg_reference(t, k, n, amplitude, freq):
    return amplitude * math.sin(2.0 * math.pi * freq * t - 2.0 * math.pi * k / n)


@njit(cache=True)
def emf(t, k, n, amplitude, freq):
    return amplitude * math.sin(2.0 * math.pi * freq * t - 2.0 * math.pi * k / n)


@njit(cache=True)
def _pwm_into(out, t, refs, freq, f_pwm):
    n = out.shape[0]
    c = carrier(t, f_pwm)
    for k in range(n):
        r = leg_reference(t, k, n, refs[k], freq)
        out[k] = 1 if r > c else 0


# -- public, numpy-level operations ------------------------------------------


def _as_codes(gates: Sequence[int]) -> np.ndarray:
    return np.asarray([int(g) for g in gates], dtype=np.int64)


def pwm_gate_commands(t: float, p: CircuitParams, refs: Sequence[float] | None = None) -> tuple[Gate, ...]:
    """Sine-triangle modulation at time ``t``.

    ``refs`` are per-leg reference amplitudes and default to ``mod_index`` on
    every leg.  Every leg is either ``HIGH_ON`` or ``LOW_ON``.
    """
    if refs is None:
        refs = np.full(p.n_phases, p.mod_index)
    out = np.zeros(p.n_phases, dtype=np.int64)
    _pwm_into(out, float(t), np.asarray(refs, dtype=float), float(p.emf_freq), float(p.f_pwm))
    return tuple(Gate(int(g)) for g in out)


def leg_level(gate: int) -> float:
    """Terminal potential of a conducting leg as a fraction of v_dc."""
    if gate == Gate.HIGH_ON:
        return 1.0
    if gate == Gate.LOW_ON:
        return 0.0
    if gate == Gate.BOTH_ON:
        return 0.5
    return math.nan


def phase_voltages(gates: Sequence[int], v_dc: float, n: int) -> np.ndarray:
    """Load-neutral phase voltages; open (``BOTH_OFF``) phases come back as NaN."""
    codes = _as_codes(gates)
    if len(codes) != n:
        raise ValueError(f"expected {n} gate entries, got {len(codes)}")
    b = np.array([leg_level(g) for g in codes])
    conducting = ~np.isnan(b)
    out = np.full(n, np.nan)
    if conducting.any():
        out[conducting] = v_dc * (b[conducting] - b[conducting].mean())
    return out


def emf_vector(t: float, p: CircuitParams) -> np.ndarray:
    k = np.arange(p.n_phases)
    return p.emf_amplitude * np.sin(2 * np.pi * p.emf_freq * t - 2 * np.pi * k / p.n_phases)


def shoot_through_resistance(p: CircuitParams) -> float:
    return 2.0 * p.r_on + p.esr_dc


def electrical_derivatives(
    state: PlantState,
    gates: Sequence[int],
    p: CircuitParams,
    i_discharge: float = 0.0,
    isolated: Sequence[bool] | None = None,
    source_connected: bool = True,
) -> np.ndarray:
    """Time derivatives ``(di_0/dt, ..., di_{n-1}/dt, dv_dc/dt)``.

    ``isolated`` marks legs held in active short circuit: their winding
    freewheels through the clamped switch and is decoupled from the star
    point.  An open leg carrying current freewheels through the body diode
    selected by the current sign (low diode for positive current) and leaves
    the star point once its current is zero.
    """
    n = p.n_phases
    codes = _as_codes(gates)
    iso = np.zeros(n, dtype=bool) if isolated is None else np.asarray(isolated, dtype=bool)
    i = state.i_phase
    v = state.v_dc
    e = emf_vector(state.t, p)
    r_phase = p.r_load + p.r_on

    b = np.array([leg_level(g) for g in codes])
    diode = np.isnan(b) & ~iso & (i != 0.0)
    b[diode] = np.where(i[diode] > 0.0, 0.0, 1.0)
    star = ~np.isnan(b) & ~iso
    di = np.zeros(n)
    if star.any():
        # phase currents sum to zero: the star legs absorb the isolated windings' decay
        drive = v * b[star] - e[star]
        v_neutral = (drive.sum() - r_phase * (i[star].sum() + i[iso].sum())) / star.sum()
        di[star] = (drive - v_neutral - r_phase * i[star]) / p.l_load
    di[iso] = -r_phase * i[iso] / p.l_load

    i_inverter = float(np.sum(b[star] * i[star]))
    n_short = int(np.sum((codes == Gate.BOTH_ON) & ~iso))
    i_src = (p.v_source - v) / p.r_source if source_connected else 0.0
    dv = (i_src - i_inverter - v / p.r_bleed - n_short * v / shoot_through_resistance(p) - i_discharge) / p.c_dc
    return np.append(di, dv)


def conduction_losses(state: PlantState, gates: Sequence[int], p: CircuitParams) -> np.ndarray:
    """Conduction loss per switch, ordered ``[high_0, low_0, high_1, low_1, ...]``.

    In a shoot-through leg both devices carry the DC-link short current plus
    half of the phase current each.
    """
    codes = _as_codes(gates)
    losses = np.zeros(2 * p.n_phases)
    for k, g in enumerate(codes):
        ik = state.i_phase[k]
        if g == Gate.HIGH_ON:
            losses[2 * k] = p.r_on * ik * ik
        elif g == Gate.LOW_ON:
            losses[2 * k + 1] = p.r_on * ik * ik
        elif g == Gate.BOTH_ON:
            i_st = state.v_dc / shoot_through_resistance(p)
            losses[2 * k] = p.r_on * (i_st + 0.5 * ik) ** 2
            losses[2 * k + 1] = p.r_on * (i_st - 0.5 * ik) ** 2
    return losses


def steady_state_currents(t: float, p: CircuitParams, v_dc: float | None = None) -> np.ndarray:
    """Fundamental-frequency steady-state phase currents under full modulation.

    Used to warm-start runs so that the load is already in periodic operation
    at ``t=0``.
    """
    v_dc = p.v_source if v_dc is None else v_dc
    w = 2 * np.pi * p.emf_freq
    z = complex(p.r_load + p.r_on, w * p.l_load)
    amp = (p.mod_index * v_dc / 2.0 - p.emf_amplitude) / z
    k = np.arange(p.n_phases)
    theta = w * t - 2 * np.pi * k / p.n_phases
    return np.abs(amp) * np.sin(theta + np.angle(amp))
