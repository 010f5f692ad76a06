import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaseguard.circuit import CircuitParams, Gate
from phaseguard.faults import (
    NEVER,
    FaultEvent,
    GateInjection,
    Measurements,
    Overcurrent,
    Overvoltage,
    PhaseOpen,
    SensorSpoof,
    SwitchShortCircuit,
    ThermalOverload,
    apply_active_faults,
    effective_leg,
    r_th_multiplier,
    validate_scenario,
)

P = CircuitParams()
H, L, OFF, ON = Gate.HIGH_ON, Gate.LOW_ON, Gate.BOTH_OFF, Gate.BOTH_ON


def meas(n=5):
    return Measurements(400.0, np.zeros(n), np.full(2 * n, 25.0))


class TestValidate:
    def test_valid(self):
        evs = [FaultEvent(SwitchShortCircuit(2), 0.1), FaultEvent(Overvoltage(50.0), 0.2, 0.3)]
        assert validate_scenario(evs, P) == []

    def test_leg_out_of_range(self):
        errs = validate_scenario([FaultEvent(PhaseOpen(9), 0.1)], P)
        assert len(errs) == 1 and "leg out of range" in errs[0]

    def test_clear_before_start(self):
        errs = validate_scenario([FaultEvent(Overcurrent(2.0), 0.3, 0.2)], P)
        assert any("t_clear" in e for e in errs)

    def test_contradictory_same_leg(self):
        evs = [FaultEvent(SwitchShortCircuit(1), 0.1, 0.5), FaultEvent(PhaseOpen(1), 0.2, 0.6)]
        assert any("contradictory" in e for e in validate_scenario(evs, P))

    def test_same_leg_disjoint_ok(self):
        evs = [FaultEvent(SwitchShortCircuit(1), 0.1, 0.2), FaultEvent(PhaseOpen(1), 0.2, 0.6)]
        assert validate_scenario(evs, P) == []

    def test_overlapping_same_class(self):
        evs = [FaultEvent(Overvoltage(10.0), 0.1), FaultEvent(Overvoltage(20.0), 0.2)]
        assert any("cannot be told apart" in e for e in validate_scenario(evs, P))

    def test_bad_channel(self):
        assert validate_scenario([FaultEvent(SensorSpoof("i7", 1.0), 0.0)], P)
        assert validate_scenario([FaultEvent(SensorSpoof("q", 1.0), 0.0)], P)
        assert not validate_scenario([FaultEvent(SensorSpoof("i4", 1.0), 0.0)], P)

    def test_bad_magnitudes(self):
        assert validate_scenario([FaultEvent(Overcurrent(0.0), 0.0)], P)
        assert validate_scenario([FaultEvent(ThermalOverload(-1.0), 0.0)], P)
        assert validate_scenario([FaultEvent(SwitchShortCircuit(0, "Middle"), 0.0)], P)


class TestEffectiveLeg:
    def test_passthrough(self):
        for g in (0, 1):
            assert effective_leg(g, -1, False, False, False) == g

    def test_low_short_with_high_command(self):
        assert effective_leg(1, -1, False, False, True) == 3

    def test_low_short_with_low_command(self):
        assert effective_leg(0, -1, False, False, True) == 0

    def test_open_leg(self):
        assert effective_leg(1, -1, True, False, False) == 2

    def test_open_leg_with_short_still_conducts(self):
        assert effective_leg(1, -1, True, True, False) == 1

    def test_injection_overrides_command(self):
        assert effective_leg(0, 3, False, False, False) == 3


class TestApply:
    def test_no_faults_is_identity(self):
        gates = (H, L, H, L, H)
        params, eff, m = apply_active_faults(0.1, [], P, gates, meas())
        assert params is P and eff == gates and m.v_dc == 400.0

    def test_surge_and_load_drop(self):
        evs = [FaultEvent(Overvoltage(100.0), 0.1), FaultEvent(Overcurrent(2.5), 0.1)]
        params, _, _ = apply_active_faults(0.2, evs, P, (L,) * 5, meas())
        assert params.v_source == P.v_source + 100.0
        assert params.r_load == pytest.approx(P.r_load / 2.5)

    def test_short_circuit(self):
        evs = [FaultEvent(SwitchShortCircuit(2, "Low"), 0.1)]
        _, eff, _ = apply_active_faults(0.2, evs, P, (H,) * 5, meas())
        assert eff == (H, H, ON, H, H)

    def test_inactive_before_start(self):
        evs = [FaultEvent(PhaseOpen(0), 0.1)]
        _, eff, _ = apply_active_faults(0.05, evs, P, (H,) * 5, meas())
        assert eff == (H,) * 5

    def test_spoof_only_touches_measurements(self):
        evs = [FaultEvent(SensorSpoof("v_dc", 50.0), 0.0), FaultEvent(SensorSpoof("i1", 20.0), 0.0),
               FaultEvent(SensorSpoof("t_junction", 5.0), 0.0)]
        m0 = meas()
        params, eff, m = apply_active_faults(0.1, evs, P, (L,) * 5, m0)
        assert params is P and eff == (L,) * 5
        assert m.v_dc == 450.0 and m.i_phase[1] == 20.0 and np.all(m.t_junction == 30.0)
        assert m0.v_dc == 400.0 and m0.i_phase[1] == 0.0

    def test_r_th_multiplier(self):
        evs = [FaultEvent(ThermalOverload(3.0), 0.1, 0.2)]
        assert r_th_multiplier(0.15, evs) == 3.0
        assert r_th_multiplier(0.2, evs) == 1.0


event_st = st.one_of(
    st.builds(SwitchShortCircuit, st.integers(0, 4), st.sampled_from(["High", "Low"])),
    st.builds(PhaseOpen, st.integers(0, 4)),
    st.builds(Overcurrent, st.floats(1.0, 5.0)),
    st.builds(Overvoltage, st.floats(-100, 200)),
    st.builds(ThermalOverload, st.floats(1.0, 5.0)),
    st.builds(SensorSpoof, st.sampled_from(["v_dc", "i0", "i3", "t_junction"]), st.floats(-50, 50)),
    st.builds(GateInjection, st.integers(0, 4), st.sampled_from(list(Gate))),
).flatmap(lambda k: st.tuples(st.just(k), st.floats(0, 1), st.one_of(st.none(), st.floats(0.001, 1))))


def make_event(case):
    kind, t0, span = case
    return FaultEvent(kind, t0, NEVER if span is None else t0 + span)


gates_st = st.tuples(*[st.sampled_from([H, L])] * 5)


@given(st.lists(event_st, max_size=4), gates_st)
def test_cleared_faults_leave_no_trace(cases, gates):
    evs = [make_event(s) for s in cases]
    t = max([ev.t_clear for ev in evs if math.isfinite(ev.t_clear)], default=0.0) + 1e-3
    still = [ev for ev in evs if ev.active(t)]
    assert apply_active_faults(t, evs, P, gates, meas())[:2] == apply_active_faults(t, still, P, gates, meas())[:2]
    if not still:
        params, eff, m = apply_active_faults(t, evs, P, gates, meas())
        assert params == P and eff == gates and m.v_dc == 400.0


@given(st.lists(event_st, max_size=4), gates_st, st.floats(0, 2))
def test_apply_is_idempotent_on_gates(cases, gates, t):
    """Re-applying to already-effective gates changes nothing further."""
    evs = [make_event(s) for s in cases if not isinstance(s[0], GateInjection)]
    _, eff, _ = apply_active_faults(t, evs, P, gates, meas())
    _, eff2, _ = apply_active_faults(t, evs, P, eff, meas())
    assert eff2 == eff


@given(event_st)
def test_json_round_trip(case):
    ev = make_event(case)
    assert FaultEvent.from_dict(ev.to_dict()) == ev


def test_from_dict_errors():
    with pytest.raises(ValueError, match="unknown fault kind"):
        FaultEvent.from_dict({"kind": "Meteor", "t_start": 0})
    with pytest.raises(ValueError, match="unknown gate state"):
        FaultEvent.from_dict({"kind": "GateInjection", "leg": 0, "forced": "Sideways", "t_start": 0})
    with pytest.raises(ValueError):
        FaultEvent.from_dict({"kind": "PhaseOpen", "lge": 0, "t_start": 0})
